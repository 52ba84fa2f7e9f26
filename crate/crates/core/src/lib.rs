//! Post-hoc knowledge-graph path explanations for recommender outputs.
//!
//! This crate holds the algorithmic core and is `no_std` (it needs `alloc`):
//!
//! * [`kg`]: an immutable triple store with degree, IDF and one-hop
//!   hierarchy indexes.
//! * [`dataset`]: implicit-feedback interactions, KG-coverage filtering,
//!   binarization, per-user k-fold splits and elicitation ranking.
//! * [`recommenders`]: MostPop, UserKNN, personalized PageRank, BPR-MF and
//!   EASE behind one [`recommenders::Recommender`] interface.
//! * [`explain`]: the ExpLOD, ExpLOD v2 and PEM attribute scorers and the
//!   sentence builder.
//! * [`metrics`]: the path metrics (SEP, LIR, ETD, MID, TID, TPD), ranking
//!   metrics and the Wilcoxon signed-rank test.
//! * [`trial`]: the domain model of the within-subjects explanation trial.
//!
//! File formats, HTTP and the CLI live in the `pathx` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataset;
pub mod error;
pub mod explain;
pub mod kg;
pub mod linalg;
pub mod metrics;
pub mod recommenders;
pub mod trial;

pub use error::{Error, Result};

