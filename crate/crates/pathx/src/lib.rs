//! Std companion of `pathx-core`: file formats, knowledge-graph extraction,
//! the offline evaluation pipeline, reports and the user-trial service.

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod sparql;
pub mod trial;

pub use error::{Error, Result};
