//! Independent oracles shared by the core tests and the acceptance run.
#![allow(dead_code, clippy::needless_range_loop)]

#[path = "../common/mod.rs"]
pub mod common;
pub mod numeric;
pub mod path_metrics;
pub mod scorers;
