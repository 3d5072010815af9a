//! Monte Carlo harness, file formats and command line for the
//! `coint-rec-core` library.
//!
//! Experiments read a TOML [`config::ExperimentConfig`], run replications in
//! parallel with per-replication seeds, and write a versioned records CSV
//! plus a summary JSON that embeds the resolved config.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;

pub use error::{AppError, AppResult};
