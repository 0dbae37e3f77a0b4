//! Command-line front end for the `bellshrink` library: dataset ingestion,
//! the `fit`, `diagnose`, `compare`, `simulate` and `sample` commands, and
//! report rendering.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod error;
pub mod io;
pub mod report;

pub use error::{exit, CliError, CliResult};
