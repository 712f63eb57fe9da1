//! Command-line front end for `wcprox-core`: file formats, run
//! configuration, traces, the property suite and plotting exports.

pub mod commands;
pub mod config;
pub mod curves;
pub mod error;
pub mod feasibility;
pub mod formats;
pub mod solve;
pub mod specs;
pub mod suite;
pub mod trace;

pub use error::{exit, CliError, Result};
