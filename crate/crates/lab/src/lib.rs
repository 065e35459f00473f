//! File formats, run configuration and command-line front end for the
//! [`biphoton`] simulator.

pub mod cli;
pub mod config;
pub mod dataset_csv;
mod error;
pub mod report_csv;
pub mod reproduce;

pub use config::RunConfig;
pub use error::{LabError, Result};
