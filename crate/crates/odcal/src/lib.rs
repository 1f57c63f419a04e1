//! File formats, scenario directories and the command-line driver for
//! `odcal-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod runlog;
pub mod scenario_dir;
pub mod svg;

pub use error::{Error, Result};
