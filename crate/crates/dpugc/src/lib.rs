//! File formats, configuration and the `dpugc` command-line front end for
//! [`dpugc_core`].
//!
//! Models are stored in word2vec text format with a JSON metadata file next
//! to each one (`checkpoint-000500.txt` + `checkpoint-000500.json`) carrying
//! the full training configuration, a corpus fingerprint and the privacy
//! statement.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod metadata;

pub use error::{AppError, AppResult};
