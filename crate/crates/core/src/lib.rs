//! Skip-gram word embeddings trained with negative sampling under three
//! regimes: plain (clipped) SGD, record-level DP-SGD, and user-level DP-SGD
//! with personalized per-user privacy budgets.
//!
//! The crate is `no_std` + `alloc`. File formats, configuration and the
//! command-line front end live in the `dpugc` crate.
//!
//! Module map:
//!
//! * [`corpus`]: tokenization, vocabulary, encoding, skip-gram pairs.
//! * [`model`]: embedding matrices, NEG loss and gradient, negative
//!   sampling, the clipped SGD baseline, nearest-neighbour queries.
//! * [`dp`]: clipping, Poisson lots, the DP-SGD step and training loops.
//! * [`accountant`]: Rényi-DP ledger for the subsampled Gaussian mechanism.
//! * [`personalized`]: per-user budget ledger and the user-level trainer.
//! * [`eval`]: MAP-Word / MAP-Char drift metrics against a gold model.
//! * [`utility`]: downstream regression (features, ridge, RMSE, synthetic
//!   labeled users).
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod accountant;
pub mod corpus;
pub mod dp;
pub mod eval;
pub mod model;
pub mod personalized;
pub mod rng;
pub mod synth;
pub mod utility;

mod error;
mod math;

pub use error::{Error, Result};
