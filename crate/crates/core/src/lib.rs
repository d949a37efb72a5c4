//! Topic-based social spammer detection.
//!
//! Users' post histories are treated as documents, an LDA topic model gives
//! each user a topic distribution, and two outlier scores over that
//! distribution (GOSS across users, LOSS across topics) feed three baseline
//! classifiers evaluated by stratified cross-validation.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the command
//! line and other IO live in the `spamtopic` crate.

#![no_std]

extern crate alloc;

pub mod classify;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod lda;
pub mod matrix;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::Matrix;
