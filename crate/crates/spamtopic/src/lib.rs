//! Dataset IO, versioned artifacts and the command-line pipeline around
//! `spamtopic-core`.

pub mod artifact;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod settings;
pub mod table;

pub use error::{Error, Result};
