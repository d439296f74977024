//! File formats and command-line front end for the guided upsampling engine.

pub mod checkpoint;
pub mod cli;
pub mod dataset;
pub mod feat;
pub mod pnm;

use thiserror::Error;

/// Failures while reading or writing files.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("malformed payload: {0}")]
    Payload(String),
    #[error("file contains non-finite values")]
    NonFinite,
    #[error("unexpected directory layout: {0}")]
    Layout(String),
    #[error(transparent)]
    Core(#[from] gup_core::Error),
}
