//! File formats, the analysis pipeline over files, a command-line front
//! end and an HTTP service around the `isa-rhythm-core` algorithms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio_io;
pub mod cli;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod render;
pub mod service;

pub use error::{Error, Result};
