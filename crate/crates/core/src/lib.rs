//! Rhythm analysis primitives for mono audio mixtures.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`separate`] splits a mono mixture into per-source streams with
//!    independent subspace analysis: a short-time Fourier transform
//!    ([`spectral`]), a rank reduction of the magnitude spectrogram, and an
//!    ICA rotation of the reduced spectral (or temporal) basis.
//! 2. [`onsets`] finds attack times and loudness in each stream from the
//!    relative difference function of a rectified, decimated and smoothed
//!    envelope.
//! 3. [`tatum`] tracks the lowest-level pulse of each stream from its
//!    inter-onset intervals with a leaky histogram and a modular error
//!    function.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! the HTTP service live in the `isa-rhythm` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod fft;
pub mod linalg;
pub mod onsets;
pub mod separate;
pub mod signal;
pub mod spectral;
pub mod tatum;

pub use error::{Error, Result, Warning};
pub use signal::AudioBuffer;
