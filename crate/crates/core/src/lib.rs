//! # pitchnet
//!
//! Monophonic pitch estimation from raw 16 kHz waveforms.
//!
//! The crate contains everything needed to train and evaluate a 1-D
//! convolutional pitch tracker on synthetic data:
//!
//!   * [`signal`]: WAV I/O, windowed-sinc resampling, centered framing and
//!     per-frame normalization.
//!   * [`cents`]: the 360-bin, 20-cent pitch grid with Gaussian target
//!     encoding and weighted-average decoding.
//!   * [`network`]: tensors, the convolutional network with a hand-written
//!     backward pass, binary cross entropy and ADAM.
//!   * [`training`]: group-conditional folds, batch sampling, the early
//!     stopping loop and model persistence.
//!   * [`baseline`]: a YIN-style estimator (no HMM) used for comparison.
//!   * [`datagen`]: f0 trajectories, additive synthesis, colored noise and
//!     SNR mixing.
//!   * [`eval`]: raw pitch / raw chroma accuracy, aggregation, noise curves
//!     and first-layer filter spectra.
//!
//! Data-parallel loops (examples in a batch, frames of a track, cells of a
//! noise sweep) run on rayon when the `parallel` feature is enabled; see
//! [`par`].

pub mod baseline;
pub mod cents;
pub mod datagen;
mod error;
pub mod eval;
pub mod network;
pub mod par;
pub mod real;
pub mod signal;
pub mod training;

pub use error::{Error, Result};
pub use real::Real;
