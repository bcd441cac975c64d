//! Core algorithms for speech-based Alzheimer's dementia screening baselines.
//!
//! Everything in this crate is pure computation over in-memory data and builds
//! under `no_std` with `alloc`. File formats, audio decoding and the command
//! line live in the companion `adress` crate.
//!
//! The pipeline, in order:
//!
//! - [`audio`]: volume normalization, stationary noise removal, energy VAD
//! - [`mrcg`]: gammatone cochleagrams, multi-resolution stacks, functionals
//! - [`minimal`]: vocalisation/pause timing features
//! - [`chat`]: CHAT transcript parsing and language outcome measures
//! - [`features`]: feature matrices, duration-correlation filter, scaling
//! - [`learners`]: five classifiers and five regressors
//! - [`evaluation`]: LOSO folds, segment-to-subject aggregation, metrics
//! - [`experiment`]: feature-set × model grids with report tables
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod audio;
pub mod chat;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod fft;
pub mod learners;
pub mod linalg;
pub mod math;
pub mod minimal;
pub mod mrcg;
pub mod rng;

pub use error::{Error, Result};
