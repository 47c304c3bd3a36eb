//! Phoneme representation and classification benchmark toolkit.
//!
//! The crate covers the whole pipeline: annotated audio in
//! ([`dataset`]), frame- and segment-level MFCC/LPC features ([`dsp`]),
//! autoencoder bottleneck features ([`neural`]), eight classifiers
//! ([`classifiers`]) and stratified cross-validation with report rendering
//! ([`eval`]).

mod binio;
pub mod classifiers;
pub mod dataset;
pub mod dsp;
mod error;
pub mod eval;
pub mod neural;
pub mod pipeline;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision MFCC extractor.
pub type Mfcc = dsp::MfccExtractor<f64>;
/// Single-precision MFCC extractor.
pub type MfccF32 = dsp::MfccExtractor<f32>;
pub type TraditionalExtractor = dsp::TraditionalExtractor<f64>;
pub type TraditionalExtractorF32 = dsp::TraditionalExtractor<f32>;
pub type LpcResult = dsp::LpcResult<f64>;
