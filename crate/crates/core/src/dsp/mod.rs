//! Window/frame/segment geometry, MFCC and LPC extraction, and feature
//! matrix persistence.

mod features;
mod geometry;
mod lpc;
mod mfcc;
mod repr;

pub use features::{FeatureMatrix, PBFT_MAGIC, PBFT_VERSION};
pub use geometry::{partition_window, partition_window_with, FrameSet, Geometry, FRAMES_PER_WINDOW};
pub use lpc::{autocorrelation, levinson_durbin, lpc, LpcConfig, LpcResult};
pub use mfcc::{dct_matrix, hz_to_mel, mel_filterbank, mel_to_hz, mfcc, MfccConfig, MfccExtractor, MfccScratch, WindowFunction};
pub use repr::{extract_segment_level, Algo, Mode, Representation, RepresentationSpec, TraditionalExtractor};
