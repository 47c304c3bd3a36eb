//! Whole-segment features from a fixed-size chunk encoder.
//!
//! A phoneme segment is zero-padded up to a multiple of the chunk length
//! (segments shorter than one chunk become exactly one chunk), split into
//! consecutive chunks, each chunk encoded, and the encodings averaged.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::autoencoder::Encoder;
use crate::error::{Error, Result};

/// Chunk length of the external encoder interface.
pub const EXTERNAL_CHUNK: usize = 512;
/// Encoding width of the external encoder interface.
pub const EXTERNAL_DIM: usize = 16;

/// Maps a fixed-length chunk to a fixed-length encoding.
pub trait ChunkEncoder: Send + Sync {
    fn chunk_len(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn encode_chunk(&self, chunk: &[f64]) -> Result<Vec<f64>>;

    fn name(&self) -> &str {
        "chunk-encoder"
    }
}

impl ChunkEncoder for Encoder {
    fn chunk_len(&self) -> usize {
        self.input_dim()
    }

    fn output_dim(&self) -> usize {
        self.bottleneck()
    }

    fn encode_chunk(&self, chunk: &[f64]) -> Result<Vec<f64>> {
        self.encode(chunk)
    }

    fn name(&self) -> &str {
        "autoencoder"
    }
}

pub fn external_segment_features(segment: &[f64], encoder: &dyn ChunkEncoder) -> Result<Vec<f64>> {
    if segment.is_empty() {
        return Err(Error::Data("empty segment".into()));
    }
    let len = encoder.chunk_len();
    let n_chunks = segment.len().div_ceil(len);
    let mut mean = vec![0.0; encoder.output_dim()];
    let mut chunk = vec![0.0; len];
    for c in 0..n_chunks {
        let part = &segment[c * len..((c + 1) * len).min(segment.len())];
        chunk[..part.len()].copy_from_slice(part);
        chunk[part.len()..].fill(0.0);
        let code = encoder.encode_chunk(&chunk)?;
        if code.len() != mean.len() {
            return Err(Error::Geometry(format!(
                "chunk encoder returned {} values, declared {}",
                code.len(),
                mean.len()
            )));
        }
        mean.iter_mut().zip(&code).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n_chunks as f64);
    Ok(mean)
}

/// Deterministic 512 → 16 stand-in for a pretrained encoder: log energies of
/// the Hann-windowed power spectrum pooled into 16 equal-width bands.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpectralStubEncoder;

impl ChunkEncoder for SpectralStubEncoder {
    fn chunk_len(&self) -> usize {
        EXTERNAL_CHUNK
    }

    fn output_dim(&self) -> usize {
        EXTERNAL_DIM
    }

    fn encode_chunk(&self, chunk: &[f64]) -> Result<Vec<f64>> {
        if chunk.len() != EXTERNAL_CHUNK {
            return Err(Error::Geometry(format!(
                "stub encoder expects {EXTERNAL_CHUNK} samples, got {}",
                chunk.len()
            )));
        }
        let n = EXTERNAL_CHUNK;
        let mut buf: Vec<Complex<f64>> = chunk
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos();
                Complex::new(x * w, 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let bins = n / 2;
        let per_band = bins / EXTERNAL_DIM;
        Ok((0..EXTERNAL_DIM)
            .map(|b| {
                let e: f64 = buf[1 + b * per_band..1 + (b + 1) * per_band]
                    .iter()
                    .map(|c| c.norm_sqr())
                    .sum();
                e.max(1e-10).ln()
            })
            .collect())
    }

    fn name(&self) -> &str {
        "spectral-stub"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Every output slot holds the chunk sum.
    struct SumEncoder;

    impl ChunkEncoder for SumEncoder {
        fn chunk_len(&self) -> usize {
            512
        }
        fn output_dim(&self) -> usize {
            16
        }
        fn encode_chunk(&self, chunk: &[f64]) -> Result<Vec<f64>> {
            assert_eq!(chunk.len(), 512);
            Ok(vec![chunk.iter().sum(); 16])
        }
    }

    /// Records how many chunks it saw and the zero tail of the last one.
    struct CountingEncoder(std::sync::Mutex<Vec<usize>>);

    impl ChunkEncoder for CountingEncoder {
        fn chunk_len(&self) -> usize {
            512
        }
        fn output_dim(&self) -> usize {
            1
        }
        fn encode_chunk(&self, chunk: &[f64]) -> Result<Vec<f64>> {
            let zeros = chunk.iter().rev().take_while(|&&v| v == 0.0).count();
            self.0.lock().unwrap().push(zeros);
            Ok(vec![1.0])
        }
    }

    #[test]
    fn short_segment_is_one_padded_chunk() {
        let seg: Vec<f64> = (0..300).map(|i| (i as f64 * 0.37).sin()).collect();
        let out = external_segment_features(&seg, &SumEncoder).unwrap();
        let sum: f64 = seg.iter().sum();
        assert_eq!(out.len(), 16);
        assert!(out.iter().all(|&v| (v - sum).abs() < 1e-12));
    }

    #[test]
    fn exact_multiple_averages_two_chunks() {
        let seg: Vec<f64> = (0..1024).map(|i| if i < 512 { 1.0 } else { 3.0 }).collect();
        let out = external_segment_features(&seg, &SumEncoder).unwrap();
        assert!((out[0] - (512.0 + 3.0 * 512.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn one_past_multiple_needs_three_chunks() {
        let enc = CountingEncoder(Default::default());
        let seg = vec![0.5; 1025];
        external_segment_features(&seg, &enc).unwrap();
        let seen = enc.0.lock().unwrap().clone();
        assert_eq!(seen, vec![0, 0, 511]);
    }

    #[test]
    fn empty_segment_is_data_error() {
        assert!(matches!(external_segment_features(&[], &SumEncoder), Err(Error::Data(_))));
    }

    #[test]
    fn stub_is_deterministic_and_sized() {
        let chunk: Vec<f64> = (0..512).map(|i| (i as f64 * 0.2).sin()).collect();
        let a = SpectralStubEncoder.encode_chunk(&chunk).unwrap();
        let b = SpectralStubEncoder.encode_chunk(&chunk).unwrap();
        assert_eq!(a.len(), 16);
        assert_eq!(a, b);
        assert!(SpectralStubEncoder.encode_chunk(&chunk[..511]).is_err());
    }
}
