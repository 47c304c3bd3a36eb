//! Mel-frequency cepstral coefficients over a single analysis chunk.
//!
//! Pipeline: window → zero-pad to `fft_size` → power spectrum → triangular
//! mel filterbank → `ln(max(E, floor))` → orthonormal DCT-II → keep
//! `c0..c{n_coeffs-1}`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowFunction {
    /// Periodic Hann, `0.5 - 0.5 cos(2πn/N)`.
    Hann,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfccConfig {
    pub n_coeffs: usize,
    pub n_mels: usize,
    /// `None` picks the next power of two at or above the chunk length.
    pub fft_size: Option<usize>,
    pub sample_rate: u32,
    pub f_min: f64,
    /// `None` means Nyquist.
    pub f_max: Option<f64>,
    pub log_floor: f64,
    pub window: WindowFunction,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            n_coeffs: 12,
            n_mels: 26,
            fft_size: None,
            sample_rate: 44_100,
            f_min: 0.0,
            f_max: None,
            log_floor: 1e-10,
            window: WindowFunction::Hann,
        }
    }
}

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filter weights, `n_mels` rows of `fft_size / 2 + 1` bins.
/// Filter edges are spaced evenly on the mel scale; weights are evaluated at
/// each bin's centre frequency (no area normalization).
pub fn mel_filterbank(n_mels: usize, fft_size: usize, sample_rate: u32, f_min: f64, f_max: f64) -> Vec<Vec<f64>> {
    let n_bins = fft_size / 2 + 1;
    let (m_lo, m_hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate as f64 / fft_size as f64;
    (0..n_mels)
        .map(|m| {
            let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f > lo && f <= c {
                        (f - lo) / (c - lo)
                    } else if f > c && f < hi {
                        (hi - f) / (hi - c)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II basis, `n_out` rows of length `n_in`.
pub fn dct_matrix(n_out: usize, n_in: usize) -> Vec<Vec<f64>> {
    let n = n_in as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            (0..n_in)
                .map(|m| scale * (std::f64::consts::PI * k as f64 * (2 * m + 1) as f64 / (2.0 * n)).cos())
                .collect()
        })
        .collect()
}

/// Reusable buffers for [`MfccExtractor::compute_into`].
pub struct MfccScratch<T> {
    spectrum: Vec<Complex<T>>,
    fft_scratch: Vec<Complex<T>>,
    log_mel: Vec<T>,
}

/// Precomputed MFCC pipeline for one chunk length.
pub struct MfccExtractor<T: Real> {
    cfg: MfccConfig,
    chunk_len: usize,
    fft_size: usize,
    window: Vec<T>,
    /// Sparse filterbank: per filter, first bin and its weights.
    filters: Vec<(usize, Vec<T>)>,
    dct: Vec<Vec<T>>,
    fft: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for MfccExtractor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor")
            .field("cfg", &self.cfg)
            .field("chunk_len", &self.chunk_len)
            .field("fft_size", &self.fft_size)
            .finish()
    }
}

impl<T: Real> MfccExtractor<T> {
    pub fn new(cfg: MfccConfig, chunk_len: usize) -> Result<Self> {
        if cfg.n_coeffs == 0 || cfg.n_coeffs > cfg.n_mels {
            return Err(Error::Config(format!(
                "n_coeffs ({}) must be in 1..={}",
                cfg.n_coeffs, cfg.n_mels
            )));
        }
        if chunk_len == 0 {
            return Err(Error::Geometry("empty MFCC chunk".into()));
        }
        let fft_size = cfg.fft_size.unwrap_or_else(|| chunk_len.next_power_of_two());
        if !fft_size.is_power_of_two() || fft_size < chunk_len {
            return Err(Error::Config(format!(
                "fft_size {fft_size} must be a power of two >= chunk length {chunk_len}"
            )));
        }
        let nyquist = cfg.sample_rate as f64 / 2.0;
        let f_max = cfg.f_max.unwrap_or(nyquist);
        if !(cfg.f_min >= 0.0 && f_max > cfg.f_min && f_max <= nyquist) {
            return Err(Error::Config(format!("bad mel range {}..{f_max} Hz", cfg.f_min)));
        }
        if !(cfg.log_floor > 0.0) {
            return Err(Error::Config("log floor must be positive".into()));
        }
        let window = (0..chunk_len)
            .map(|n| match cfg.window {
                WindowFunction::Hann => {
                    0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / chunk_len as f64).cos()
                }
                WindowFunction::Rectangular => 1.0,
            })
            .map(T::lit)
            .collect();
        let filters = mel_filterbank(cfg.n_mels, fft_size, cfg.sample_rate, cfg.f_min, f_max)
            .into_iter()
            .map(|row| {
                let first = row.iter().position(|&w| w != 0.0).unwrap_or(0);
                let last = row.iter().rposition(|&w| w != 0.0).map_or(first, |l| l + 1);
                (first, row[first..last].iter().copied().map(T::lit).collect())
            })
            .collect();
        let dct = dct_matrix(cfg.n_coeffs, cfg.n_mels)
            .into_iter()
            .map(|row| row.into_iter().map(T::lit).collect())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(fft_size);
        Ok(Self {
            cfg,
            chunk_len,
            fft_size,
            window,
            filters,
            dct,
            fft,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    pub fn chunk_len(&self) -> usize {
        self.chunk_len
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn n_coeffs(&self) -> usize {
        self.cfg.n_coeffs
    }

    pub fn scratch(&self) -> MfccScratch<T> {
        MfccScratch {
            spectrum: vec![Complex::new(T::zero(), T::zero()); self.fft_size],
            fft_scratch: vec![Complex::new(T::zero(), T::zero()); self.fft.get_inplace_scratch_len()],
            log_mel: vec![T::zero(); self.cfg.n_mels],
        }
    }

    fn check_len(&self, chunk: &[T]) -> Result<()> {
        if chunk.len() != self.chunk_len {
            return Err(Error::Geometry(format!(
                "MFCC extractor built for {} samples, got {}",
                self.chunk_len,
                chunk.len()
            )));
        }
        Ok(())
    }

    fn fill_log_mel(&self, chunk: &[T], scratch: &mut MfccScratch<T>) {
        let zero = Complex::new(T::zero(), T::zero());
        for (slot, (&x, &w)) in scratch.spectrum.iter_mut().zip(chunk.iter().zip(&self.window)) {
            *slot = Complex::new(x * w, T::zero());
        }
        scratch.spectrum[self.chunk_len..].fill(zero);
        self.fft
            .process_with_scratch(&mut scratch.spectrum, &mut scratch.fft_scratch);
        let floor = T::lit(self.cfg.log_floor);
        for (out, (first, weights)) in scratch.log_mel.iter_mut().zip(&self.filters) {
            let energy = weights
                .iter()
                .zip(&scratch.spectrum[*first..])
                .fold(T::zero(), |acc, (&w, c)| acc + w * c.norm_sqr());
            *out = energy.max(floor).ln();
        }
    }

    /// Log mel-filterbank energies before the DCT.
    pub fn log_mel_energies(&self, chunk: &[T]) -> Result<Vec<T>> {
        self.check_len(chunk)?;
        let mut scratch = self.scratch();
        self.fill_log_mel(chunk, &mut scratch);
        Ok(scratch.log_mel)
    }

    pub fn compute_into(&self, chunk: &[T], scratch: &mut MfccScratch<T>, out: &mut [T]) -> Result<()> {
        self.check_len(chunk)?;
        if out.len() != self.cfg.n_coeffs {
            return Err(Error::Geometry(format!(
                "output slice has {} slots, need {}",
                out.len(),
                self.cfg.n_coeffs
            )));
        }
        self.fill_log_mel(chunk, scratch);
        for (o, row) in out.iter_mut().zip(&self.dct) {
            *o = row
                .iter()
                .zip(&scratch.log_mel)
                .fold(T::zero(), |acc, (&b, &l)| acc + b * l);
        }
        Ok(())
    }

    pub fn compute(&self, chunk: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.cfg.n_coeffs];
        self.compute_into(chunk, &mut self.scratch(), &mut out)?;
        Ok(out)
    }
}

/// One-shot MFCC with a fresh extractor.
pub fn mfcc<T: Real>(chunk: &[T], cfg: &MfccConfig) -> Result<Vec<T>> {
    MfccExtractor::new(*cfg, chunk.len())?.compute(chunk)
}
