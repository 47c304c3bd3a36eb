use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// Sample rate of the reference corpus; every geometry constant is derived
/// from it.
pub const REFERENCE_RATE: u32 = 44_100;

const PCM16_SCALE: f64 = 32768.0;

/// Mono audio normalized to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Range("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Numeric(format!("non-finite sample at index {i}")));
        }
        if let Some(i) = samples.iter().position(|s| s.abs() > 1.0) {
            return Err(Error::Range(format!(
                "sample {i} = {} outside [-1, 1]",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Reads a 16-bit PCM WAV file. Multi-channel audio is averaged down to
    /// mono. Files not at 44.1 kHz are rejected unless `resample` is set, in
    /// which case they are linearly resampled to 44.1 kHz.
    pub fn read_wav(path: impl AsRef<Path>, resample: bool) -> Result<Self> {
        let path = path.as_ref();
        let reader = WavReader::open(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        let spec = reader.spec();
        if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
            return Err(Error::Format(format!(
                "{}: 16-bit PCM required, found {:?} {}-bit",
                path.display(),
                spec.sample_format,
                spec.bits_per_sample
            )));
        }
        let channels = spec.channels.max(1) as usize;
        let raw: Vec<i16> = reader
            .into_samples::<i16>()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::from(e).context(path.display().to_string()))?;
        let mono: Vec<f64> = raw
            .chunks(channels)
            .map(|frame| {
                let sum: f64 = frame.iter().map(|&s| s as f64 / PCM16_SCALE).sum();
                sum / frame.len() as f64
            })
            .collect();
        let buffer = Self::new(mono, spec.sample_rate)?;
        if buffer.sample_rate == REFERENCE_RATE {
            Ok(buffer)
        } else if resample {
            Ok(buffer.resample_linear(REFERENCE_RATE))
        } else {
            Err(Error::Format(format!(
                "{}: sample rate {} Hz (expected {REFERENCE_RATE} Hz; pass --resample to convert)",
                path.display(),
                buffer.sample_rate
            )))
        }
    }

    /// Writes mono 16-bit PCM. Samples are quantized with the same 1/32768
    /// scale used when reading, so a buffer produced by [`Self::quantized`]
    /// survives a write/read cycle bit-exactly.
    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<()> {
        let spec = WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut writer = WavWriter::create(path, spec)?;
        for &s in &self.samples {
            writer.write_sample(to_pcm16(s))?;
        }
        writer.finalize()?;
        Ok(())
    }

    /// Snaps every sample onto the 16-bit PCM grid.
    pub fn quantized(mut self) -> Self {
        for s in &mut self.samples {
            *s = to_pcm16(*s) as f64 / PCM16_SCALE;
        }
        self
    }

    pub fn resample_linear(&self, target_rate: u32) -> Self {
        if target_rate == self.sample_rate || self.samples.is_empty() {
            return Self {
                samples: self.samples.clone(),
                sample_rate: target_rate,
            };
        }
        let ratio = self.sample_rate as f64 / target_rate as f64;
        let out_len = ((self.samples.len() as f64) / ratio).floor().max(1.0) as usize;
        let last = self.samples.len() - 1;
        let samples = (0..out_len)
            .map(|i| {
                let pos = i as f64 * ratio;
                let lo = (pos.floor() as usize).min(last);
                let hi = (lo + 1).min(last);
                let frac = pos - lo as f64;
                self.samples[lo] * (1.0 - frac) + self.samples[hi] * frac
            })
            .collect();
        Self {
            samples,
            sample_rate: target_rate,
        }
    }
}

fn to_pcm16(x: f64) -> i16 {
    (x * PCM16_SCALE).round().clamp(-32768.0, 32767.0) as i16
}
