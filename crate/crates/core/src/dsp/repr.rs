use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::geometry::{partition_window_with, Geometry, FRAMES_PER_WINDOW};
use super::lpc::{lpc, LpcConfig};
use super::mfcc::{MfccConfig, MfccExtractor, MfccScratch};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Mfcc,
    Lpc,
    /// Bottleneck of an in-repo autoencoder, identified by name.
    Bottleneck(String),
    /// Pluggable whole-segment chunk encoder, identified by name.
    External(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Frame,
    Segment,
    WholeSegment,
}

/// Declarative description of one feature-extraction pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepresentationSpec {
    pub algo: Algo,
    pub mode: Mode,
    /// Dimensions produced per frame (frame/segment modes) or per segment
    /// (whole-segment mode).
    pub unit_dim: usize,
}

impl RepresentationSpec {
    pub fn dim(&self) -> usize {
        match self.mode {
            Mode::Frame | Mode::Segment => FRAMES_PER_WINDOW * self.unit_dim,
            Mode::WholeSegment => self.unit_dim,
        }
    }
}

/// The nine named representations of the benchmark grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    MfccFrame,
    MfccSegment,
    LpcFrame,
    LpcSegment,
    AeSmall,
    AeBig,
    LstmAeSmall,
    LstmAeBig,
    External,
}

impl Representation {
    pub const ALL: [Representation; 9] = [
        Representation::MfccFrame,
        Representation::MfccSegment,
        Representation::LpcFrame,
        Representation::LpcSegment,
        Representation::AeSmall,
        Representation::AeBig,
        Representation::LstmAeSmall,
        Representation::LstmAeBig,
        Representation::External,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::MfccFrame => "mfcc-frame",
            Representation::MfccSegment => "mfcc-segment",
            Representation::LpcFrame => "lpc-frame",
            Representation::LpcSegment => "lpc-segment",
            Representation::AeSmall => "ae-small",
            Representation::AeBig => "ae-big",
            Representation::LstmAeSmall => "lstm-ae-small",
            Representation::LstmAeBig => "lstm-ae-big",
            Representation::External => "external",
        }
    }

    /// Row heading in rendered reports.
    pub fn display_name(self) -> &'static str {
        match self {
            Representation::MfccFrame => "MFCC Frame",
            Representation::MfccSegment => "MFCC Segment",
            Representation::LpcFrame => "LPC Frame",
            Representation::LpcSegment => "LPC Segment",
            Representation::AeSmall => "Small AE",
            Representation::AeBig => "Big AE",
            Representation::LstmAeSmall => "Small LSTM AE",
            Representation::LstmAeBig => "Big LSTM AE",
            Representation::External => "External",
        }
    }

    pub fn is_traditional(self) -> bool {
        matches!(
            self,
            Representation::MfccFrame
                | Representation::MfccSegment
                | Representation::LpcFrame
                | Representation::LpcSegment
        )
    }

    /// `true` when features need a trained autoencoder.
    pub fn needs_autoencoder(self) -> bool {
        matches!(
            self,
            Representation::AeSmall
                | Representation::AeBig
                | Representation::LstmAeSmall
                | Representation::LstmAeBig
        )
    }

    pub fn bottleneck(self) -> Option<usize> {
        match self {
            Representation::AeSmall | Representation::LstmAeSmall => Some(8),
            Representation::AeBig | Representation::LstmAeBig => Some(16),
            _ => None,
        }
    }

    pub fn spec(self) -> RepresentationSpec {
        let (algo, mode, unit_dim) = match self {
            Representation::MfccFrame => (Algo::Mfcc, Mode::Frame, 12),
            Representation::MfccSegment => (Algo::Mfcc, Mode::Segment, 12),
            Representation::LpcFrame => (Algo::Lpc, Mode::Frame, 8),
            Representation::LpcSegment => (Algo::Lpc, Mode::Segment, 8),
            Representation::External => (Algo::External("chunk-encoder".into()), Mode::WholeSegment, 16),
            ae => (
                Algo::Bottleneck(ae.name().to_string()),
                Mode::Segment,
                ae.bottleneck().expect("autoencoder"),
            ),
        };
        RepresentationSpec { algo, mode, unit_dim }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Representation::ALL
            .iter()
            .copied()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown representation `{s}`")))
    }
}

/// MFCC and LPC extractors sized for one geometry.
#[derive(Debug)]
pub struct TraditionalExtractor<T: Real> {
    geometry: Geometry,
    frame_mfcc: MfccExtractor<T>,
    segment_mfcc: MfccExtractor<T>,
    lpc: LpcConfig,
}

impl<T: Real> TraditionalExtractor<T> {
    pub fn new(mfcc: MfccConfig, lpc: LpcConfig, geometry: Geometry) -> Result<Self> {
        Ok(Self {
            geometry,
            frame_mfcc: MfccExtractor::new(mfcc, geometry.frame)?,
            segment_mfcc: MfccExtractor::new(mfcc, geometry.segment)?,
            lpc,
        })
    }

    pub fn reference() -> Self {
        Self::new(MfccConfig::default(), LpcConfig::default(), Geometry::REFERENCE)
            .expect("default configuration is valid")
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn frame_mfcc(&self) -> &MfccExtractor<T> {
        &self.frame_mfcc
    }

    pub fn segment_mfcc(&self) -> &MfccExtractor<T> {
        &self.segment_mfcc
    }

    pub fn lpc_config(&self) -> &LpcConfig {
        &self.lpc
    }

    fn unit_dim(&self, algo: &Algo) -> Result<usize> {
        match algo {
            Algo::Mfcc => Ok(self.frame_mfcc.n_coeffs()),
            Algo::Lpc => Ok(self.lpc.order),
            other => Err(Error::Config(format!(
                "{other:?} is not a traditional algorithm"
            ))),
        }
    }

    /// Per-frame MFCC or LPC features concatenated in frame order.
    pub fn extract_frame_level(&self, window: &[T], spec: &RepresentationSpec) -> Result<Vec<T>> {
        if spec.mode != Mode::Frame {
            return Err(Error::Config(format!("frame-level extraction got mode {:?}", spec.mode)));
        }
        let unit = self.unit_dim(&spec.algo)?;
        let frames = partition_window_with(window, &self.geometry)?;
        let mut out = Vec::with_capacity(FRAMES_PER_WINDOW * unit);
        for frame in frames.iter() {
            match spec.algo {
                Algo::Mfcc => out.extend(self.frame_mfcc.compute(frame)?),
                _ => out.extend(lpc(frame, &self.lpc)?.coeffs),
            }
        }
        Ok(out)
    }

    /// Segment-level MFCC or LPC: each frame's sliding segments averaged.
    pub fn extract_segment_level(&self, window: &[T], spec: &RepresentationSpec) -> Result<Vec<T>> {
        if spec.mode != Mode::Segment {
            return Err(Error::Config(format!("segment-level extraction got mode {:?}", spec.mode)));
        }
        match spec.algo {
            Algo::Mfcc => {
                let mut scratch: MfccScratch<T> = self.segment_mfcc.scratch();
                let mut buf = vec![T::zero(); self.segment_mfcc.n_coeffs()];
                extract_segment_level(window, &self.geometry, |seg| {
                    self.segment_mfcc.compute_into(seg, &mut scratch, &mut buf)?;
                    Ok(buf.clone())
                })
            }
            Algo::Lpc => extract_segment_level(window, &self.geometry, |seg| Ok(lpc(seg, &self.lpc)?.coeffs)),
            ref other => Err(Error::Config(format!("{other:?} is not a traditional algorithm"))),
        }
    }

    pub fn extract(&self, window: &[T], spec: &RepresentationSpec) -> Result<Vec<T>> {
        match spec.mode {
            Mode::Frame => self.extract_frame_level(window, spec),
            Mode::Segment => self.extract_segment_level(window, spec),
            Mode::WholeSegment => Err(Error::Config("whole-segment mode needs a chunk encoder".into())),
        }
    }
}

/// For each frame of `window`, applies `per_segment` to every segment at a
/// one-sample hop, averages the results, and concatenates the per-frame
/// averages.
pub fn extract_segment_level<T, F>(window: &[T], geometry: &Geometry, mut per_segment: F) -> Result<Vec<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    let frames = partition_window_with(window, geometry)?;
    let count = geometry.segments_per_frame();
    let inv = T::one() / T::lit(count as f64);
    let mut out = Vec::new();
    for frame in frames.iter() {
        let mut acc: Vec<T> = Vec::new();
        for start in 0..count {
            let v = per_segment(&frame[start..start + geometry.segment])?;
            if acc.is_empty() {
                acc = v;
            } else if v.len() != acc.len() {
                return Err(Error::Geometry(format!(
                    "segment function returned {} values, earlier {}",
                    v.len(),
                    acc.len()
                )));
            } else {
                acc.iter_mut().zip(&v).for_each(|(a, &b)| *a = *a + b);
            }
        }
        out.extend(acc.into_iter().map(|a| a * inv));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()
    }

    #[test]
    fn dims_per_representation() {
        let dims: Vec<usize> = Representation::ALL.iter().map(|r| r.spec().dim()).collect();
        assert_eq!(dims, vec![48, 48, 32, 32, 32, 64, 32, 64, 16]);
    }

    #[test]
    fn names_round_trip() {
        for r in Representation::ALL {
            assert_eq!(r.name().parse::<Representation>().unwrap(), r);
        }
        assert!("mfcc".parse::<Representation>().is_err());
    }

    #[test]
    fn frame_level_slices_match_single_frames() {
        let ex = TraditionalExtractor::<f64>::reference();
        let w = noise(1102, 1);
        let v = ex.extract_frame_level(&w, &Representation::MfccFrame.spec()).unwrap();
        assert_eq!(v.len(), 48);
        let f2 = ex.frame_mfcc().compute(&w[220..661]).unwrap();
        assert_eq!(&v[12..24], &f2[..]);
        let l = ex.extract_frame_level(&w, &Representation::LpcFrame.spec()).unwrap();
        assert_eq!(l.len(), 32);
    }

    #[test]
    fn periodic_window_gives_equal_blocks() {
        let ex = TraditionalExtractor::<f64>::reference();
        let pattern = noise(220, 2);
        let w: Vec<f64> = (0..1102).map(|i| pattern[i % 220]).collect();
        let v = ex.extract_frame_level(&w, &Representation::MfccFrame.spec()).unwrap();
        for b in 1..4 {
            for k in 0..12 {
                assert!((v[b * 12 + k] - v[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_segment_fn_repeats() {
        let w = vec![0.1f64; 1102];
        let v = extract_segment_level(&w, &Geometry::REFERENCE, |_| Ok(vec![1.0, -2.0, 3.5])).unwrap();
        assert_eq!(v, [1.0, -2.0, 3.5].repeat(4));
    }

    #[test]
    fn segment_count_is_332() {
        let w = vec![0.0f64; 1102];
        let mut calls = 0;
        extract_segment_level(&w, &Geometry::REFERENCE, |s| {
            assert_eq!(s.len(), 110);
            calls += 1;
            Ok(vec![0.0])
        })
        .unwrap();
        assert_eq!(calls, 4 * 332);
    }

    #[test]
    fn wrong_mode_is_rejected() {
        let ex = TraditionalExtractor::<f64>::reference();
        let w = vec![0.0; 1102];
        assert!(ex.extract_frame_level(&w, &Representation::MfccSegment.spec()).is_err());
        assert!(ex.extract_segment_level(&w, &Representation::LpcFrame.spec()).is_err());
        assert!(ex.extract(&w, &Representation::External.spec()).is_err());
    }
}
