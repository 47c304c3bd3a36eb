//! Synthetic formant-based corpus generator.
//!
//! Vowel-like classes are mixtures of 2-3 formant sinusoids, fricatives are
//! resonator-filtered noise, plosives are a short closure followed by a
//! decaying noise burst. Each class gets its own spectral parameters so
//! classes are separable under MFCC, while per-instance jitter in formant
//! frequency, gain, phase and noise keeps the task from being trivial.

use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::audio::{AudioBuffer, REFERENCE_RATE};
use super::inventory::{PhonemeClass, PhonemeInventory, Subgroup};
use super::manifest::{Annotation, AnnotationSet};
use crate::error::{Error, Result};

pub const SYNTH_SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum SoundModel {
    Vowel { formants: Vec<f64> },
    Approximant { formants: Vec<f64> },
    Nasal { murmur_hz: f64, formants: Vec<f64> },
    Trill { formants: Vec<f64>, rate_hz: f64 },
    Fricative { center_hz: f64, bandwidth_hz: f64 },
    Affricate { center_hz: f64, bandwidth_hz: f64 },
    Plosive { burst_hz: f64, bandwidth_hz: f64 },
    Silence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthClass {
    pub label: String,
    pub proportion: f64,
    #[serde(flatten)]
    pub model: SoundModel,
}

/// Versioned generator configuration (TOML on disk).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub version: u32,
    #[serde(default = "default_rate")]
    pub sample_rate: u32,
    pub total: usize,
    #[serde(default = "default_min_ms")]
    pub min_duration_ms: f64,
    #[serde(default = "default_max_ms")]
    pub max_duration_ms: f64,
    #[serde(default = "default_per_file")]
    pub phonemes_per_file: usize,
    #[serde(default = "default_noise")]
    pub noise_level: f64,
    #[serde(rename = "class")]
    pub classes: Vec<SynthClass>,
}

fn default_rate() -> u32 {
    REFERENCE_RATE
}
fn default_min_ms() -> f64 {
    50.0
}
fn default_max_ms() -> f64 {
    150.0
}
fn default_per_file() -> usize {
    50
}
fn default_noise() -> f64 {
    0.01
}

/// Published class distribution: vowels 39% (rounded 8, unrounded 31),
/// consonants 47%, silence 14%.
const VOWEL_SHARES: [(Subgroup, f64); 2] = [(Subgroup::Rounded, 0.08), (Subgroup::Unrounded, 0.31)];
const CONSONANT_SHARES: [(Subgroup, f64); 6] = [
    (Subgroup::Affricate, 0.02),
    (Subgroup::Approximant, 0.08),
    (Subgroup::Fricative, 0.08),
    (Subgroup::Nasal, 0.07),
    (Subgroup::Plosive, 0.17),
    (Subgroup::Trill, 0.06),
];
const CONSONANT_TOTAL: f64 = 0.47;
const SILENCE_SHARE: f64 = 0.14;

fn vowel_formants(label: &str, k: usize) -> Vec<f64> {
    match label {
        "i" => vec![280.0, 2250.0, 2900.0],
        "e" => vec![400.0, 2050.0, 2650.0],
        "ɛ" => vec![580.0, 1800.0, 2500.0],
        "a" => vec![780.0, 1250.0, 2550.0],
        "ə" => vec![500.0, 1500.0, 2450.0],
        "u" => vec![310.0, 800.0, 2250.0],
        "o" => vec![450.0, 880.0, 2400.0],
        "œ" => vec![520.0, 1450.0, 2250.0],
        _ => vec![
            300.0 + 70.0 * k as f64,
            900.0 + 260.0 * k as f64,
            2300.0 + 90.0 * k as f64,
        ],
    }
}

fn default_model(class: &PhonemeClass, k: usize) -> SoundModel {
    let kf = k as f64;
    match class.subgroup {
        Some(Subgroup::Rounded) | Some(Subgroup::Unrounded) => SoundModel::Vowel {
            formants: vowel_formants(&class.label, k),
        },
        Some(Subgroup::Approximant) => SoundModel::Approximant {
            formants: vec![320.0 + 60.0 * kf, 700.0 + 700.0 * kf, 2600.0 - 200.0 * kf],
        },
        Some(Subgroup::Nasal) => SoundModel::Nasal {
            murmur_hz: 240.0 + 30.0 * kf,
            formants: vec![1000.0 + 450.0 * kf],
        },
        Some(Subgroup::Trill) => SoundModel::Trill {
            formants: vec![450.0 + 100.0 * kf, 1300.0 + 300.0 * kf],
            rate_hz: 25.0 + 5.0 * kf,
        },
        Some(Subgroup::Fricative) => SoundModel::Fricative {
            center_hz: 2500.0 + 1700.0 * kf,
            bandwidth_hz: 900.0 + 300.0 * kf,
        },
        Some(Subgroup::Affricate) => SoundModel::Affricate {
            center_hz: 3500.0 + 2500.0 * kf,
            bandwidth_hz: 1200.0,
        },
        Some(Subgroup::Plosive) => SoundModel::Plosive {
            burst_hz: 900.0 + 900.0 * kf,
            bandwidth_hz: 700.0,
        },
        None => SoundModel::Silence,
    }
}

impl SynthSpec {
    /// A spec over every class of `inventory` following the published
    /// category and subgroup shares, split evenly among the classes of each
    /// subgroup. Consonant subgroup shares are rescaled to sum to 47%.
    pub fn default_for(inventory: &PhonemeInventory, total: usize) -> Self {
        let consonant_raw: f64 = CONSONANT_SHARES.iter().map(|(_, s)| s).sum();
        let share_of = |g: Subgroup| -> f64 {
            VOWEL_SHARES
                .iter()
                .find(|(s, _)| *s == g)
                .map(|(_, f)| *f)
                .or_else(|| {
                    CONSONANT_SHARES
                        .iter()
                        .find(|(s, _)| *s == g)
                        .map(|(_, f)| f * CONSONANT_TOTAL / consonant_raw)
                })
                .unwrap_or(0.0)
        };
        let present = inventory.subgroups();
        let present_total: f64 =
            present.iter().map(|g| share_of(*g)).sum::<f64>() + SILENCE_SHARE;

        let mut classes = Vec::with_capacity(inventory.len());
        for (i, class) in inventory.classes().iter().enumerate() {
            let (share, members, k) = match class.subgroup {
                Some(g) => {
                    let members = inventory.members_of_subgroup(g);
                    let k = members.iter().position(|&m| m == i).unwrap_or(0);
                    (share_of(g), members.len(), k)
                }
                None => (SILENCE_SHARE, 1, 0),
            };
            classes.push(SynthClass {
                label: class.label.clone(),
                proportion: share / members as f64 / present_total,
                model: default_model(class, k),
            });
        }
        Self {
            version: SYNTH_SPEC_VERSION,
            sample_rate: REFERENCE_RATE,
            total,
            min_duration_ms: default_min_ms(),
            max_duration_ms: default_max_ms(),
            phonemes_per_file: default_per_file(),
            noise_level: default_noise(),
            classes,
        }
    }

    /// Spec over a subset of labels with explicit proportions; sound models
    /// come from the defaults for each label's subgroup.
    pub fn from_proportions(
        inventory: &PhonemeInventory,
        proportions: &[(&str, f64)],
        total: usize,
    ) -> Result<Self> {
        let mut classes = Vec::new();
        for &(label, proportion) in proportions {
            let idx = inventory
                .index_of(label)
                .ok_or_else(|| Error::Spec(format!("label `{label}` not in inventory")))?;
            let class = inventory.class(idx);
            let k = class
                .subgroup
                .map(|g| {
                    inventory
                        .members_of_subgroup(g)
                        .iter()
                        .position(|&m| m == idx)
                        .unwrap_or(0)
                })
                .unwrap_or(0);
            classes.push(SynthClass {
                label: label.to_string(),
                proportion,
                model: default_model(class, k),
            });
        }
        let spec = Self {
            classes,
            ..Self::default_for(inventory, total)
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SYNTH_SPEC_VERSION {
            return Err(Error::Spec(format!(
                "unsupported synth spec version {} (expected {SYNTH_SPEC_VERSION})",
                self.version
            )));
        }
        if self.classes.is_empty() {
            return Err(Error::Spec("no classes".into()));
        }
        if self.sample_rate == 0 || self.phonemes_per_file == 0 {
            return Err(Error::Spec("sample_rate and phonemes_per_file must be positive".into()));
        }
        if !(self.min_duration_ms > 0.0 && self.max_duration_ms >= self.min_duration_ms) {
            return Err(Error::Spec("need 0 < min_duration_ms <= max_duration_ms".into()));
        }
        if !(0.0..1.0).contains(&self.noise_level) {
            return Err(Error::Spec("noise_level must be in [0, 1)".into()));
        }
        if self.classes.iter().any(|c| !(c.proportion >= 0.0)) {
            return Err(Error::Spec("proportions must be non-negative".into()));
        }
        let sum: f64 = self.classes.iter().map(|c| c.proportion).sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Spec(format!("proportions sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// Per-class instance counts by largest-remainder apportionment, so
    /// every count is within one of `proportion * total`. Ties go to the
    /// earlier class.
    pub fn class_counts(&self) -> Vec<usize> {
        let exact: Vec<f64> = self
            .classes
            .iter()
            .map(|c| c.proportion * self.total as f64)
            .collect();
        let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..exact.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().take(self.total.saturating_sub(assigned)) {
            counts[i] += 1;
        }
        counts
    }
}

/// Generated audio plus matching labels and the inventory restricted to the
/// spec's classes.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub audio: Vec<(String, AudioBuffer)>,
    pub annotations: AnnotationSet,
    pub inventory: PhonemeInventory,
}

impl SyntheticCorpus {
    pub fn audio_by_id(&self, id: &str) -> Option<&AudioBuffer> {
        self.audio.iter().find(|(k, _)| k == id).map(|(_, a)| a)
    }

    /// Writes `<id>.wav` files, `manifest.tsv` and `inventory.tsv`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (id, audio) in &self.audio {
            audio.write_wav(dir.join(format!("{id}.wav")))?;
        }
        self.annotations.write(dir.join("manifest.tsv"))?;
        std::fs::write(dir.join("inventory.tsv"), self.inventory.to_tsv())?;
        Ok(())
    }
}

/// Deterministic corpus for `(spec, seed)`. Labels come from `base`; the
/// returned inventory keeps only the spec's classes (plus silence).
pub fn generate_synthetic_dataset(
    spec: &SynthSpec,
    base: &PhonemeInventory,
    seed: u64,
) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut kept = Vec::new();
    for c in &spec.classes {
        let idx = base
            .index_of(&c.label)
            .ok_or_else(|| Error::Spec(format!("label `{}` not in inventory", c.label)))?;
        kept.push(idx);
    }
    let silence = base.silence_index();
    if !kept.contains(&silence) {
        kept.push(silence);
    }
    let mut sorted = kept.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != kept.len() {
        return Err(Error::Spec("duplicate class label".into()));
    }
    let inventory = PhonemeInventory::new(sorted.iter().map(|&i| base.class(i).clone()).collect())?;

    let counts = spec.class_counts();
    let mut order: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(ci, &n)| std::iter::repeat(ci).take(n))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let rate = spec.sample_rate as f64;
    let mut audio = Vec::new();
    let mut annotations = Vec::with_capacity(order.len());
    for (file_no, chunk) in order.chunks(spec.phonemes_per_file).enumerate() {
        let id = format!("synth_{file_no:04}");
        let mut samples = Vec::new();
        for &ci in chunk {
            let class = &spec.classes[ci];
            let ms = rng.gen_range(spec.min_duration_ms..=spec.max_duration_ms);
            let n = ((ms / 1000.0) * rate).round().max(1.0) as usize;
            let start_idx = samples.len();
            samples.extend(render(&class.model, n, rate, spec.noise_level, &mut rng));
            let label = class.label.clone();
            annotations.push(Annotation {
                audio_id: id.clone(),
                start: start_idx as f64 / rate,
                end: samples.len() as f64 / rate,
                class: inventory.index_of(&label).expect("kept"),
                label,
            });
        }
        let buffer = AudioBuffer::new(samples, spec.sample_rate)?.quantized();
        audio.push((id, buffer));
    }
    let annotations = AnnotationSet::new(annotations, &inventory)?;
    Ok(SyntheticCorpus {
        audio,
        annotations,
        inventory,
    })
}

struct Resonator {
    a1: f64,
    a2: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(center: f64, bandwidth: f64, rate: f64) -> Self {
        let r = (-PI * bandwidth / rate).exp();
        let theta = 2.0 * PI * center / rate;
        Self {
            a1: 2.0 * r * theta.cos(),
            a2: -r * r,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(rand_distr::StandardNormal)
}

fn filtered_noise(n: usize, center: f64, bw: f64, rate: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut res = Resonator::new(center, bw, rate);
    let mut out: Vec<f64> = (0..n).map(|_| res.step(gaussian(rng))).collect();
    let rms = (out.iter().map(|x| x * x).sum::<f64>() / n.max(1) as f64).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|x| *x /= rms);
    }
    out
}

fn formant_mix(n: usize, formants: &[f64], rate: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    const WEIGHTS: [f64; 4] = [1.0, 0.6, 0.35, 0.2];
    let partials: Vec<(f64, f64, f64)> = formants
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let jitter = 1.0 + rng.gen_range(-0.04..0.04);
            let phase = rng.gen_range(0.0..2.0 * PI);
            (2.0 * PI * f * jitter / rate, phase, WEIGHTS[i.min(3)])
        })
        .collect();
    let norm: f64 = partials.iter().map(|p| p.2).sum();
    (0..n)
        .map(|t| {
            partials
                .iter()
                .map(|&(w, ph, a)| a * (w * t as f64 + ph).sin())
                .sum::<f64>()
                / norm
        })
        .collect()
}

fn render(model: &SoundModel, n: usize, rate: f64, noise: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gain = rng.gen_range(0.5..1.0);
    let mut x = match model {
        SoundModel::Vowel { formants } => {
            let g = 0.6 * gain;
            formant_mix(n, formants, rate, rng).into_iter().map(|v| v * g).collect()
        }
        SoundModel::Approximant { formants } => {
            let g = 0.3 * gain;
            formant_mix(n, formants, rate, rng).into_iter().map(|v| v * g).collect()
        }
        SoundModel::Nasal { murmur_hz, formants } => {
            let mut f = vec![*murmur_hz];
            f.extend_from_slice(formants);
            let g = 0.35 * gain;
            formant_mix(n, &f, rate, rng).into_iter().map(|v| v * g).collect()
        }
        SoundModel::Trill { formants, rate_hz } => {
            let g = 0.4 * gain;
            let w = 2.0 * PI * rate_hz / rate;
            let ph = rng.gen_range(0.0..2.0 * PI);
            formant_mix(n, formants, rate, rng)
                .into_iter()
                .enumerate()
                .map(|(t, v)| v * g * (0.55 + 0.45 * (w * t as f64 + ph).sin()))
                .collect()
        }
        SoundModel::Fricative { center_hz, bandwidth_hz } => {
            let g = 0.15 * gain;
            filtered_noise(n, *center_hz, *bandwidth_hz, rate, rng)
                .into_iter()
                .map(|v| v * g)
                .collect()
        }
        SoundModel::Affricate { center_hz, bandwidth_hz } => {
            let closure = ((0.003 * rate) as usize).min(n);
            let g = 0.15 * gain;
            let mut v = vec![0.0; closure];
            v.extend(
                filtered_noise(n - closure, *center_hz, *bandwidth_hz, rate, rng)
                    .into_iter()
                    .map(|s| s * g),
            );
            v
        }
        SoundModel::Plosive { burst_hz, bandwidth_hz } => {
            let closure = ((rng.gen_range(0.004..0.008) * rate) as usize).min(n);
            let tau = 0.012 * rate;
            let g = 0.3 * gain;
            let mut v = vec![0.0; closure];
            v.extend(
                filtered_noise(n - closure, *burst_hz, *bandwidth_hz, rate, rng)
                    .into_iter()
                    .enumerate()
                    .map(|(t, s)| s * g * (-(t as f64) / tau).exp()),
            );
            v
        }
        SoundModel::Silence => vec![0.0; n],
    };
    // 2 ms raised-cosine edges
    let ramp = ((0.002 * rate) as usize).min(n / 2);
    for i in 0..ramp {
        let w = 0.5 - 0.5 * (PI * i as f64 / ramp as f64).cos();
        x[i] *= w;
        x[n - 1 - i] *= w;
    }
    for v in &mut x {
        *v = (*v + noise * gaussian(rng)).clamp(-0.99, 0.99);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::inventory::Category;

    #[test]
    fn small_spec_counts_and_determinism() {
        let inv = PhonemeInventory::default_inventory();
        let spec = SynthSpec::from_proportions(&inv, &[("a", 0.5), ("s", 0.25), ("SIL", 0.25)], 100).unwrap();
        let c1 = generate_synthetic_dataset(&spec, &inv, 7).unwrap();
        let c2 = generate_synthetic_dataset(&spec, &inv, 7).unwrap();
        let stats = c1.annotations.stats();
        assert_eq!(stats.count_of("a"), 50);
        assert_eq!(stats.count_of("s"), 25);
        assert_eq!(stats.count_of("SIL"), 25);
        assert_eq!(c1.annotations, c2.annotations);
        assert_eq!(c1.audio, c2.audio);
        assert_eq!(c1.inventory.len(), 3);
    }

    #[test]
    fn different_seeds_differ_in_samples_not_counts() {
        let inv = PhonemeInventory::default_inventory();
        let spec = SynthSpec::from_proportions(&inv, &[("a", 0.5), ("s", 0.25), ("SIL", 0.25)], 100).unwrap();
        let c1 = generate_synthetic_dataset(&spec, &inv, 1).unwrap();
        let c2 = generate_synthetic_dataset(&spec, &inv, 2).unwrap();
        assert_ne!(c1.audio, c2.audio);
        assert_eq!(c1.annotations.stats(), c2.annotations.stats());
    }

    #[test]
    fn default_spec_matches_published_category_split() {
        let inv = PhonemeInventory::default_inventory();
        let spec = SynthSpec::default_for(&inv, 2520);
        spec.validate().unwrap();
        let counts = spec.class_counts();
        assert_eq!(counts.iter().sum::<usize>(), 2520);
        let by_cat = |cat: Category| -> i64 {
            inv.members_of_category(cat).iter().map(|&i| counts[i] as i64).sum()
        };
        assert!((by_cat(Category::Vowel) - 983).abs() <= 1);
        assert!((by_cat(Category::Consonant) - 1184).abs() <= 1);
        assert!((by_cat(Category::Silence) - 353).abs() <= 1);
        for (c, &n) in spec.classes.iter().zip(&counts) {
            assert!((n as f64 - c.proportion * 2520.0).abs() <= 1.0);
        }
    }

    #[test]
    fn bad_proportions_rejected() {
        let inv = PhonemeInventory::default_inventory();
        let err = SynthSpec::from_proportions(&inv, &[("a", 0.5), ("s", 0.4)], 10).unwrap_err();
        assert!(matches!(err, Error::Spec(_)));
    }

    #[test]
    fn toml_round_trip() {
        let inv = PhonemeInventory::default_inventory();
        let spec = SynthSpec::default_for(&inv, 500);
        let again = SynthSpec::parse(&spec.to_toml()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn annotations_tile_the_audio() {
        let inv = PhonemeInventory::default_inventory();
        let spec = SynthSpec::default_for(&inv, 120);
        let corpus = generate_synthetic_dataset(&spec, &inv, 3).unwrap();
        assert_eq!(corpus.annotations.len(), 120);
        for (id, audio) in &corpus.audio {
            let last = corpus
                .annotations
                .annotations()
                .iter()
                .filter(|a| &a.audio_id == id)
                .map(|a| a.end)
                .fold(0.0, f64::max);
            assert!((last - audio.duration_s()).abs() < 1e-9);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn apportionment_within_one(
            weights in proptest::collection::vec(0.01f64..1.0, 2..12),
            total in 1usize..3000,
        ) {
            let sum: f64 = weights.iter().sum();
            let inv = PhonemeInventory::default_inventory();
            let mut spec = SynthSpec::default_for(&inv, total);
            spec.classes.truncate(weights.len());
            for (c, w) in spec.classes.iter_mut().zip(&weights) {
                c.proportion = w / sum;
            }
            let counts = spec.class_counts();
            proptest::prop_assert_eq!(counts.iter().sum::<usize>(), total);
            for (c, &n) in spec.classes.iter().zip(&counts) {
                proptest::prop_assert!((n as f64 - c.proportion * total as f64).abs() <= 1.0);
            }
        }
    }
}
