//! Phoneme inventory, annotation manifests, audio ingestion and slicing,
//! and the synthetic fixture corpus.

mod audio;
mod inventory;
mod manifest;
mod slicing;
mod synth;

use std::collections::BTreeMap;
use std::path::Path;

pub use audio::{AudioBuffer, REFERENCE_RATE};
pub use inventory::{Category, PhonemeClass, PhonemeInventory, Subgroup, SILENCE_LABEL};
pub use manifest::{load_manifest, parse_manifest, Annotation, AnnotationSet, DatasetStats, MANIFEST_HEADER};
pub use slicing::{slice_full_segment, slice_window, window_len, SegmentSamples, WINDOW_MS};
pub use synth::{generate_synthetic_dataset, SoundModel, SynthClass, SynthSpec, SyntheticCorpus, SYNTH_SPEC_VERSION};

use crate::error::{Error, Result};

/// Annotations together with the audio they point into.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub inventory: PhonemeInventory,
    pub annotations: AnnotationSet,
    pub audio: BTreeMap<String, AudioBuffer>,
}

impl Corpus {
    /// Loads a manifest and every referenced `<audio_id>.wav` from
    /// `audio_dir`.
    pub fn load(
        manifest: impl AsRef<Path>,
        inventory: PhonemeInventory,
        audio_dir: impl AsRef<Path>,
        resample: bool,
    ) -> Result<Self> {
        let manifest = manifest.as_ref();
        let annotations = load_manifest(manifest, &inventory)
            .map_err(|e| e.context(manifest.display().to_string()))?;
        let mut audio = BTreeMap::new();
        for id in annotations.audio_ids() {
            let path = audio_dir.as_ref().join(format!("{id}.wav"));
            audio.insert(id.to_string(), AudioBuffer::read_wav(&path, resample)?);
        }
        Ok(Self {
            inventory,
            annotations,
            audio,
        })
    }

    pub fn audio_for(&self, ann: &Annotation) -> Result<&AudioBuffer> {
        self.audio
            .get(&ann.audio_id)
            .ok_or_else(|| Error::Data(format!("no audio loaded for `{}`", ann.audio_id)))
    }

    /// The 25 ms analysis window for every annotation, in annotation order.
    pub fn windows(&self) -> Result<Vec<Vec<f64>>> {
        self.annotations
            .annotations()
            .iter()
            .map(|a| slice_window(self.audio_for(a)?, a, WINDOW_MS))
            .collect()
    }

    pub fn full_segments(&self) -> Result<Vec<Vec<f64>>> {
        self.annotations
            .annotations()
            .iter()
            .map(|a| Ok(slice_full_segment(self.audio_for(a)?, a)?.samples))
            .collect()
    }

    pub fn sample_rate(&self) -> u32 {
        self.audio
            .values()
            .next()
            .map_or(REFERENCE_RATE, AudioBuffer::sample_rate)
    }
}

impl From<SyntheticCorpus> for Corpus {
    fn from(s: SyntheticCorpus) -> Self {
        Self {
            inventory: s.inventory,
            annotations: s.annotations,
            audio: s.audio.into_iter().collect(),
        }
    }
}
