use super::audio::AudioBuffer;
use super::manifest::Annotation;
use crate::error::{Error, Result};

/// Analysis window length used throughout (milliseconds).
pub const WINDOW_MS: f64 = 25.0;

/// Number of samples in a `window_ms` window: `floor(window_ms / 1000 * rate)`.
pub fn window_len(window_ms: f64, sample_rate: u32) -> usize {
    (window_ms * sample_rate as f64 / 1000.0).floor() as usize
}

fn start_index(start: f64, audio: &AudioBuffer) -> Result<usize> {
    let idx = (start * audio.sample_rate() as f64).round();
    if idx < 0.0 || idx as usize >= audio.len() {
        return Err(Error::Range(format!(
            "start {start:.6}s is beyond the end of the audio ({:.6}s)",
            audio.duration_s()
        )));
    }
    Ok(idx as usize)
}

/// Fixed-length window beginning at the phoneme onset. The window ignores
/// the phoneme's end: short phonemes still yield a full window, and windows
/// running past end-of-file are zero-padded.
pub fn slice_window(audio: &AudioBuffer, ann: &Annotation, window_ms: f64) -> Result<Vec<f64>> {
    let start = start_index(ann.start, audio)?;
    let len = window_len(window_ms, audio.sample_rate());
    let mut out = vec![0.0; len];
    let avail = (audio.len() - start).min(len);
    out[..avail].copy_from_slice(&audio.samples()[start..start + avail]);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSamples {
    pub samples: Vec<f64>,
    /// Trailing zeros appended because the annotation ran past end-of-file.
    pub padded: usize,
}

/// Every sample of the annotated phoneme, `round((end - start) * rate)`
/// samples starting at `round(start * rate)`.
pub fn slice_full_segment(audio: &AudioBuffer, ann: &Annotation) -> Result<SegmentSamples> {
    let start = start_index(ann.start, audio)?;
    let len = ((ann.end - ann.start) * audio.sample_rate() as f64).round().max(1.0) as usize;
    let avail = (audio.len() - start).min(len);
    let mut samples = vec![0.0; len];
    samples[..avail].copy_from_slice(&audio.samples()[start..start + avail]);
    let padded = len - avail;
    if padded > 0 {
        log::warn!(
            "{}: segment [{}, {}) runs {padded} samples past end of audio; zero-padded",
            ann.audio_id,
            ann.start,
            ann.end
        );
    }
    Ok(SegmentSamples { samples, padded })
}
