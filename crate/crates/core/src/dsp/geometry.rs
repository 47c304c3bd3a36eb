use crate::error::{Error, Result};

/// Number of frames a window is split into.
pub const FRAMES_PER_WINDOW: usize = 4;

/// Sample counts for the window / frame / segment layout at a given rate.
///
/// At 44.1 kHz: a 1102-sample window holds four 441-sample frames at a hop
/// of 220 samples (offsets 0, 220, 440, 660), and each frame holds
/// 441 - 110 + 1 = 332 one-sample-hop segments of 110 samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub window: usize,
    pub frame: usize,
    pub hop: usize,
    pub segment: usize,
}

impl Geometry {
    pub const REFERENCE: Geometry = Geometry {
        window: 1102,
        frame: 441,
        hop: 220,
        segment: 110,
    };

    /// Millisecond layout (25 / 10 / 5 / 2.5 ms) floored to whole samples.
    pub fn for_rate(sample_rate: u32) -> Self {
        let n = |ms: f64| (ms * sample_rate as f64 / 1000.0).floor() as usize;
        Self {
            window: n(25.0),
            frame: n(10.0),
            hop: n(5.0),
            segment: n(2.5),
        }
    }

    pub fn frame_offsets(&self) -> [usize; FRAMES_PER_WINDOW] {
        std::array::from_fn(|i| i * self.hop)
    }

    /// Minimum window length that holds all frames.
    pub fn required_window(&self) -> usize {
        (FRAMES_PER_WINDOW - 1) * self.hop + self.frame
    }

    pub fn segments_per_frame(&self) -> usize {
        self.frame - self.segment + 1
    }
}

impl Default for Geometry {
    fn default() -> Self {
        Self::REFERENCE
    }
}

/// Four overlapping frames borrowed from one window.
#[derive(Debug, Clone, Copy)]
pub struct FrameSet<'a, T> {
    pub frames: [&'a [T]; FRAMES_PER_WINDOW],
    pub offsets: [usize; FRAMES_PER_WINDOW],
}

impl<'a, T> FrameSet<'a, T> {
    pub fn iter(&self) -> impl Iterator<Item = &'a [T]> + '_ {
        self.frames.iter().copied()
    }
}

pub fn partition_window<T>(window: &[T]) -> Result<FrameSet<'_, T>> {
    partition_window_with(window, &Geometry::REFERENCE)
}

pub fn partition_window_with<'a, T>(window: &'a [T], geometry: &Geometry) -> Result<FrameSet<'a, T>> {
    let need = geometry.required_window();
    if window.len() < need {
        return Err(Error::Geometry(format!(
            "window of {} samples is shorter than the {need} needed for {FRAMES_PER_WINDOW} frames",
            window.len()
        )));
    }
    let offsets = geometry.frame_offsets();
    let frames = offsets.map(|o| &window[o..o + geometry.frame]);
    Ok(FrameSet { frames, offsets })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_geometry_from_rate() {
        assert_eq!(Geometry::for_rate(44_100), Geometry::REFERENCE);
        let g = Geometry::REFERENCE;
        assert_eq!(g.frame_offsets(), [0, 220, 440, 660]);
        assert_eq!(g.segments_per_frame(), 332);
        assert_eq!(g.required_window(), 1101);
        // consecutive frames share 221 samples
        assert_eq!(g.frame - g.hop, 221);
    }

    #[test]
    fn ramp_frames() {
        let ramp: Vec<f64> = (0..1102).map(|i| i as f64).collect();
        let fs = partition_window(&ramp).unwrap();
        assert_eq!(fs.frames[1][0], 220.0);
        assert_eq!(fs.frames[3][0], 660.0);
        assert_eq!(*fs.frames[3].last().unwrap(), 1100.0);
        assert!(fs.iter().all(|f| f.len() == 441));
    }

    #[test]
    fn accepts_minimum_window() {
        let w = vec![0.0f32; 1101];
        assert!(partition_window(&w).is_ok());
    }

    #[test]
    fn short_window_is_geometry_error() {
        let w = vec![0.0f64; 800];
        assert!(matches!(partition_window(&w), Err(Error::Geometry(_))));
    }
}
