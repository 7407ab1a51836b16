//! Energy-gated frame activity and segmental (active-frame) RMS.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{mean_square, AudioClip, AudioError, LevelDbfs};

pub const DEFAULT_FRAME_MS: f64 = 20.0;
pub const DEFAULT_THRESHOLD_DBFS: f64 = -50.0;

#[derive(Error, Debug)]
pub enum ActivityError {
    #[error("frame length {frame_ms} ms is not a whole number of samples at {rate} Hz")]
    FractionalFrame { frame_ms: f64, rate: u32 },
    #[error("clip of {samples} samples is shorter than one {frame} sample frame")]
    TooShort { samples: usize, frame: usize },
    #[error("no activity: every frame is below the activity threshold")]
    NoActivity,
    #[error("mask covers {mask_frames} frames of {frame} samples but clip only has {samples} samples")]
    MaskMismatch {
        mask_frames: usize,
        frame: usize,
        samples: usize,
    },
    #[error(transparent)]
    Audio(#[from] AudioError),
}

pub type Result<T> = std::result::Result<T, ActivityError>;

/// How speech and noise activity combine when computing segmental SNR.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentMode {
    /// Each signal's level is taken over its own active frames.
    #[default]
    PerSignal,
    /// Both levels are taken over the frames where both signals are active.
    Joint,
}

/// Frame size, threshold and mode of the activity detector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActivityParams {
    pub frame_ms: f64,
    pub threshold_dbfs: f64,
    pub mode: SegmentMode,
}

impl Default for ActivityParams {
    fn default() -> Self {
        ActivityParams {
            frame_ms: DEFAULT_FRAME_MS,
            threshold_dbfs: DEFAULT_THRESHOLD_DBFS,
            mode: SegmentMode::PerSignal,
        }
    }
}

/// Per-frame activity flags over non-overlapping frames. A trailing partial
/// frame is not represented.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivityMask {
    frame_length_samples: usize,
    active: Vec<bool>,
}

impl ActivityMask {
    pub fn new(frame_length_samples: usize, active: Vec<bool>) -> Self {
        ActivityMask {
            frame_length_samples,
            active,
        }
    }

    pub fn frame_length_samples(&self) -> usize {
        self.frame_length_samples
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn frame_count(&self) -> usize {
        self.active.len()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// Frame-wise AND of two masks of equal geometry.
    pub fn intersect(&self, other: &ActivityMask) -> ActivityMask {
        debug_assert_eq!(self.frame_length_samples, other.frame_length_samples);
        ActivityMask {
            frame_length_samples: self.frame_length_samples,
            active: self
                .active
                .iter()
                .zip(&other.active)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }
}

/// Number of samples in a `frame_ms` frame at `rate` Hz.
pub fn frame_samples(frame_ms: f64, rate: u32) -> Result<usize> {
    let exact = frame_ms * f64::from(rate) / 1000.0;
    let rounded = exact.round();
    if !(rounded >= 1.0) || (exact - rounded).abs() > 1e-9 {
        return Err(ActivityError::FractionalFrame { frame_ms, rate });
    }
    Ok(rounded as usize)
}

/// Flag each frame whose RMS level exceeds `threshold`.
pub fn detect_activity(clip: &AudioClip, threshold: LevelDbfs, frame_ms: f64) -> Result<ActivityMask> {
    let frame = frame_samples(frame_ms, clip.sample_rate_hz())?;
    if clip.len() < frame {
        return Err(ActivityError::TooShort {
            samples: clip.len(),
            frame,
        });
    }
    let active = clip
        .samples()
        .chunks_exact(frame)
        .map(|f| {
            let ms = mean_square(f);
            // an all-zero frame has no finite level and is never active
            ms > 0.0 && 10.0 * ms.log10() > threshold.0
        })
        .collect();
    Ok(ActivityMask::new(frame, active))
}

/// RMS level over the active frames of `mask` only.
pub fn segmental_rms_dbfs(clip: &AudioClip, mask: &ActivityMask) -> Result<LevelDbfs> {
    let frame = mask.frame_length_samples;
    if mask.frame_count() * frame > clip.len() {
        return Err(ActivityError::MaskMismatch {
            mask_frames: mask.frame_count(),
            frame,
            samples: clip.len(),
        });
    }
    let gathered: Vec<f64> = clip
        .samples()
        .chunks_exact(frame)
        .zip(&mask.active)
        .filter(|(_, a)| **a)
        .flat_map(|(f, _)| f.iter().copied())
        .collect();
    if gathered.is_empty() {
        return Err(ActivityError::NoActivity);
    }
    let ms = mean_square(&gathered);
    LevelDbfs::from_amplitude(ms.sqrt()).map_err(|_| ActivityError::NoActivity)
}

/// Activity masks for a speech/noise pair under `params.mode`.
pub fn pair_masks(
    speech: &AudioClip,
    noise: &AudioClip,
    params: &ActivityParams,
) -> Result<(ActivityMask, ActivityMask)> {
    let threshold = LevelDbfs(params.threshold_dbfs);
    let s = detect_activity(speech, threshold, params.frame_ms)?;
    let n = detect_activity(noise, threshold, params.frame_ms)?;
    Ok(match params.mode {
        SegmentMode::PerSignal => (s, n),
        SegmentMode::Joint => {
            let both = s.intersect(&n);
            (both.clone(), both)
        }
    })
}

/// Segmental SNR in dB of a speech/noise pair, evaluated over the given masks.
pub fn segmental_snr_with_masks(
    speech: &AudioClip,
    noise: &AudioClip,
    speech_mask: &ActivityMask,
    noise_mask: &ActivityMask,
) -> Result<f64> {
    let s = segmental_rms_dbfs(speech, speech_mask)?;
    let n = segmental_rms_dbfs(noise, noise_mask)?;
    Ok(s.0 - n.0)
}

/// Segmental SNR in dB, detecting activity on each signal afresh.
pub fn segmental_snr_db(speech: &AudioClip, noise: &AudioClip, params: &ActivityParams) -> Result<f64> {
    let (sm, nm) = pair_masks(speech, noise, params)?;
    segmental_snr_with_masks(speech, noise, &sm, &nm)
}
