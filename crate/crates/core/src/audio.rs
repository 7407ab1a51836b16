//! Waveform container, 16-bit PCM WAV I/O and level/gain primitives.
//!
//! Levels are RMS levels in dBFS where an RMS of 1.0 (a full-scale square
//! wave) is 0 dBFS. A full-scale sine therefore sits at about -3.01 dBFS.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The only sample rate the pipeline accepts.
pub const SAMPLE_RATE_HZ: u32 = 16_000;

/// One 16-bit quantization step on the [-1, 1] scale.
pub const QUANTIZATION_STEP: f64 = 1.0 / 32768.0;

pub const DEFAULT_CLIPPING_CEILING: f64 = 0.99;

#[derive(Error, Debug)]
pub enum AudioError {
    #[error("unsupported {field}: {found} (expected {expected})")]
    UnsupportedFormat {
        field: &'static str,
        found: String,
        expected: String,
    },
    #[error("malformed wav container {path}: {message}")]
    Parse { path: String, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("silent clip: level is undefined for an all-zero signal")]
    SilentClip,
    #[error("empty clip")]
    EmptyClip,
    #[error("sample {index} = {value} lies outside [-1, 1]; run the clipping guard first")]
    OutOfRange { index: usize, value: f64 },
    #[error("clipping ceiling {0} is outside (0, 1]")]
    InvalidCeiling(f64),
    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    RateMismatch { left: u32, right: u32 },
}

pub type Result<T> = std::result::Result<T, AudioError>;

/// An RMS level in dB relative to full scale. Always finite.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelDbfs(pub f64);

impl LevelDbfs {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Linear RMS amplitude corresponding to this level.
    pub fn amplitude(self) -> f64 {
        10f64.powf(self.0 / 20.0)
    }

    pub fn from_amplitude(rms: f64) -> Result<Self> {
        if rms > 0.0 && rms.is_finite() {
            Ok(LevelDbfs(20.0 * rms.log10()))
        } else {
            Err(AudioError::SilentClip)
        }
    }
}

impl fmt::Display for LevelDbfs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} dBFS", self.0)
    }
}

/// A mono waveform with samples nominally in [-1, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        AudioClip {
            samples,
            sample_rate_hz,
        }
    }

    /// A clip at the pipeline rate.
    pub fn from_samples(samples: Vec<f64>) -> Self {
        Self::new(samples, SAMPLE_RATE_HZ)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn scaled(&self, gain: f64) -> AudioClip {
        AudioClip::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate_hz,
        )
    }

    /// Samples `[start, start + len)`, clamped to the clip.
    pub fn slice(&self, start: usize, len: usize) -> AudioClip {
        let start = start.min(self.samples.len());
        let end = start.saturating_add(len).min(self.samples.len());
        AudioClip::new(self.samples[start..end].to_vec(), self.sample_rate_hz)
    }

    /// Sample-wise sum of two equally long clips at the same rate.
    pub fn add(&self, other: &AudioClip) -> Result<AudioClip> {
        ensure_same_rate(self, other)?;
        if self.len() != other.len() {
            return Err(AudioError::Parse {
                path: "<memory>".into(),
                message: format!("length mismatch {} vs {}", self.len(), other.len()),
            });
        }
        Ok(AudioClip::new(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
            self.sample_rate_hz,
        ))
    }
}

pub(crate) fn ensure_same_rate(a: &AudioClip, b: &AudioClip) -> Result<()> {
    if a.sample_rate_hz != b.sample_rate_hz {
        return Err(AudioError::RateMismatch {
            left: a.sample_rate_hz,
            right: b.sample_rate_hz,
        });
    }
    Ok(())
}

/// Mean of squares with Neumaier-compensated summation.
pub(crate) fn mean_square(samples: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for s in samples {
        let x = s * s;
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    (sum + comp) / samples.len() as f64
}

/// Decode a 16-bit PCM, mono, 16 kHz WAV file.
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let display = path.display().to_string();
    let reader = hound::WavReader::open(path).map_err(|e| hound_error(&display, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(AudioError::UnsupportedFormat {
            field: "channel count",
            found: spec.channels.to_string(),
            expected: "1".into(),
        });
    }
    if spec.sample_format != hound::SampleFormat::Int {
        return Err(AudioError::UnsupportedFormat {
            field: "sample format",
            found: "float".into(),
            expected: "integer PCM".into(),
        });
    }
    if spec.bits_per_sample != 16 {
        return Err(AudioError::UnsupportedFormat {
            field: "bit depth",
            found: spec.bits_per_sample.to_string(),
            expected: "16".into(),
        });
    }
    if spec.sample_rate != SAMPLE_RATE_HZ {
        return Err(AudioError::UnsupportedFormat {
            field: "sample rate",
            found: spec.sample_rate.to_string(),
            expected: SAMPLE_RATE_HZ.to_string(),
        });
    }
    let declared = reader.len() as usize;
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|e| hound_error(&display, e))?;
    if samples.len() != declared {
        return Err(AudioError::Parse {
            path: display,
            message: format!("data chunk declares {declared} samples, found {}", samples.len()),
        });
    }
    Ok(AudioClip::new(samples, SAMPLE_RATE_HZ))
}

fn hound_error(path: &str, e: hound::Error) -> AudioError {
    match e {
        // short reads surface as UnexpectedEof or Other depending on where they hit
        hound::Error::IoError(source)
            if !matches!(
                source.kind(),
                std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other
            ) =>
        {
            AudioError::Io {
                path: path.to_string(),
                source,
            }
        }
        other => AudioError::Parse {
            path: path.to_string(),
            message: other.to_string(),
        },
    }
}

/// Quantize one sample to 16-bit PCM (round to nearest, saturating at 32767).
pub fn quantize(sample: f64) -> i16 {
    (sample * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Encode `clip` as 16-bit PCM mono WAV. Samples must already lie in [-1, 1].
pub fn write_wav(clip: &AudioClip, path: &Path) -> Result<()> {
    if let Some((index, &value)) = clip
        .samples
        .iter()
        .enumerate()
        .find(|(_, s)| !(-1.0..=1.0).contains(*s))
    {
        return Err(AudioError::OutOfRange { index, value });
    }
    if clip.sample_rate_hz != SAMPLE_RATE_HZ {
        return Err(AudioError::UnsupportedFormat {
            field: "sample rate",
            found: clip.sample_rate_hz.to_string(),
            expected: SAMPLE_RATE_HZ.to_string(),
        });
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE_HZ,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let display = path.display().to_string();
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| hound_error(&display, e))?;
    {
        let mut w = writer.get_i16_writer(clip.samples.len() as u32);
        for &s in &clip.samples {
            w.write_sample(quantize(s));
        }
        w.flush().map_err(|e| hound_error(&display, e))?;
    }
    writer.finalize().map_err(|e| hound_error(&display, e))
}

/// RMS level of the whole clip.
pub fn rms_dbfs(clip: &AudioClip) -> Result<LevelDbfs> {
    if clip.is_empty() {
        return Err(AudioError::EmptyClip);
    }
    LevelDbfs::from_amplitude(mean_square(&clip.samples).sqrt())
}

/// Scale `clip` so its RMS level equals `target`. Returns the scaled clip
/// and the linear gain that was applied.
pub fn apply_gain_to_level(clip: &AudioClip, target: LevelDbfs) -> Result<(AudioClip, f64)> {
    let current = rms_dbfs(clip)?;
    let gain = 10f64.powf((target.0 - current.0) / 20.0);
    Ok((clip.scaled(gain), gain))
}

/// Scale the clip down so that its peak does not exceed `ceiling`.
///
/// Returns the clip and the rescale factor (1.0 when the peak is already at
/// or below the ceiling, in which case the clip is returned untouched).
pub fn clipping_guard(clip: &AudioClip, ceiling: f64) -> Result<(AudioClip, f64)> {
    let rescale = clipping_rescale(clip, ceiling)?;
    if rescale == 1.0 {
        Ok((clip.clone(), 1.0))
    } else {
        Ok((clip.scaled(rescale), rescale))
    }
}

/// The factor [`clipping_guard`] would apply, without applying it.
pub fn clipping_rescale(clip: &AudioClip, ceiling: f64) -> Result<f64> {
    if !(ceiling > 0.0 && ceiling <= 1.0) {
        return Err(AudioError::InvalidCeiling(ceiling));
    }
    let peak = clip.peak();
    if peak <= ceiling {
        return Ok(1.0);
    }
    let mut rescale = ceiling / peak;
    // rounding can leave peak * rescale one ulp above the ceiling
    while peak * rescale > ceiling {
        rescale = f64::from_bits(rescale.to_bits() - 1);
    }
    Ok(rescale)
}
