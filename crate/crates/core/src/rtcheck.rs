//! Real-time compliance harness for frame-based enhancement backends.
//!
//! A backend declares its frame length and lookahead. The harness feeds it
//! one frame at a time along with all past input and exactly the declared
//! lookahead of future input, so a backend cannot peek further ahead than
//! it claims.

use std::io::{BufReader, BufWriter, Read, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioClip;

pub const MAX_FRAME_MS: f64 = 40.0;
pub const MAX_LOOKAHEAD_MS: f64 = 40.0;
pub const DEFAULT_WARMUP_FRAMES: usize = 10;
/// Frames that must remain after warmup for a measurement to mean anything.
pub const MIN_MEASURED_FRAMES: usize = 100;

#[derive(Error, Debug)]
pub enum RtError {
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("{ms} ms is not a whole number of samples at {rate} Hz")]
    FractionalSamples { ms: f64, rate: u32 },
    #[error("clip has {frames} frames, need at least {needed} ({warmup} warmup + {MIN_MEASURED_FRAMES})")]
    TooShort { frames: usize, needed: usize, warmup: usize },
    #[error("failed to start backend: {0}")]
    Spawn(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub frame_ms: f64,
    pub lookahead_ms: f64,
}

impl BackendDescriptor {
    pub fn validate(&self) -> Result<(), RtError> {
        if !(self.frame_ms.is_finite() && self.frame_ms > 0.0) {
            return Err(RtError::InvalidDescriptor(format!("frame_ms {} must be positive", self.frame_ms)));
        }
        if !(self.lookahead_ms.is_finite() && self.lookahead_ms >= 0.0) {
            return Err(RtError::InvalidDescriptor(format!(
                "lookahead_ms {} must be non-negative",
                self.lookahead_ms
            )));
        }
        Ok(())
    }
}

fn ms_to_samples(ms: f64, rate: u32) -> Result<usize, RtError> {
    let n = ms * f64::from(rate) / 1000.0;
    let r = n.round();
    if (n - r).abs() > 1e-9 {
        return Err(RtError::FractionalSamples { ms, rate });
    }
    Ok(r as usize)
}

/// A frame function. `past` holds every input sample before `frame`,
/// `lookahead` holds exactly the declared number of future samples (zeros
/// past the end of the clip). Must return `frame.len()` samples.
pub trait FrameProcessor {
    fn process(&mut self, past: &[f64], frame: &[f64], lookahead: &[f64]) -> Result<Vec<f64>, String>;
}

impl<F> FrameProcessor for F
where
    F: FnMut(&[f64], &[f64], &[f64]) -> Result<Vec<f64>, String>,
{
    fn process(&mut self, past: &[f64], frame: &[f64], lookahead: &[f64]) -> Result<Vec<f64>, String> {
        self(past, frame, lookahead)
    }
}

/// Copies each frame through unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct Passthrough;

impl FrameProcessor for Passthrough {
    fn process(&mut self, _past: &[f64], frame: &[f64], _lookahead: &[f64]) -> Result<Vec<f64>, String> {
        Ok(frame.to_vec())
    }
}

/// Structural verdict: frame and lookahead caps are inclusive.
pub fn check_structure(desc: &BackendDescriptor) -> bool {
    desc.frame_ms <= MAX_FRAME_MS && desc.lookahead_ms <= MAX_LOOKAHEAD_MS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameFailure {
    pub frame_index: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub frame_ms: f64,
    pub lookahead_ms: f64,
    pub budget_ms: f64,
    pub warmup_frames: usize,
    pub total_frames: usize,
    pub frame_times_ms: Vec<f64>,
    pub mean_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
    pub frames_over_budget: usize,
    pub structural_pass: bool,
    pub timing_pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FrameFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host_cpu: Option<String>,
}

impl ComplianceReport {
    pub fn passed(&self) -> bool {
        self.structural_pass && self.timing_pass
    }
}

#[derive(Clone, Debug)]
pub struct Measurement {
    pub report: ComplianceReport,
    /// Processed audio, same length as the input. Frames after a failure are zero.
    pub output: AudioClip,
}

fn percentile_nearest_rank(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn host_cpu() -> Option<String> {
    let info = std::fs::read_to_string("/proc/cpuinfo").ok()?;
    info.lines()
        .find(|l| l.starts_with("model name"))
        .and_then(|l| l.split_once(':'))
        .map(|(_, v)| v.trim().to_string())
}

/// Run the processor over `clip` frame by frame on the calling thread and
/// time each call.
pub fn measure(
    desc: &BackendDescriptor,
    processor: &mut dyn FrameProcessor,
    clip: &AudioClip,
    warmup_frames: usize,
) -> Result<Measurement, RtError> {
    desc.validate()?;
    let rate = clip.sample_rate_hz();
    let frame_len = ms_to_samples(desc.frame_ms, rate)?;
    let lookahead_len = ms_to_samples(desc.lookahead_ms, rate)?;
    let total_frames = clip.len().div_ceil(frame_len);
    let needed = warmup_frames + MIN_MEASURED_FRAMES;
    if total_frames < needed {
        return Err(RtError::TooShort {
            frames: total_frames,
            needed,
            warmup: warmup_frames,
        });
    }

    let mut padded = clip.samples().to_vec();
    padded.resize(total_frames * frame_len + lookahead_len, 0.0);
    let mut output = vec![0.0; total_frames * frame_len];
    let mut times = Vec::with_capacity(total_frames - warmup_frames);
    let mut failure = None;

    for i in 0..total_frames {
        let start = i * frame_len;
        let end = start + frame_len;
        let past = &padded[..start];
        let frame = &padded[start..end];
        let lookahead = &padded[end..end + lookahead_len];
        let t0 = Instant::now();
        let result = processor.process(past, frame, lookahead);
        let elapsed_ms = t0.elapsed().as_secs_f64() * 1000.0;
        match result {
            Ok(out) if out.len() == frame_len => output[start..end].copy_from_slice(&out),
            Ok(out) => {
                failure = Some(FrameFailure {
                    frame_index: i,
                    message: format!("returned {} samples for a {frame_len}-sample frame", out.len()),
                });
                break;
            }
            Err(message) => {
                failure = Some(FrameFailure { frame_index: i, message });
                break;
            }
        }
        if i >= warmup_frames {
            times.push(elapsed_ms);
        }
    }
    output.truncate(clip.len());

    let budget_ms = desc.frame_ms / 2.0;
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    let mean_ms = if times.is_empty() {
        0.0
    } else {
        times.iter().sum::<f64>() / times.len() as f64
    };
    let max_ms = sorted.last().copied().unwrap_or(0.0);
    let report = ComplianceReport {
        frame_ms: desc.frame_ms,
        lookahead_ms: desc.lookahead_ms,
        budget_ms,
        warmup_frames,
        total_frames,
        p99_ms: percentile_nearest_rank(&sorted, 99.0),
        max_ms,
        frames_over_budget: times.iter().filter(|&&t| t >= budget_ms).count(),
        structural_pass: check_structure(desc),
        timing_pass: failure.is_none() && mean_ms < budget_ms,
        mean_ms,
        frame_times_ms: times,
        failure,
        host_cpu: host_cpu(),
    };
    Ok(Measurement {
        report,
        output: AudioClip::new(output, rate),
    })
}

/// Backend running as a child process, speaking length-prefixed frames.
///
/// Request: `u32` frame length, `u32` lookahead length (little endian),
/// then the frame followed by the lookahead as `f32` LE samples.
/// Response: `u32` sample count, then that many `f32` LE samples.
/// Past samples are not resent; the backend keeps its own history.
pub struct SubprocessProcessor {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl SubprocessProcessor {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, RtError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(SubprocessProcessor { child, stdin, stdout })
    }

    fn exchange(&mut self, frame: &[f64], lookahead: &[f64]) -> std::io::Result<Vec<f64>> {
        self.stdin.write_all(&(frame.len() as u32).to_le_bytes())?;
        self.stdin.write_all(&(lookahead.len() as u32).to_le_bytes())?;
        for &x in frame.iter().chain(lookahead) {
            self.stdin.write_all(&(x as f32).to_le_bytes())?;
        }
        self.stdin.flush()?;
        let mut word = [0u8; 4];
        self.stdout.read_exact(&mut word)?;
        let n = u32::from_le_bytes(word) as usize;
        let mut buf = vec![0u8; n * 4];
        self.stdout.read_exact(&mut buf)?;
        Ok(buf
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect())
    }
}

impl FrameProcessor for SubprocessProcessor {
    fn process(&mut self, _past: &[f64], frame: &[f64], lookahead: &[f64]) -> Result<Vec<f64>, String> {
        self.exchange(frame, lookahead).map_err(|e| format!("backend i/o: {e}"))
    }
}

impl Drop for SubprocessProcessor {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Serve the subprocess protocol on the given streams with a frame function.
/// Returns cleanly when the input stream ends between requests.
pub fn serve_frames<R: Read, W: Write>(
    input: R,
    output: W,
    mut f: impl FnMut(&[f64], &[f64]) -> Vec<f64>,
) -> std::io::Result<()> {
    let mut input = BufReader::new(input);
    let mut output = BufWriter::new(output);
    loop {
        let mut word = [0u8; 4];
        match input.read_exact(&mut word) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(()),
            Err(e) => return Err(e),
        }
        let frame_len = u32::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let lookahead_len = u32::from_le_bytes(word) as usize;
        let mut buf = vec![0u8; (frame_len + lookahead_len) * 4];
        input.read_exact(&mut buf)?;
        let samples: Vec<f64> = buf
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        let out = f(&samples[..frame_len], &samples[frame_len..]);
        output.write_all(&(out.len() as u32).to_le_bytes())?;
        for x in out {
            output.write_all(&(x as f32).to_le_bytes())?;
        }
        output.flush()?;
    }
}
