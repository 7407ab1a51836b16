//! Noisy-speech synthesis.
//!
//! One output clip is produced from a [`MixRecipe`] in a fixed order:
//! speech is concatenated to the requested duration (and optionally
//! convolved with a room impulse response), noise is concatenated the same
//! way, the noise is scaled so the segmental SNR hits the requested value,
//! the mixture is brought to the target RMS level, and a clipping guard
//! scales everything down if the peak would exceed the ceiling. The same
//! gains are applied to the stored clean and noise references, so
//! `noisy == clean + noise` holds for every written triple.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::{self, ActivityError, ActivityParams};
use crate::audio::{self, AudioClip, AudioError, LevelDbfs, DEFAULT_CLIPPING_CEILING};
use crate::curation::ClipManifestEntry;
use crate::seed::{derive_seed, rng_from_seed, stream_rng, PipelineRng};

#[derive(Error, Debug)]
pub enum SynthError {
    #[error("insufficient source material: need {needed_s:.3} s, have {available_s:.3} s (deficit {:.3} s)", needed_s - available_s)]
    InsufficientMaterial { needed_s: f64, available_s: f64 },
    #[error("length mismatch: speech has {speech} samples, noise has {noise}")]
    LengthMismatch { speech: usize, noise: usize },
    #[error("duration must be positive, got {0}")]
    InvalidDuration(f64),
    #[error("room impulse response is empty or silent")]
    SilentRir,
    #[error("{kind} clip '{id}' could not be loaded: {message}")]
    MissingClip {
        kind: ClipKind,
        id: String,
        message: String,
    },
    #[error("empty {0} corpus")]
    EmptyCorpus(&'static str),
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Activity(#[from] ActivityError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        source: Box<SynthError>,
    },
}

pub type Result<T> = std::result::Result<T, SynthError>;

trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T, E: Into<SynthError>> StageExt<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| SynthError::Stage {
            stage,
            source: Box::new(e.into()),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipKind {
    Speech,
    Noise,
    Rir,
}

impl fmt::Display for ClipKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClipKind::Speech => "speech",
            ClipKind::Noise => "noise",
            ClipKind::Rir => "rir",
        })
    }
}

/// Parameters of the training-set generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub snr_range_db: (f64, f64),
    pub level_range_dbfs: (f64, f64),
    pub duration_s: f64,
    pub clipping_ceiling: f64,
    /// Probability that a recipe is given a room impulse response.
    pub reverb_fraction: f64,
    /// Store the dry speech as the clean reference of reverberant mixes.
    pub store_dry_clean: bool,
    pub activity: ActivityParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            snr_range_db: (0.0, 40.0),
            level_range_dbfs: (-35.0, -15.0),
            duration_s: 30.0,
            clipping_ceiling: DEFAULT_CLIPPING_CEILING,
            reverb_fraction: 0.0,
            store_dry_clean: false,
            activity: ActivityParams::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        for (name, (lo, hi)) in [("snr_range_db", self.snr_range_db), ("level_range_dbfs", self.level_range_dbfs)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("{name} [{lo}, {hi}] is not an ordered finite range"));
            }
        }
        if !(self.duration_s > 0.0) {
            return bad(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if !(self.clipping_ceiling > 0.0 && self.clipping_ceiling <= 1.0) {
            return bad(format!("clipping_ceiling {} outside (0, 1]", self.clipping_ceiling));
        }
        if !(0.0..=1.0).contains(&self.reverb_fraction) {
            return bad(format!("reverb_fraction {} outside [0, 1]", self.reverb_fraction));
        }
        activity::frame_samples(self.activity.frame_ms, audio::SAMPLE_RATE_HZ)?;
        Ok(())
    }
}

/// Everything needed to render one noisy clip deterministically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixRecipe {
    pub set: String,
    pub index: u64,
    pub speech_clip_ids: Vec<String>,
    pub noise_clip_ids: Vec<String>,
    pub snr_db: f64,
    pub target_level_dbfs: LevelDbfs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rir_id: Option<String>,
    pub duration_s: f64,
    pub seed: u64,
}

impl MixRecipe {
    /// `<set>_<index>_snr<snr>_tl<level>.wav`
    pub fn file_name(&self) -> String {
        format!(
            "{}_{:06}_snr{:.2}_tl{:.2}.wav",
            self.set, self.index, self.snr_db, self.target_level_dbfs.0
        )
    }
}

/// Provenance of one synthesized clip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixRecord {
    pub recipe: MixRecipe,
    pub noise_gain: f64,
    pub level_gain: f64,
    pub clipping_rescale: f64,
    pub achieved_rms_dbfs: LevelDbfs,
    pub achieved_snr_db: f64,
    pub output_path: PathBuf,
    pub clean_path: PathBuf,
    pub noise_path: PathBuf,
}

impl MixRecord {
    /// Total linear gain applied to the source speech in the stored clean file.
    pub fn speech_gain(&self) -> f64 {
        self.level_gain * self.clipping_rescale
    }

    /// Total linear gain applied to the source noise in the stored noise file.
    pub fn total_noise_gain(&self) -> f64 {
        self.noise_gain * self.level_gain * self.clipping_rescale
    }
}

/// Resolves clip ids to audio.
pub trait ClipSource: Sync {
    fn load(&self, kind: ClipKind, id: &str) -> std::result::Result<AudioClip, String>;
}

/// Clips held in memory, keyed by id.
#[derive(Default, Clone, Debug)]
pub struct InMemoryCorpus {
    clips: HashMap<(ClipKind, String), AudioClip>,
}

impl InMemoryCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, kind: ClipKind, id: impl Into<String>, clip: AudioClip) {
        self.clips.insert((kind, id.into()), clip);
    }
}

impl ClipSource for InMemoryCorpus {
    fn load(&self, kind: ClipKind, id: &str) -> std::result::Result<AudioClip, String> {
        self.clips
            .get(&(kind, id.to_string()))
            .cloned()
            .ok_or_else(|| "unknown clip id".to_string())
    }
}

/// Clips described by manifest entries and read from disk on demand.
///
/// Relative paths are resolved against `base_dir`. Entries with a non-zero
/// offset (segments produced by curation) are cut out of their parent file.
#[derive(Clone, Debug, Default)]
pub struct ManifestCorpus {
    base_dir: PathBuf,
    entries: HashMap<(ClipKind, String), ClipManifestEntry>,
}

impl ManifestCorpus {
    pub fn new(base_dir: impl Into<PathBuf>) -> Self {
        ManifestCorpus {
            base_dir: base_dir.into(),
            entries: HashMap::new(),
        }
    }

    pub fn add(&mut self, kind: ClipKind, entries: &[ClipManifestEntry]) {
        for e in entries {
            self.entries.insert((kind, e.clip_id.clone()), e.clone());
        }
    }

    pub fn entry(&self, kind: ClipKind, id: &str) -> Option<&ClipManifestEntry> {
        self.entries.get(&(kind, id.to_string()))
    }
}

impl ClipSource for ManifestCorpus {
    fn load(&self, kind: ClipKind, id: &str) -> std::result::Result<AudioClip, String> {
        let entry = self
            .entry(kind, id)
            .ok_or_else(|| "not present in manifest".to_string())?;
        let path = if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        };
        let clip = audio::read_wav(&path).map_err(|e| e.to_string())?;
        let rate = f64::from(clip.sample_rate_hz());
        let start = (entry.offset_s * rate).round() as usize;
        let len = (entry.duration_s * rate).round() as usize;
        // one sample of slack for durations rounded in the manifest
        if start + len > clip.len() + 1 {
            return Err(format!(
                "segment [{:.3}, {:.3}) s exceeds file length {:.3} s",
                entry.offset_s,
                entry.offset_s + entry.duration_s,
                clip.duration_s()
            ));
        }
        Ok(clip.slice(start, len))
    }
}

fn duration_samples(duration_s: f64, rate: u32) -> Result<usize> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(SynthError::InvalidDuration(duration_s));
    }
    Ok((duration_s * f64::from(rate)).round() as usize)
}

/// Concatenate `sources` in an rng-chosen order and trim to `duration_s`.
pub fn build_long_clip(sources: &[AudioClip], duration_s: f64, rng: &mut PipelineRng) -> Result<AudioClip> {
    let rate = sources.first().map_or(audio::SAMPLE_RATE_HZ, |c| c.sample_rate_hz());
    let needed = duration_samples(duration_s, rate)?;
    for c in sources {
        if c.sample_rate_hz() != rate {
            return Err(AudioError::RateMismatch {
                left: rate,
                right: c.sample_rate_hz(),
            }
            .into());
        }
    }
    let available: usize = sources.iter().map(AudioClip::len).sum();
    if available < needed {
        return Err(SynthError::InsufficientMaterial {
            needed_s: needed as f64 / f64::from(rate),
            available_s: available as f64 / f64::from(rate),
        });
    }
    let mut order: Vec<usize> = (0..sources.len()).collect();
    order.shuffle(rng);
    let mut out = Vec::with_capacity(needed);
    for i in order {
        if out.len() >= needed {
            break;
        }
        let take = (needed - out.len()).min(sources[i].len());
        out.extend_from_slice(&sources[i].samples()[..take]);
    }
    Ok(AudioClip::new(out, rate))
}

/// Output of [`mix_at_segmental_snr`].
#[derive(Clone, Debug)]
pub struct Mix {
    pub mixture: AudioClip,
    pub noise_gain: f64,
}

/// Scale `noise` so the segmental SNR of the pair equals `snr_db`, and add it
/// to `speech`.
pub fn mix_at_segmental_snr(
    speech: &AudioClip,
    noise: &AudioClip,
    snr_db: f64,
    params: &ActivityParams,
) -> Result<Mix> {
    audio::ensure_same_rate(speech, noise)?;
    if speech.len() != noise.len() {
        return Err(SynthError::LengthMismatch {
            speech: speech.len(),
            noise: noise.len(),
        });
    }
    let (speech_mask, noise_mask) = activity::pair_masks(speech, noise, params)?;
    let s = activity::segmental_rms_dbfs(speech, &speech_mask)?;
    let n = activity::segmental_rms_dbfs(noise, &noise_mask)?;
    let noise_gain = 10f64.powf((s.0 - n.0 - snr_db) / 20.0);
    let mixture = AudioClip::new(
        speech
            .samples()
            .iter()
            .zip(noise.samples())
            .map(|(a, b)| a + noise_gain * b)
            .collect(),
        speech.sample_rate_hz(),
    );
    Ok(Mix { mixture, noise_gain })
}

// Below this many multiply-adds the direct form is used.
const DIRECT_CONVOLUTION_LIMIT: usize = 1 << 22;

/// Linear convolution of `signal` with `kernel`, truncated to the signal length.
pub fn convolve_truncated(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = signal.len();
    if n == 0 || kernel.is_empty() {
        return vec![0.0; n];
    }
    if n.saturating_mul(kernel.len()) <= DIRECT_CONVOLUTION_LIMIT {
        let mut out = vec![0.0; n];
        for (k, &h) in kernel.iter().enumerate().take(n) {
            if h == 0.0 {
                continue;
            }
            for (o, &x) in out[k..].iter_mut().zip(signal) {
                *o += h * x;
            }
        }
        return out;
    }
    let size = (n + kernel.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let to_complex = |v: &[f64]| {
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(size, Complex::new(0.0, 0.0));
        buf
    };
    let mut a = to_complex(signal);
    let mut b = to_complex(&kernel[..kernel.len().min(n)]);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    a[..n].iter().map(|c| c.re * scale).collect()
}

/// Reverberate `clip` with `rir`, keeping the input length and RMS level.
pub fn convolve_rir(clip: &AudioClip, rir: &AudioClip) -> Result<AudioClip> {
    audio::ensure_same_rate(clip, rir)?;
    if rir.is_empty() || rir.peak() == 0.0 {
        return Err(SynthError::SilentRir);
    }
    let original = audio::rms_dbfs(clip)?;
    let wet = AudioClip::new(convolve_truncated(clip.samples(), rir.samples()), clip.sample_rate_hz());
    let (out, _) = audio::apply_gain_to_level(&wet, original)?;
    Ok(out)
}

/// The three waveforms of a rendered recipe plus its record (with empty paths).
#[derive(Clone, Debug)]
pub struct Rendered {
    pub noisy: AudioClip,
    pub clean: AudioClip,
    pub noise: AudioClip,
    pub record: MixRecord,
}

fn load_all(source: &dyn ClipSource, kind: ClipKind, ids: &[String]) -> Result<Vec<AudioClip>> {
    ids.iter()
        .map(|id| {
            source.load(kind, id).map_err(|message| SynthError::MissingClip {
                kind,
                id: id.clone(),
                message,
            })
        })
        .collect()
}

/// Render a recipe in memory.
pub fn render(recipe: &MixRecipe, source: &dyn ClipSource, cfg: &SynthConfig) -> Result<Rendered> {
    let mut rng = rng_from_seed(recipe.seed);

    let speech_clips = load_all(source, ClipKind::Speech, &recipe.speech_clip_ids).stage("load speech")?;
    let dry = build_long_clip(&speech_clips, recipe.duration_s, &mut rng).stage("build speech")?;
    let speech = match &recipe.rir_id {
        Some(id) => {
            let rir = load_all(source, ClipKind::Rir, std::slice::from_ref(id)).stage("load rir")?;
            convolve_rir(&dry, &rir[0]).stage("reverb")?
        }
        None => dry.clone(),
    };

    let noise_clips = load_all(source, ClipKind::Noise, &recipe.noise_clip_ids).stage("load noise")?;
    let noise = build_long_clip(&noise_clips, recipe.duration_s, &mut rng).stage("build noise")?;

    let (speech_mask, noise_mask) = activity::pair_masks(&speech, &noise, &cfg.activity).stage("mix")?;
    let mix = mix_at_segmental_snr(&speech, &noise, recipe.snr_db, &cfg.activity).stage("mix")?;
    let (_, level_gain) = audio::apply_gain_to_level(&mix.mixture, recipe.target_level_dbfs).stage("level")?;

    let clean_src = if cfg.store_dry_clean && recipe.rir_id.is_some() {
        &dry
    } else {
        &speech
    };
    let speech_out = speech.scaled(level_gain);
    let clean_out = clean_src.scaled(level_gain);
    let noise_out = noise.scaled(mix.noise_gain * level_gain);
    let noisy_out = speech_out.add(&noise_out).stage("level")?;

    let mut rescale = 1.0f64;
    for c in [&noisy_out, &clean_out, &noise_out] {
        rescale = rescale.min(audio::clipping_rescale(c, cfg.clipping_ceiling).stage("clipping guard")?);
    }
    let (noisy, clean, noise_final, speech_final) = if rescale < 1.0 {
        (
            noisy_out.scaled(rescale),
            clean_out.scaled(rescale),
            noise_out.scaled(rescale),
            speech_out.scaled(rescale),
        )
    } else {
        (noisy_out, clean_out, noise_out, speech_out)
    };

    let achieved_rms_dbfs = audio::rms_dbfs(&noisy).stage("measure")?;
    let achieved_snr_db =
        activity::segmental_snr_with_masks(&speech_final, &noise_final, &speech_mask, &noise_mask).stage("measure")?;

    Ok(Rendered {
        noisy,
        clean,
        noise: noise_final,
        record: MixRecord {
            recipe: recipe.clone(),
            noise_gain: mix.noise_gain,
            level_gain,
            clipping_rescale: rescale,
            achieved_rms_dbfs,
            achieved_snr_db,
            output_path: PathBuf::new(),
            clean_path: PathBuf::new(),
            noise_path: PathBuf::new(),
        },
    })
}

/// Directory layout for synthesized triples: `noisy/`, `clean/` and `noise/`
/// under one root, all sharing the recipe's file name.
#[derive(Clone, Debug)]
pub struct OutputLayout {
    pub root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutputLayout { root: root.into() }
    }

    pub fn create_dirs(&self) -> Result<()> {
        for sub in ["noisy", "clean", "noise"] {
            let p = self.root.join(sub);
            fs::create_dir_all(&p).map_err(|source| SynthError::Io {
                path: p.display().to_string(),
                source,
            })?;
        }
        Ok(())
    }

    pub fn paths(&self, recipe: &MixRecipe) -> (PathBuf, PathBuf, PathBuf) {
        let name = recipe.file_name();
        (
            self.root.join("noisy").join(&name),
            self.root.join("clean").join(&name),
            self.root.join("noise").join(&name),
        )
    }
}

/// Render a recipe and write its noisy, clean and noise files.
pub fn synthesize(
    recipe: &MixRecipe,
    source: &dyn ClipSource,
    cfg: &SynthConfig,
    layout: &OutputLayout,
) -> Result<MixRecord> {
    let rendered = render(recipe, source, cfg)?;
    let (noisy_path, clean_path, noise_path) = layout.paths(recipe);
    audio::write_wav(&rendered.noisy, &noisy_path).stage("write")?;
    audio::write_wav(&rendered.clean, &clean_path).stage("write")?;
    audio::write_wav(&rendered.noise, &noise_path).stage("write")?;
    let mut record = rendered.record;
    record.output_path = noisy_path;
    record.clean_path = clean_path;
    record.noise_path = noise_path;
    Ok(record)
}

/// Synthesize every recipe on `jobs` worker threads. Records come back in
/// recipe order regardless of scheduling.
pub fn synthesize_all(
    recipes: &[MixRecipe],
    source: &dyn ClipSource,
    cfg: &SynthConfig,
    layout: &OutputLayout,
    jobs: usize,
) -> Result<Vec<MixRecord>> {
    layout.create_dirs()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    pool.install(|| {
        recipes
            .par_iter()
            .map(|r| synthesize(r, source, cfg, layout))
            .collect()
    })
}

/// Draw `count` recipes from the given manifests.
///
/// Recipe `i` uses its own generator derived from `(master_seed, set, i)`, so
/// any subset of recipes can be regenerated independently. Speech for one
/// recipe always comes from a single speaker; noise clips are drawn without
/// replacement.
pub fn sample_recipes(
    cfg: &SynthConfig,
    set: &str,
    speech: &[ClipManifestEntry],
    noise: &[ClipManifestEntry],
    rirs: &[ClipManifestEntry],
    count: usize,
    master_seed: u64,
) -> Result<Vec<MixRecipe>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    cfg.validate()?;
    if noise.is_empty() {
        return Err(SynthError::EmptyCorpus("noise"));
    }
    let speech_pool = SpeechPool::new(speech, cfg.duration_s)?;
    let noise_total: f64 = noise.iter().map(|e| e.duration_s).sum();
    if noise_total < cfg.duration_s {
        return Err(SynthError::InsufficientMaterial {
            needed_s: cfg.duration_s,
            available_s: noise_total,
        });
    }

    let stream = format!("synth/{set}");
    let render_stream = format!("synth/{set}/render");
    (0..count as u64)
        .map(|i| {
            let mut rng = stream_rng(master_seed, &stream, i);
            let speech_ids = speech_pool.draw(&mut rng);

            let noise_ids = draw_noise(&mut rng, noise, cfg.duration_s);

            let snr_db = rng.gen_range(cfg.snr_range_db.0..=cfg.snr_range_db.1);
            let level = rng.gen_range(cfg.level_range_dbfs.0..=cfg.level_range_dbfs.1);
            let rir_id = if cfg.reverb_fraction > 0.0 && !rirs.is_empty() && rng.gen::<f64>() < cfg.reverb_fraction {
                Some(rirs[rng.gen_range(0..rirs.len())].clip_id.clone())
            } else {
                None
            };
            Ok(MixRecipe {
                set: set.to_string(),
                index: i,
                speech_clip_ids: speech_ids,
                noise_clip_ids: noise_ids,
                snr_db,
                target_level_dbfs: LevelDbfs(level),
                rir_id,
                duration_s: cfg.duration_s,
                seed: derive_seed(master_seed, &render_stream, i),
            })
        })
        .collect()
}

/// Speech grouped by speaker, restricted to speakers with at least
/// `duration_s` of material. Entries without a speaker id stand alone.
pub(crate) struct SpeechPool<'a> {
    speakers: Vec<Vec<&'a ClipManifestEntry>>,
    duration_s: f64,
}

impl<'a> SpeechPool<'a> {
    pub(crate) fn new(speech: &'a [ClipManifestEntry], duration_s: f64) -> Result<Self> {
        if speech.is_empty() {
            return Err(SynthError::EmptyCorpus("speech"));
        }
        let mut by_speaker: BTreeMap<&str, Vec<&ClipManifestEntry>> = BTreeMap::new();
        for e in speech {
            let key = e.speaker_id.as_deref().unwrap_or(&e.clip_id);
            by_speaker.entry(key).or_default().push(e);
        }
        let speakers: Vec<Vec<&ClipManifestEntry>> = by_speaker
            .into_values()
            .filter(|v| v.iter().map(|e| e.duration_s).sum::<f64>() >= duration_s)
            .map(|mut v| {
                v.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
                v
            })
            .collect();
        if speakers.is_empty() {
            let best = speech.iter().map(|e| e.duration_s).fold(0.0, f64::max);
            return Err(SynthError::InsufficientMaterial {
                needed_s: duration_s,
                available_s: best,
            });
        }
        Ok(SpeechPool { speakers, duration_s })
    }

    /// One speaker uniformly, then that speaker's utterances in random order
    /// until the duration is covered.
    pub(crate) fn draw(&self, rng: &mut PipelineRng) -> Vec<String> {
        let mut order = self.speakers[rng.gen_range(0..self.speakers.len())].clone();
        order.shuffle(rng);
        take_until(order.into_iter(), self.duration_s)
    }
}

fn take_until<'a>(entries: impl Iterator<Item = &'a ClipManifestEntry>, duration_s: f64) -> Vec<String> {
    let mut total = 0.0;
    let mut ids = Vec::new();
    for e in entries {
        if total >= duration_s {
            break;
        }
        total += e.duration_s;
        ids.push(e.clip_id.clone());
    }
    ids
}

/// Uniform draws without replacement until `duration_s` is covered. The
/// caller guarantees the pool holds enough material.
pub(crate) fn draw_noise(rng: &mut PipelineRng, pool: &[ClipManifestEntry], duration_s: f64) -> Vec<String> {
    let mut used = HashSet::new();
    let mut total = 0.0;
    let mut ids = Vec::new();
    while total < duration_s && used.len() < pool.len() {
        let k = rng.gen_range(0..pool.len());
        if used.insert(k) {
            total += pool[k].duration_s;
            ids.push(pool[k].clip_id.clone());
        }
    }
    ids
}

/// Remeasure the segmental SNR of a stored clean/noise pair.
///
/// The activity threshold is shifted by the gain each file received during
/// synthesis, which reproduces the masks the mixer saw on the unscaled
/// sources (frame activity is gain-consistent).
pub fn remeasure_snr(record: &MixRecord, clean: &AudioClip, noise: &AudioClip, params: &ActivityParams) -> Result<f64> {
    let shift = |g: f64| 20.0 * g.log10();
    let sm = activity::detect_activity(
        clean,
        LevelDbfs(params.threshold_dbfs + shift(record.speech_gain())),
        params.frame_ms,
    )?;
    let nm = activity::detect_activity(
        noise,
        LevelDbfs(params.threshold_dbfs + shift(record.total_noise_gain())),
        params.frame_ms,
    )?;
    let (sm, nm) = match params.mode {
        activity::SegmentMode::PerSignal => (sm, nm),
        activity::SegmentMode::Joint => {
            let both = sm.intersect(&nm);
            (both.clone(), both)
        }
    };
    Ok(activity::segmental_snr_with_masks(clean, noise, &sm, &nm)?)
}

/// Re-read a written triple from disk.
pub fn read_triple(record: &MixRecord) -> Result<(AudioClip, AudioClip, AudioClip)> {
    let read = |p: &Path| audio::read_wav(p).map_err(SynthError::from);
    Ok((read(&record.output_path)?, read(&record.clean_path)?, read(&record.noise_path)?))
}
