//! Evaluation set construction.
//!
//! A test set has four categories: synthetic clips without reverb, synthetic
//! clips with reverb, and two categories of real recordings that can only be
//! ingested. Synthetic categories draw a fixed number of noise clips from
//! each priority class plus a random fill from the remaining classes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{self, LevelDbfs};
use crate::curation::ClipManifestEntry;
use crate::seed::{derive_seed, stream_rng};
use crate::synthesis::{self, ClipSource, MixRecipe, MixRecord, OutputLayout, SpeechPool, SynthConfig, SynthError};

pub const DEFAULT_PRIORITY_CLASSES: [&str; 12] = [
    "fan",
    "air conditioner",
    "typing",
    "door shutting",
    "clatter",
    "car",
    "munching",
    "creaking chair",
    "breathing",
    "copy machine",
    "baby crying",
    "barking",
];

pub const SYNTHETIC_NO_REVERB: &str = "synthetic_no_reverb";
pub const SYNTHETIC_REVERB: &str = "synthetic_reverb";

#[derive(Error, Debug)]
pub enum TestSetError {
    #[error("invalid test set plan: {0}")]
    InvalidPlan(String),
    #[error("priority class '{class}' has {available} eligible noise clips, need {needed}")]
    DeficientClass {
        class: String,
        available: usize,
        needed: usize,
    },
    #[error("random fill needs {needed} clips from non-priority classes, only {available} eligible")]
    DeficientFill { available: usize, needed: usize },
    #[error("no impulse response with RT60 in [{lo}, {hi}] ms")]
    NoEligibleRir { lo: f64, hi: f64 },
    #[error(transparent)]
    Synthesis(#[from] SynthError),
}

pub type Result<T> = std::result::Result<T, TestSetError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestSetPlan {
    pub quota: usize,
    pub priority_classes: Vec<String>,
    pub clips_per_priority: usize,
    pub random_fill: usize,
    pub snr_range_db: (f64, f64),
    pub rt60_range_ms: (f64, f64),
    pub level_range_dbfs: (f64, f64),
    pub duration_s: f64,
}

impl Default for TestSetPlan {
    fn default() -> Self {
        TestSetPlan {
            quota: 300,
            priority_classes: DEFAULT_PRIORITY_CLASSES.iter().map(|s| s.to_string()).collect(),
            clips_per_priority: 15,
            random_fill: 120,
            snr_range_db: (0.0, 25.0),
            rt60_range_ms: (300.0, 1300.0),
            level_range_dbfs: (-35.0, -15.0),
            duration_s: 10.0,
        }
    }
}

impl TestSetPlan {
    pub fn validate(&self) -> Result<()> {
        let composed = self.clips_per_priority * self.priority_classes.len() + self.random_fill;
        if composed != self.quota {
            return Err(TestSetError::InvalidPlan(format!(
                "{} x {} + {} = {composed} does not equal the quota {}",
                self.clips_per_priority,
                self.priority_classes.len(),
                self.random_fill,
                self.quota
            )));
        }
        let unique: BTreeSet<&String> = self.priority_classes.iter().collect();
        if unique.len() != self.priority_classes.len() {
            return Err(TestSetError::InvalidPlan("duplicate priority class".into()));
        }
        for (name, (lo, hi)) in [
            ("snr_range_db", self.snr_range_db),
            ("rt60_range_ms", self.rt60_range_ms),
            ("level_range_dbfs", self.level_range_dbfs),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(TestSetError::InvalidPlan(format!("{name} [{lo}, {hi}] is not an ordered range")));
            }
        }
        if !(self.duration_s > 0.0) {
            return Err(TestSetError::InvalidPlan(format!("duration_s {} must be positive", self.duration_s)));
        }
        Ok(())
    }

    fn is_priority(&self, e: &ClipManifestEntry) -> bool {
        e.labels.iter().any(|l| self.priority_classes.contains(l))
    }

    pub fn rir_eligible(&self, e: &ClipManifestEntry) -> bool {
        e.rt60_ms
            .is_some_and(|t| t >= self.rt60_range_ms.0 && t <= self.rt60_range_ms.1)
    }
}

/// Source material for building synthetic categories.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TestCorpora {
    pub speech: Vec<ClipManifestEntry>,
    pub noise: Vec<ClipManifestEntry>,
    pub rirs: Vec<ClipManifestEntry>,
}

impl TestCorpora {
    pub fn source_ids(&self) -> BTreeSet<String> {
        self.speech
            .iter()
            .chain(&self.noise)
            .chain(&self.rirs)
            .map(|e| e.clip_id.clone())
            .collect()
    }
}

/// Split sources into disjoint development and blind halves.
///
/// Speech is split by speaker, noise is split within each priority class
/// (keyed by the first priority label a clip carries) so both halves can
/// satisfy the per-class quota, and impulse responses are split directly.
pub fn partition_sources(corpora: &TestCorpora, plan: &TestSetPlan, master_seed: u64) -> (TestCorpora, TestCorpora) {
    let mut dev = TestCorpora::default();
    let mut blind = TestCorpora::default();

    let mut speakers: BTreeMap<&str, Vec<&ClipManifestEntry>> = BTreeMap::new();
    for e in &corpora.speech {
        speakers
            .entry(e.speaker_id.as_deref().unwrap_or(&e.clip_id))
            .or_default()
            .push(e);
    }
    let mut keys: Vec<&str> = speakers.keys().copied().collect();
    keys.shuffle(&mut stream_rng(master_seed, "testset/partition/speech", 0));
    for (i, k) in keys.into_iter().enumerate() {
        let side = if i % 2 == 0 { &mut dev } else { &mut blind };
        side.speech.extend(speakers[k].iter().map(|e| (*e).clone()));
    }

    let mut strata: BTreeMap<String, Vec<&ClipManifestEntry>> = BTreeMap::new();
    for e in &corpora.noise {
        let key = plan
            .priority_classes
            .iter()
            .find(|c| e.labels.contains(*c))
            .cloned()
            .unwrap_or_default();
        strata.entry(key).or_default().push(e);
    }
    for (s, (_, mut members)) in strata.into_iter().enumerate() {
        members.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
        members.shuffle(&mut stream_rng(master_seed, "testset/partition/noise", s as u64));
        for (i, e) in members.into_iter().enumerate() {
            let side = if i % 2 == 0 { &mut dev } else { &mut blind };
            side.noise.push(e.clone());
        }
    }

    let mut rirs: Vec<&ClipManifestEntry> = corpora.rirs.iter().collect();
    rirs.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    rirs.shuffle(&mut stream_rng(master_seed, "testset/partition/rir", 0));
    for (i, e) in rirs.into_iter().enumerate() {
        let side = if i % 2 == 0 { &mut dev } else { &mut blind };
        side.rirs.push(e.clone());
    }
    (dev, blind)
}

/// Plan one synthetic category as a list of recipes.
///
/// Recipes are ordered priority classes first (in plan order), then the
/// random fill. No noise clip is used twice within a category.
pub fn build_synthetic_category(
    plan: &TestSetPlan,
    with_reverb: bool,
    corpora: &TestCorpora,
    set: &str,
    master_seed: u64,
) -> Result<Vec<MixRecipe>> {
    plan.validate()?;
    let category = if with_reverb { SYNTHETIC_REVERB } else { SYNTHETIC_NO_REVERB };
    let stream = format!("testset/{set}/{category}");

    let rirs: Vec<&ClipManifestEntry> = if with_reverb {
        let eligible: Vec<_> = corpora.rirs.iter().filter(|e| plan.rir_eligible(e)).collect();
        if eligible.is_empty() {
            return Err(TestSetError::NoEligibleRir {
                lo: plan.rt60_range_ms.0,
                hi: plan.rt60_range_ms.1,
            });
        }
        eligible
    } else {
        Vec::new()
    };

    let mut noise: Vec<&ClipManifestEntry> = corpora
        .noise
        .iter()
        .filter(|e| e.duration_s >= plan.duration_s)
        .collect();
    noise.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    let mut used = vec![false; noise.len()];
    let mut picks: Vec<usize> = Vec::with_capacity(plan.quota);
    let mut rng = stream_rng(master_seed, &format!("{stream}/noise"), 0);
    for class in &plan.priority_classes {
        let candidates: Vec<usize> = (0..noise.len())
            .filter(|&i| !used[i] && noise[i].labels.contains(class))
            .collect();
        if candidates.len() < plan.clips_per_priority {
            return Err(TestSetError::DeficientClass {
                class: class.clone(),
                available: candidates.len(),
                needed: plan.clips_per_priority,
            });
        }
        for k in index::sample(&mut rng, candidates.len(), plan.clips_per_priority) {
            used[candidates[k]] = true;
            picks.push(candidates[k]);
        }
    }
    // remaining classes, uniform over clips
    let fill: Vec<usize> = (0..noise.len())
        .filter(|&i| !used[i] && !plan.is_priority(noise[i]))
        .collect();
    if fill.len() < plan.random_fill {
        return Err(TestSetError::DeficientFill {
            available: fill.len(),
            needed: plan.random_fill,
        });
    }
    for k in index::sample(&mut rng, fill.len(), plan.random_fill) {
        picks.push(fill[k]);
    }

    let speech = SpeechPool::new(&corpora.speech, plan.duration_s)?;
    let set_name = format!("{set}_{category}");
    let render_stream = format!("{stream}/render");
    Ok(picks
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            let mut rng = stream_rng(master_seed, &stream, i as u64);
            let speech_clip_ids = speech.draw(&mut rng);
            let snr_db = rng.gen_range(plan.snr_range_db.0..=plan.snr_range_db.1);
            let level = rng.gen_range(plan.level_range_dbfs.0..=plan.level_range_dbfs.1);
            let rir_id = (!rirs.is_empty()).then(|| rirs[rng.gen_range(0..rirs.len())].clip_id.clone());
            MixRecipe {
                set: set_name.clone(),
                index: i as u64,
                speech_clip_ids,
                noise_clip_ids: vec![noise[n].clip_id.clone()],
                snr_db,
                target_level_dbfs: LevelDbfs(level),
                rir_id,
                duration_s: plan.duration_s,
                seed: derive_seed(master_seed, &render_stream, i as u64),
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestClipKind {
    Synthetic,
    Real,
}

/// One line of a test-set manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSetEntry {
    pub category: String,
    pub kind: TestClipKind,
    pub clip_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clean_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix_record: Option<MixRecord>,
}

/// Render planned recipes and describe them as manifest entries.
pub fn render_category(
    category: &str,
    recipes: &[MixRecipe],
    source: &dyn ClipSource,
    cfg: &SynthConfig,
    layout: &OutputLayout,
    jobs: usize,
) -> Result<Vec<TestSetEntry>> {
    let records = synthesis::synthesize_all(recipes, source, cfg, layout, jobs)?;
    Ok(records
        .into_iter()
        .map(|r| TestSetEntry {
            category: category.to_string(),
            kind: TestClipKind::Synthetic,
            clip_path: r.output_path.clone(),
            clean_path: Some(r.clean_path.clone()),
            mix_record: Some(r),
        })
        .collect())
}

/// Ingest real recordings. Files that do not decode as pipeline WAVs are
/// skipped and reported as warnings.
pub fn register_real_recordings(category: &str, paths: &[PathBuf]) -> (Vec<TestSetEntry>, Vec<String>) {
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for p in paths {
        match audio::read_wav(Path::new(p)) {
            Ok(_) => entries.push(TestSetEntry {
                category: category.to_string(),
                kind: TestClipKind::Real,
                clip_path: p.clone(),
                clean_path: None,
                mix_record: None,
            }),
            Err(e) => {
                let w = format!("skipping {}: {e}", p.display());
                warn!("{w}");
                warnings.push(w);
            }
        }
    }
    (entries, warnings)
}
