//! The single JSON configuration shared by every subcommand.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use dnsc_core::curation::{self, SelectionPolicy};
use dnsc_core::eval::{Complexity, SpamFilterConfig, DEFAULT_SIGNIFICANCE};
use dnsc_core::rtcheck::{BackendDescriptor, DEFAULT_WARMUP_FRAMES};
use dnsc_core::synthesis::SynthConfig;
use dnsc_core::testset::TestSetPlan;
use serde::{Deserialize, Serialize};

use crate::error::{require, CliError, Result};

pub const CONFIG_ENV: &str = "DNSC_CONFIG";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub master_seed: u64,
    #[serde(default)]
    pub corpus: CorpusPaths,
    #[serde(default)]
    pub synthesis: SynthConfig,
    #[serde(default)]
    pub curation: CurationConfig,
    #[serde(default)]
    pub testset: TestSetConfig,
    #[serde(default)]
    pub groups: GroupsConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub rtcheck: RtCheckConfig,
}

/// Manifest locations. Relative paths resolve against the config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusPaths {
    /// Directory that relative audio paths inside manifests resolve against.
    pub base_dir: Option<PathBuf>,
    pub speech_manifest: Option<PathBuf>,
    pub noise_manifest: Option<PathBuf>,
    pub rir_manifest: Option<PathBuf>,
    /// Ratings of chapter excerpts used to pick clean chapters.
    pub chapter_ratings: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    pub selection: SelectionPolicy,
    pub min_speaker_minutes: f64,
    pub class_floor: usize,
    pub segment_s: f64,
    pub excerpts_per_chapter: usize,
    pub speech_labels: BTreeSet<String>,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            selection: SelectionPolicy::default(),
            min_speaker_minutes: curation::DEFAULT_MIN_SPEAKER_MINUTES,
            class_floor: curation::DEFAULT_CLASS_FLOOR,
            segment_s: curation::DEFAULT_SEGMENT_S,
            excerpts_per_chapter: curation::DEFAULT_SEGMENTS_PER_CHAPTER,
            speech_labels: ["speech", "male speech", "female speech", "child speech", "conversation"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestSetConfig {
    pub plan: TestSetPlan,
    /// Partition sources so dev and blind share no speech, noise or RIR.
    pub disjoint: bool,
    /// Real recordings by set, then category, e.g.
    /// `{"blind": {"real_no_reverb": ["recordings/"]}}`. Directories expand
    /// to the `.wav` files they contain.
    pub real_recordings: BTreeMap<String, BTreeMap<String, Vec<PathBuf>>>,
}

impl Default for TestSetConfig {
    fn default() -> Self {
        TestSetConfig {
            plan: TestSetPlan::default(),
            disjoint: true,
            real_recordings: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupsConfig {
    pub group_size: usize,
    pub raters_per_clip: usize,
}

impl Default for GroupsConfig {
    fn default() -> Self {
        GroupsConfig {
            group_size: 10,
            raters_per_clip: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub spam: SpamFilterConfig,
    pub significance: f64,
    /// Model name given to the unprocessed noisy clips.
    pub baseline_model: String,
    pub complexity: BTreeMap<String, Complexity>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            spam: SpamFilterConfig::default(),
            significance: DEFAULT_SIGNIFICANCE,
            baseline_model: "noisy".into(),
            complexity: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RtCheckConfig {
    pub frame_ms: f64,
    pub lookahead_ms: f64,
    pub warmup_frames: usize,
}

impl Default for RtCheckConfig {
    fn default() -> Self {
        RtCheckConfig {
            frame_ms: 20.0,
            lookahead_ms: 0.0,
            warmup_frames: DEFAULT_WARMUP_FRAMES,
        }
    }
}

impl PipelineConfig {
    /// Check every section, so nothing is written for a bad config.
    pub fn validate(&self) -> Result<()> {
        self.synthesis.validate().map_err(CliError::config)?;
        self.testset.plan.validate().map_err(CliError::config)?;
        let c = &self.curation;
        if let SelectionPolicy::Threshold { min_mos } = c.selection {
            if !(1.0..=5.0).contains(&min_mos) {
                return Err(CliError::config(format!("curation.selection.min_mos {min_mos} outside [1, 5]")));
            }
        }
        if !(c.min_speaker_minutes >= 0.0) {
            return Err(CliError::config("curation.min_speaker_minutes must be non-negative"));
        }
        if c.class_floor == 0 {
            return Err(CliError::config("curation.class_floor must be at least 1"));
        }
        if !(c.segment_s > 0.0) {
            return Err(CliError::config("curation.segment_s must be positive"));
        }
        if self.groups.group_size < 3 || self.groups.raters_per_clip == 0 {
            return Err(CliError::config("groups: group_size must be >= 3 and raters_per_clip >= 1"));
        }
        let e = &self.eval;
        if !(e.significance > 0.0 && e.significance < 1.0) {
            return Err(CliError::config(format!("eval.significance {} outside (0, 1)", e.significance)));
        }
        if !(e.spam.gold_tolerance >= 0.0) || !(0.0..=1.0).contains(&e.spam.max_fail_fraction) {
            return Err(CliError::config("eval.spam: gold_tolerance must be >= 0, max_fail_fraction in [0, 1]"));
        }
        BackendDescriptor {
            frame_ms: self.rtcheck.frame_ms,
            lookahead_ms: self.rtcheck.lookahead_ms,
        }
        .validate()
        .map_err(CliError::config)?;
        Ok(())
    }

    /// Make relative corpus paths absolute with respect to `dir`.
    fn resolve_paths(&mut self, dir: &Path) {
        let c = &mut self.corpus;
        for p in [
            &mut c.base_dir,
            &mut c.speech_manifest,
            &mut c.noise_manifest,
            &mut c.rir_manifest,
            &mut c.chapter_ratings,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        if c.base_dir.is_none() {
            c.base_dir = Some(dir.to_path_buf());
        }
        for paths in self.testset.real_recordings.values_mut().flat_map(|m| m.values_mut()) {
            for p in paths.iter_mut().filter(|p| p.is_relative()) {
                *p = dir.join(&*p);
            }
        }
    }

    pub fn base_dir(&self) -> PathBuf {
        self.corpus.base_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

/// Parse and validate a config file.
pub fn load(path: &Path) -> Result<PipelineConfig> {
    require(path)?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut cfg: PipelineConfig =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    cfg.resolve_paths(dir);
    cfg.validate()?;
    Ok(cfg)
}

/// Config from `--config` (or the environment), or defaults with no seed.
pub fn load_or_default(path: Option<&Path>) -> Result<(PipelineConfig, bool)> {
    match path {
        Some(p) => Ok((load(p)?, true)),
        None => {
            let mut cfg = PipelineConfig::default();
            cfg.resolve_paths(Path::new("."));
            Ok((cfg, false))
        }
    }
}
