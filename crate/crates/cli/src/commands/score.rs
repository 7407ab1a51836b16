use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use dnsc_core::eval::{
    anova_pairwise, dmos, filter_spam_raters, mos_summary, per_clip_means, read_ratings, MosScope, MosSummary,
    RatingGroup, RatingRecord,
};
use log::warn;
use serde::{Deserialize, Serialize};

use super::Context;
use crate::error::{require, CliError, ErrorKind, Result};
use crate::io;
use crate::GlobalArgs;

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// Ratings of processed clips (CSV).
    #[arg(long)]
    pub ratings: PathBuf,
    /// Ratings of the unprocessed noisy clips (CSV).
    #[arg(long)]
    pub noisy_baseline: Option<PathBuf>,
    /// JSON lines mapping rated clip ids to model, source clip and condition.
    /// Without it, clip ids are read as `model/source_clip`.
    #[arg(long)]
    pub clip_map: Option<PathBuf>,
    /// Rating-group plan, for trap expectations.
    #[arg(long)]
    pub groups: Option<PathBuf>,
    /// Significance threshold for the p-value table.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClipMapEntry {
    pub clip_id: String,
    pub model: String,
    pub source_clip: String,
    #[serde(default)]
    pub condition: Option<String>,
}

/// Output of `score`, input of `rank`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScoreSummaries {
    pub baseline_model: String,
    pub summaries: Vec<MosSummary>,
}

struct Locator {
    map: Option<HashMap<String, ClipMapEntry>>,
    baseline: String,
}

impl Locator {
    /// (model, source clip, condition)
    fn locate(&self, clip_id: &str, is_baseline: bool) -> Option<(String, String, Option<String>)> {
        if let Some(map) = &self.map {
            return map
                .get(clip_id)
                .map(|e| (e.model.clone(), e.source_clip.clone(), e.condition.clone()));
        }
        if is_baseline {
            let source = clip_id.split_once('/').map_or(clip_id, |(_, s)| s);
            return Some((self.baseline.clone(), source.to_string(), None));
        }
        clip_id
            .split_once('/')
            .map(|(m, s)| (m.to_string(), s.to_string(), None))
    }
}

fn read_ratings_file(path: &Path) -> Result<Vec<RatingRecord>> {
    require(path)?;
    let f = File::open(path).map_err(|e| CliError::processing(format!("{}: {e}", path.display())))?;
    read_ratings(f).map_err(|e| CliError::processing(format!("{}: {e}", path.display())))
}

pub fn run(g: &GlobalArgs, args: &ScoreArgs) -> Result<ExitCode> {
    let ctx = Context::load(g)?;
    let eval = &ctx.cfg.eval;
    let threshold = args.threshold.unwrap_or(eval.significance);
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(CliError::config(format!("threshold {threshold} outside (0, 1)")));
    }
    let model_ratings = read_ratings_file(&args.ratings)?;
    let baseline_ratings = match &args.noisy_baseline {
        Some(p) => read_ratings_file(p)?,
        None => Vec::new(),
    };
    let map = match &args.clip_map {
        Some(p) => Some(
            io::read_jsonl::<ClipMapEntry>(p)?
                .into_iter()
                .map(|e| (e.clip_id.clone(), e))
                .collect(),
        ),
        None => None,
    };
    let groups: Vec<RatingGroup> = match &args.groups {
        Some(p) => io::read_jsonl(p)?,
        None => Vec::new(),
    };
    let locator = Locator {
        map,
        baseline: eval.baseline_model.clone(),
    };

    // attribute every rating before filtering so bad ids fail early
    let n_model = model_ratings.len();
    let all: Vec<RatingRecord> = model_ratings.into_iter().chain(baseline_ratings).collect();
    let mut located: HashMap<&str, (String, String, Option<String>)> = HashMap::new();
    for (i, r) in all.iter().enumerate() {
        let loc = locator.locate(&r.clip_id, i >= n_model).ok_or_else(|| {
            CliError::new(
                ErrorKind::Processing,
                format!("cannot attribute clip '{}' to a model", r.clip_id),
            )
        })?;
        if let Some(prev) = located.insert(&r.clip_id, loc.clone()) {
            if prev != loc {
                return Err(CliError::processing(format!(
                    "clip '{}' is attributed to both '{}' and '{}'",
                    r.clip_id, prev.0, loc.0
                )));
            }
        }
    }

    let outcome = filter_spam_raters(&all, &groups, &eval.spam);
    let loc_of = |r: &RatingRecord| &located[r.clip_id.as_str()];

    let mut overall: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut per_condition: BTreeMap<(String, String), Vec<u8>> = BTreeMap::new();
    for r in &outcome.kept {
        let (model, _, condition) = loc_of(r);
        overall.entry(model.clone()).or_default().push(r.score);
        if let Some(c) = condition {
            per_condition.entry((model.clone(), c.clone())).or_default().push(r.score);
        }
    }
    if overall.is_empty() {
        return Err(CliError::processing("no ratings left after spam filtering"));
    }

    let to_err = |e: dnsc_core::eval::EvalError| CliError::processing(e);
    let mut summaries = Vec::new();
    let baseline = &eval.baseline_model;
    let base_overall = match overall.get(baseline) {
        Some(s) => Some(mos_summary(MosScope::Overall { model: baseline.clone() }, s).map_err(to_err)?),
        None => None,
    };
    for (model, scores) in &overall {
        let mut s = mos_summary(MosScope::Overall { model: model.clone() }, scores).map_err(to_err)?;
        if let Some(b) = &base_overall {
            s.dmos = Some(dmos(&s, b).map_err(to_err)?);
        }
        summaries.push(s);
    }
    for ((model, condition), scores) in &per_condition {
        let mut s = mos_summary(
            MosScope::Condition {
                model: model.clone(),
                condition: condition.clone(),
            },
            scores,
        )
        .map_err(to_err)?;
        if let Some(b) = per_condition.get(&(baseline.clone(), condition.clone())) {
            let b = mos_summary(
                MosScope::Condition {
                    model: baseline.clone(),
                    condition: condition.clone(),
                },
                b,
            )
            .map_err(to_err)?;
            s.dmos = Some(dmos(&s, &b).map_err(to_err)?);
        }
        summaries.push(s);
    }

    let mut means = per_clip_means(&outcome.kept, |id| located.get(id).map(|(m, c, _)| (m.clone(), c.clone())));
    align_clips(&mut means);
    let pvalues = if means.len() >= 2 {
        Some(anova_pairwise(&means, threshold).map_err(to_err)?)
    } else {
        None
    };

    io::create_dir(&args.out_dir)?;
    let out = ScoreSummaries {
        baseline_model: baseline.clone(),
        summaries,
    };
    io::write_json(&args.out_dir.join("summaries.json"), &out)?;
    io::write_json(&args.out_dir.join("verdicts.json"), &outcome.verdicts)?;
    io::write_json(&args.out_dir.join("per_clip_means.json"), &means)?;
    if let Some(p) = &pvalues {
        io::write_json(&args.out_dir.join("pvalues.json"), p)?;
    }
    print!("{}", results_table(&out));
    if let Some(p) = &pvalues {
        print!("\n{}", p.to_table());
    }
    Ok(ExitCode::SUCCESS)
}

/// Keep only clips every model was rated on, so the ANOVA compares like with like.
fn align_clips(means: &mut BTreeMap<String, BTreeMap<String, f64>>) {
    let mut common: Option<BTreeSet<String>> = None;
    for clips in means.values() {
        let keys: BTreeSet<String> = clips.keys().cloned().collect();
        common = Some(match common {
            Some(c) => c.intersection(&keys).cloned().collect(),
            None => keys,
        });
    }
    let common = common.unwrap_or_default();
    for (model, clips) in means.iter_mut() {
        let before = clips.len();
        clips.retain(|c, _| common.contains(c));
        if clips.len() < before {
            warn!("{model}: {} clips not rated for every model left out of the ANOVA", before - clips.len());
        }
    }
}

/// Model rows with per-condition MOS, overall MOS, dMOS and 95% CI.
pub fn results_table(s: &ScoreSummaries) -> String {
    let conditions: BTreeSet<&str> = s
        .summaries
        .iter()
        .filter_map(|m| match &m.scope {
            MosScope::Condition { condition, .. } => Some(condition.as_str()),
            _ => None,
        })
        .collect();
    let mut rows: Vec<(&str, &MosSummary)> = s
        .summaries
        .iter()
        .filter_map(|m| match &m.scope {
            MosScope::Overall { model } => Some((model.as_str(), m)),
            _ => None,
        })
        .collect();
    rows.sort_by(|a, b| b.1.mos.total_cmp(&a.1.mos).then_with(|| a.0.cmp(b.0)));
    let width = rows.iter().map(|(m, _)| m.len()).max().unwrap_or(5).max(5);

    let mut out = format!("{:width$}", "Model");
    for c in &conditions {
        let _ = write!(out, "  {c:>w$}", w = c.len().max(4));
    }
    out.push_str("  Overall   dMOS  95% CI\n");
    for (model, overall) in rows {
        let _ = write!(out, "{model:width$}");
        for c in &conditions {
            let cell = s
                .summaries
                .iter()
                .find(|m| matches!(&m.scope, MosScope::Condition { model: mm, condition } if mm == model && condition == c))
                .map(|m| format!("{:.2}", m.mos))
                .unwrap_or_else(|| "-".into());
            let _ = write!(out, "  {cell:>w$}", w = c.len().max(4));
        }
        let d = overall.dmos.map(|d| format!("{d:.2}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(out, "  {:>7.2}  {d:>5}  {:>6.2}", overall.mos, overall.ci95);
    }
    out
}
