use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use dnsc_core::eval::{rank_models, Complexity, ModelScore, MosScope, PValueMatrix};

use super::score::ScoreSummaries;
use super::Context;
use crate::error::{CliError, Result};
use crate::io;
use crate::GlobalArgs;

#[derive(Args, Debug)]
pub struct RankArgs {
    /// `summaries.json` written by `score`.
    #[arg(long)]
    pub summaries: PathBuf,
    /// `pvalues.json` written by `score`.
    #[arg(long)]
    pub pvalues: PathBuf,
    /// JSON object of model -> "RT" | "NRT" | numeric cost; merged over the config.
    #[arg(long)]
    pub complexity: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Write the ranking as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(g: &GlobalArgs, args: &RankArgs) -> Result<ExitCode> {
    let ctx = Context::load(g)?;
    let summaries: ScoreSummaries = io::read_json(&args.summaries)?;
    let mut pvalues: PValueMatrix = io::read_json(&args.pvalues)?;
    if let Some(t) = args.threshold {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::config(format!("threshold {t} outside (0, 1)")));
        }
        pvalues.threshold = t;
    }
    let mut complexity = ctx.cfg.eval.complexity.clone();
    if let Some(p) = &args.complexity {
        let extra: BTreeMap<String, Complexity> = io::read_json(p)?;
        complexity.extend(extra);
    }

    let scores: Vec<ModelScore> = summaries
        .summaries
        .iter()
        .filter_map(|s| match &s.scope {
            MosScope::Overall { model } if *model != summaries.baseline_model => Some(ModelScore {
                model: model.clone(),
                mos: s.mos,
                complexity: complexity.get(model).copied(),
            }),
            _ => None,
        })
        .collect();
    let ranking = rank_models(&scores, &pvalues).map_err(CliError::processing)?;
    if let Some(out) = &args.out {
        io::write_json(out, &ranking)?;
    }
    print!("{}", ranking.to_table());
    Ok(ExitCode::SUCCESS)
}
