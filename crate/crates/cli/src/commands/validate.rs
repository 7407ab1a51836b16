use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use dnsc_core::eval::spearman_rho;
use log::warn;
use serde::Deserialize;
use serde_json::json;

use crate::error::{require, CliError, Result};
use crate::io;
use crate::GlobalArgs;

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Crowdsourced MOS per condition (CSV with `condition,mos`).
    #[arg(long)]
    pub crowd: PathBuf,
    /// Lab MOS per condition (CSV with `condition,mos`).
    #[arg(long)]
    pub lab: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize)]
struct ConditionMos {
    condition: String,
    mos: f64,
}

fn read_table(path: &Path) -> Result<BTreeMap<String, f64>> {
    require(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::processing(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: ConditionMos = row.map_err(|e| CliError::processing(format!("{}: {e}", path.display())))?;
        if out.insert(row.condition.clone(), row.mos).is_some() {
            return Err(CliError::processing(format!(
                "{}: condition '{}' listed twice",
                path.display(),
                row.condition
            )));
        }
    }
    Ok(out)
}

pub fn run(_g: &GlobalArgs, args: &ValidateArgs) -> Result<ExitCode> {
    let crowd = read_table(&args.crowd)?;
    let lab = read_table(&args.lab)?;
    let shared: Vec<&String> = crowd.keys().filter(|c| lab.contains_key(*c)).collect();
    let unmatched: Vec<&String> = crowd
        .keys()
        .chain(lab.keys())
        .filter(|c| !(crowd.contains_key(*c) && lab.contains_key(*c)))
        .collect();
    if !unmatched.is_empty() {
        warn!("{} conditions appear in only one table", unmatched.len());
    }
    let x: Vec<f64> = shared.iter().map(|c| crowd[*c]).collect();
    let y: Vec<f64> = shared.iter().map(|c| lab[*c]).collect();
    let rho = spearman_rho(&x, &y).map_err(CliError::processing)?;
    let result = json!({
        "conditions": shared.len(),
        "spearman_rho": rho,
        "unmatched": unmatched,
    });
    if let Some(p) = &args.out {
        io::write_json(p, &result)?;
    }
    println!("{result}");
    Ok(ExitCode::SUCCESS)
}
