use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use dnsc_core::eval::{assemble_groups, GoldItem, TrapItem};
use serde_json::json;

use super::Context;
use crate::error::{require, CliError, Result};
use crate::io;
use crate::GlobalArgs;

#[derive(Args, Debug)]
pub struct GroupsArgs {
    /// Clip ids to rate, one per line.
    #[arg(long)]
    pub clips: PathBuf,
    /// Gold items, JSON lines of `{"clip_id", "truth"}`.
    #[arg(long)]
    pub gold: PathBuf,
    /// Trap items, JSON lines of `{"clip_id", "expected_answer"}`.
    #[arg(long)]
    pub traps: PathBuf,
    /// Output plan (JSON lines of rating groups).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub group_size: Option<usize>,
    #[arg(long)]
    pub raters_per_clip: Option<usize>,
}

pub fn run(g: &GlobalArgs, args: &GroupsArgs) -> Result<ExitCode> {
    let ctx = Context::load(g)?;
    let seed = ctx.seed()?;
    let group_size = args.group_size.unwrap_or(ctx.cfg.groups.group_size);
    let raters = args.raters_per_clip.unwrap_or(ctx.cfg.groups.raters_per_clip);
    if group_size < 3 || raters == 0 {
        return Err(CliError::config("group_size must be >= 3 and raters_per_clip >= 1"));
    }
    require(&args.clips)?;
    let text = std::fs::read_to_string(&args.clips).map_err(CliError::processing)?;
    let clips: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    let gold: Vec<GoldItem> = io::read_jsonl(&args.gold)?;
    let traps: Vec<TrapItem> = io::read_jsonl(&args.traps)?;

    let groups = assemble_groups(&clips, group_size, raters, &gold, &traps, seed).map_err(CliError::processing)?;
    io::write_jsonl(&args.out, &groups)?;
    println!("{}", json!({ "groups": groups.len(), "clips": clips.len() }));
    Ok(ExitCode::SUCCESS)
}
