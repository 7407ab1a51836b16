// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod io;

use error::{CliError, ErrorKind};

/// Noisy-speech corpus synthesis, test-set construction and crowdsourced
/// MOS analysis.
#[derive(Parser, Debug)]
#[command(name = "dnsc", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Pipeline config (JSON).
    #[arg(long, global = true, env = config::CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `master_seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prepare clean speech and noise manifests.
    Curate(commands::curate::CurateArgs),
    /// Generate a training set of noisy/clean/noise triples.
    Synth(commands::synth::SynthArgs),
    /// Build the development and blind test sets.
    Testset(commands::testset::TestsetArgs),
    /// Plan rating groups with gold and trap items.
    Groups(commands::groups::GroupsArgs),
    /// Filter spam raters and compute MOS, dMOS, CIs and pairwise p-values.
    Score(commands::score::ScoreArgs),
    /// Rank models with the complexity tie-break.
    Rank(commands::rank::RankArgs),
    /// Check a frame-based backend against the real-time rules.
    Rtcheck(commands::rtcheck::RtcheckArgs),
    /// Correlate crowdsourced MOS with a lab MOS table.
    Validate(commands::validate::ValidateArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::new(ErrorKind::Usage, e.to_string().trim_end());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.kind.exit_code());
        }
    };
    let g = &cli.global;
    let result = match cli.command {
        Command::Curate(a) => commands::curate::run(g, &a),
        Command::Synth(a) => commands::synth::run(g, &a),
        Command::Testset(a) => commands::testset::run(g, &a),
        Command::Groups(a) => commands::groups::run(g, &a),
        Command::Score(a) => commands::score::run(g, &a),
        Command::Rank(a) => commands::rank::run(g, &a),
        Command::Rtcheck(a) => commands::rtcheck::run(g, &a),
        Command::Validate(a) => commands::validate::run(g, &a),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.kind.exit_code())
        }
    }
}
