use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use dnsc_core::audio;
use dnsc_core::rtcheck::{self, BackendDescriptor, FrameProcessor, Passthrough, SubprocessProcessor};

use super::Context;
use crate::error::{require, CliError, ErrorKind, Result};
use crate::io;
use crate::GlobalArgs;

#[derive(Args, Debug)]
pub struct RtcheckArgs {
    /// Input WAV to process.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub frame_ms: Option<f64>,
    #[arg(long)]
    pub lookahead_ms: Option<f64>,
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Write the compliance report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the processed audio.
    #[arg(long)]
    pub output_wav: Option<PathBuf>,
    /// Backend command speaking the frame protocol; in-process passthrough if absent.
    #[arg(last = true)]
    pub backend: Vec<String>,
}

/// Exit status of a check that ran but found the backend non-compliant.
pub const NON_COMPLIANT: u8 = 1;

pub fn run(g: &GlobalArgs, args: &RtcheckArgs) -> Result<ExitCode> {
    let ctx = Context::load(g)?;
    let rc = &ctx.cfg.rtcheck;
    let desc = BackendDescriptor {
        frame_ms: args.frame_ms.unwrap_or(rc.frame_ms),
        lookahead_ms: args.lookahead_ms.unwrap_or(rc.lookahead_ms),
    };
    desc.validate().map_err(CliError::config)?;
    let warmup = args.warmup.unwrap_or(rc.warmup_frames);
    require(&args.input)?;
    let clip = audio::read_wav(&args.input).map_err(CliError::processing)?;

    let mut processor: Box<dyn FrameProcessor> = match args.backend.split_first() {
        Some((program, rest)) => Box::new(
            SubprocessProcessor::spawn(program, rest).map_err(|e| CliError::new(ErrorKind::MissingInput, e))?,
        ),
        None => Box::new(Passthrough),
    };
    let m = rtcheck::measure(&desc, processor.as_mut(), &clip, warmup).map_err(CliError::processing)?;
    drop(processor);

    if let Some(p) = &args.output_wav {
        audio::write_wav(&m.output, p).map_err(CliError::processing)?;
    }
    match &args.report {
        Some(p) => io::write_json(p, &m.report)?,
        None => println!("{}", serde_json::to_string_pretty(&m.report).map_err(CliError::processing)?),
    }
    let r = &m.report;
    eprintln!(
        "frame {} ms, budget {} ms: mean {:.3} ms, p99 {:.3} ms, max {:.3} ms, {} frames over budget; structure {}, timing {}",
        r.frame_ms,
        r.budget_ms,
        r.mean_ms,
        r.p99_ms,
        r.max_ms,
        r.frames_over_budget,
        verdict(r.structural_pass),
        verdict(r.timing_pass)
    );
    Ok(if r.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(NON_COMPLIANT)
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}
