use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use dnsc_core::synthesis::{self, ClipKind, ManifestCorpus, MixRecord, OutputLayout};
use log::info;

use super::Context;
use crate::error::Result;
use crate::io;
use crate::GlobalArgs;

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Number of noisy clips to generate.
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads; output does not depend on this.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Set name, used in file names and seed streams.
    #[arg(long, default_value = "train")]
    pub set: String,
}

pub const MANIFEST: &str = "mixes.jsonl";

/// Record with paths relative to the output root.
pub fn relativize(mut r: MixRecord, root: &Path) -> MixRecord {
    r.output_path = io::relative_to(&r.output_path, root);
    r.clean_path = io::relative_to(&r.clean_path, root);
    r.noise_path = io::relative_to(&r.noise_path, root);
    r
}

pub fn run(g: &GlobalArgs, args: &SynthArgs) -> Result<ExitCode> {
    let ctx = Context::load(g)?;
    let seed = ctx.seed()?;
    let cfg = &ctx.cfg;
    let speech = io::read_manifest(io::configured(&cfg.corpus.speech_manifest, "speech_manifest")?)?;
    let noise = io::read_manifest(io::configured(&cfg.corpus.noise_manifest, "noise_manifest")?)?;
    let rirs = match &cfg.corpus.rir_manifest {
        Some(p) => io::read_manifest(p)?,
        None => Vec::new(),
    };

    let recipes = synthesis::sample_recipes(&cfg.synthesis, &args.set, &speech, &noise, &rirs, args.count, seed)?;
    let mut corpus = ManifestCorpus::new(cfg.base_dir());
    corpus.add(ClipKind::Speech, &speech);
    corpus.add(ClipKind::Noise, &noise);
    corpus.add(ClipKind::Rir, &rirs);

    io::create_dir(&args.out_dir)?;
    let layout = OutputLayout::new(&args.out_dir);
    let records = synthesis::synthesize_all(&recipes, &corpus, &cfg.synthesis, &layout, args.jobs)?;
    let records: Vec<MixRecord> = records.into_iter().map(|r| relativize(r, &args.out_dir)).collect();
    let manifest = args.out_dir.join(MANIFEST);
    io::write_jsonl(&manifest, &records)?;
    info!("wrote {} mixes to {}", records.len(), args.out_dir.display());
    println!(
        "{}",
        serde_json::json!({ "count": records.len(), "manifest": manifest })
    );
    Ok(ExitCode::SUCCESS)
}
