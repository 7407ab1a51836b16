use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use dnsc_core::synthesis::{ClipKind, ManifestCorpus, MixRecipe, OutputLayout};
use dnsc_core::testset::{self, TestCorpora, TestSetEntry, SYNTHETIC_NO_REVERB, SYNTHETIC_REVERB};
use serde_json::json;

use super::synth::relativize;
use super::Context;
use crate::error::Result;
use crate::io;
use crate::GlobalArgs;

#[derive(Args, Debug)]
pub struct TestsetArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

pub const SETS: [&str; 2] = ["dev", "blind"];

pub fn run(g: &GlobalArgs, args: &TestsetArgs) -> Result<ExitCode> {
    let ctx = Context::load(g)?;
    let seed = ctx.seed()?;
    let cfg = &ctx.cfg;
    let corpora = TestCorpora {
        speech: io::read_manifest(io::configured(&cfg.corpus.speech_manifest, "speech_manifest")?)?,
        noise: io::read_manifest(io::configured(&cfg.corpus.noise_manifest, "noise_manifest")?)?,
        rirs: io::read_manifest(io::configured(&cfg.corpus.rir_manifest, "rir_manifest")?)?,
    };
    let plan = &cfg.testset.plan;
    let (dev, blind) = if cfg.testset.disjoint {
        testset::partition_sources(&corpora, plan, seed)
    } else {
        (corpora.clone(), corpora.clone())
    };

    // plan everything before writing anything
    let mut planned: Vec<(&str, &str, Vec<MixRecipe>)> = Vec::new();
    for (set, sources) in SETS.iter().zip([&dev, &blind]) {
        for (category, reverb) in [(SYNTHETIC_NO_REVERB, false), (SYNTHETIC_REVERB, true)] {
            let recipes = testset::build_synthetic_category(plan, reverb, sources, set, seed)?;
            planned.push((set, category, recipes));
        }
    }
    let mut real = Vec::new();
    for (set, categories) in &cfg.testset.real_recordings {
        for (category, paths) in categories {
            real.push((set.clone(), category.clone(), io::expand_wavs(paths)?));
        }
    }

    let mut corpus = ManifestCorpus::new(cfg.base_dir());
    corpus.add(ClipKind::Speech, &corpora.speech);
    corpus.add(ClipKind::Noise, &corpora.noise);
    corpus.add(ClipKind::Rir, &corpora.rirs);

    let mut summary = serde_json::Map::new();
    let mut warnings = Vec::new();
    for set in SETS {
        let root = args.out_dir.join(set);
        io::create_dir(&root)?;
        let mut entries: Vec<TestSetEntry> = Vec::new();
        for (_, category, recipes) in planned.iter().filter(|(s, _, _)| *s == set) {
            let layout = OutputLayout::new(root.join(category));
            let rendered = testset::render_category(category, recipes, &corpus, &cfg.synthesis, &layout, args.jobs)?;
            entries.extend(rendered.into_iter().map(|mut e| {
                e.clip_path = io::relative_to(&e.clip_path, &root);
                e.clean_path = e.clean_path.map(|p| io::relative_to(&p, &root));
                e.mix_record = e.mix_record.map(|r| relativize(r, &root));
                e
            }));
        }
        for (_, category, paths) in real.iter().filter(|(s, _, _)| s == set) {
            let (found, w) = testset::register_real_recordings(category, paths);
            entries.extend(found);
            warnings.extend(w);
        }
        let mut counts = serde_json::Map::new();
        for e in &entries {
            let n = counts.entry(e.category.clone()).or_insert(json!(0));
            *n = json!(n.as_u64().unwrap_or(0) + 1);
        }
        io::write_jsonl(&root.join("manifest.jsonl"), &entries)?;
        summary.insert(set.to_string(), counts.into());
    }
    summary.insert("warnings".into(), json!(warnings));
    io::write_json(&args.out_dir.join("testset_report.json"), &summary)?;
    println!("{}", serde_json::Value::Object(summary));
    Ok(ExitCode::SUCCESS)
}
