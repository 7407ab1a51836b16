use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use dnsc_core::audio;
use dnsc_core::curation::{self, ClipManifestEntry};
use dnsc_core::eval::read_ratings;
use dnsc_core::seed::stream_rng;
use dnsc_core::synthesis::{ClipKind, ClipSource, ManifestCorpus};
use log::warn;
use serde_json::json;

use super::Context;
use crate::error::{require, CliError, Result};
use crate::io;
use crate::GlobalArgs;

#[derive(Args, Debug)]
pub struct CurateArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Ratings of chapter excerpts (CSV); overrides `corpus.chapter_ratings`.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Cut excerpts of every chapter for rating instead of curating.
    #[arg(long)]
    pub excerpts: bool,
}

pub fn run(g: &GlobalArgs, args: &CurateArgs) -> Result<ExitCode> {
    let ctx = Context::load(g)?;
    if args.excerpts {
        cut_excerpts(&ctx, args)
    } else {
        curate(&ctx, args)
    }
}

fn cut_excerpts(ctx: &Context, args: &CurateArgs) -> Result<ExitCode> {
    let seed = ctx.seed()?;
    let cfg = &ctx.cfg;
    let speech = io::read_manifest(io::configured(&cfg.corpus.speech_manifest, "speech_manifest")?)?;
    let mut chapters: BTreeMap<&str, &ClipManifestEntry> = BTreeMap::new();
    for e in &speech {
        if let Some(ch) = &e.chapter_id {
            if chapters.insert(ch, e).is_some() {
                return Err(CliError::processing(format!("chapter '{ch}' appears more than once")));
            }
        }
    }
    let mut corpus = ManifestCorpus::new(cfg.base_dir());
    corpus.add(ClipKind::Speech, &speech);

    let dir = args.out_dir.join("excerpts");
    io::create_dir(&dir)?;
    let mut entries = Vec::new();
    for (ch, e) in chapters {
        let clip = corpus
            .load(ClipKind::Speech, &e.clip_id)
            .map_err(|m| CliError::new(crate::error::ErrorKind::MissingInput, format!("{}: {m}", e.clip_id)))?;
        let mut rng = stream_rng(seed, &format!("curate/excerpts/{ch}"), 0);
        let excerpts = curation::sample_chapter_segments(
            &clip,
            cfg.curation.excerpts_per_chapter,
            cfg.curation.segment_s,
            &mut rng,
        )
        .map_err(|err| CliError::processing(format!("chapter '{ch}': {err}")))?;
        for (k, x) in excerpts.iter().enumerate() {
            let id = curation::excerpt_id(ch, k);
            let rel = Path::new("excerpts").join(format!("{id}.wav"));
            audio::write_wav(&x.clip, &args.out_dir.join(&rel)).map_err(CliError::processing)?;
            entries.push(ClipManifestEntry {
                clip_id: id,
                path: rel,
                duration_s: x.clip.duration_s(),
                speaker_id: e.speaker_id.clone(),
                chapter_id: Some(ch.to_string()),
                ..Default::default()
            });
        }
    }
    io::write_jsonl(&args.out_dir.join("excerpts.jsonl"), &entries)?;
    println!("{}", json!({ "excerpts": entries.len() }));
    Ok(ExitCode::SUCCESS)
}

fn curate(ctx: &Context, args: &CurateArgs) -> Result<ExitCode> {
    let cfg = &ctx.cfg;
    let c = &cfg.curation;
    let speech = io::read_manifest(io::configured(&cfg.corpus.speech_manifest, "speech_manifest")?)?;
    let noise = match &cfg.corpus.noise_manifest {
        Some(p) => Some(io::read_manifest(p)?),
        None => None,
    };
    let ratings_path = args.ratings.as_ref().or(cfg.corpus.chapter_ratings.as_ref());
    let ratings = match ratings_path {
        Some(p) => {
            require(p)?;
            let f = File::open(p).map_err(|e| CliError::processing(format!("{}: {e}", p.display())))?;
            Some(read_ratings(f).map_err(CliError::processing)?)
        }
        None => None,
    };

    let mut report = serde_json::Map::new();
    let selected_speech: Vec<ClipManifestEntry> = match &ratings {
        Some(r) => {
            let qualities = curation::chapter_qualities(r).map_err(CliError::processing)?;
            let chosen = curation::select_clean_chapters(&qualities, &c.selection).map_err(CliError::processing)?;
            let keep: BTreeSet<&str> = chosen.iter().map(String::as_str).collect();
            report.insert("chapter_mos".into(), json!(qualities
                .iter()
                .map(|q| (q.chapter_id.clone(), q.chapter_mos))
                .collect::<BTreeMap<_, _>>()));
            report.insert("selected_chapters".into(), json!(chosen));
            speech
                .iter()
                .filter(|e| e.chapter_id.as_deref().is_some_and(|ch| keep.contains(ch)))
                .cloned()
                .collect()
        }
        None => {
            warn!("no chapter ratings given; keeping every chapter");
            speech.clone()
        }
    };
    let by_speaker = curation::filter_speakers_by_duration(&selected_speech, c.min_speaker_minutes);
    let clean = curation::segment_clips(&by_speaker, c.segment_s);
    report.insert(
        "speech".into(),
        json!({
            "input": speech.len(),
            "after_chapter_selection": selected_speech.len(),
            "after_speaker_filter": by_speaker.len(),
            "segments": clean.len(),
        }),
    );

    let noise_out = noise.map(|noise| {
        let removal = curation::remove_speech_clips(&noise, &c.speech_labels, None);
        let balance = curation::balance_classes(&removal.kept, c.class_floor);
        for d in &balance.deficient {
            warn!("class '{}' has {} clips, floor is {}", d.class, d.available, d.floor);
        }
        report.insert(
            "noise".into(),
            json!({
                "input": noise.len(),
                "removed_speech": removal.removed,
                "warnings": removal.warnings,
                "selected": balance.selected.len(),
                "class_counts": balance.class_counts,
                "deficient": balance.deficient,
            }),
        );
        balance.selected
    });

    io::create_dir(&args.out_dir)?;
    io::write_jsonl(&args.out_dir.join("clean.jsonl"), &clean)?;
    if let Some(n) = &noise_out {
        io::write_jsonl(&args.out_dir.join("noise.jsonl"), n)?;
    }
    io::write_json(&args.out_dir.join("curation_report.json"), &report)?;
    println!(
        "{}",
        json!({ "clean": clean.len(), "noise": noise_out.as_ref().map(Vec::len) })
    );
    Ok(ExitCode::SUCCESS)
}
