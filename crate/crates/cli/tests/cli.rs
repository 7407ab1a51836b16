mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{bursty_speech, snapshot, write_config, write_corpus};
use dnsc_core::audio::{read_wav, write_wav};
use dnsc_core::curation::ClipManifestEntry;
use dnsc_core::jsonl::{read_jsonl, write_jsonl};
use dnsc_core::AudioClip;
use serde_json::{json, Value};

fn dnsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dnsc"))
        .args(args)
        .env_remove("DNSC_CONFIG")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_of(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no JSON error in {text}"));
    serde_json::from_str(line).unwrap()
}

fn assert_exit(out: &Output, code: i32, kind: &str) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let e = error_of(out);
    assert_eq!(e["error"]["kind"], kind);
    assert_eq!(e["error"]["code"], code);
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_exit(&dnsc(&[]), 2, "usage");
    assert_exit(&dnsc(&["synth", "--bogus"]), 2, "usage");
}

#[test]
fn help_exits_zero() {
    let out = dnsc(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("rtcheck"));
}

#[test]
fn bad_config_is_rejected_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({ "synthesis": { "snr_range_db": [30.0, 10.0] } }));
    let out_dir = dir.path().join("out");
    let out = dnsc(&["--config", s(&cfg), "synth", "--count", "2", "--out-dir", s(&out_dir)]);
    assert_exit(&out, 3, "config");
    assert!(!out_dir.exists());

    let cfg = write_config(dir.path(), json!({ "no_such_section": {} }));
    let out = dnsc(&["--config", s(&cfg), "synth", "--count", "2", "--out-dir", s(&out_dir)]);
    assert_exit(&out, 3, "config");
    assert!(!out_dir.exists());
}

#[test]
fn synth_without_any_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dnsc(&["synth", "--count", "1", "--out-dir", s(&dir.path().join("o"))]);
    assert_exit(&out, 3, "config");
}

#[test]
fn missing_manifest_is_a_missing_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), json!({}));
    let out = dnsc(&["--config", s(&cfg), "synth", "--count", "1", "--out-dir", s(&dir.path().join("o"))]);
    assert_exit(&out, 4, "missing_input");
}

#[test]
fn synth_reads_config_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), 3, 2, 150, 6, 150);
    let cfg = write_config(dir.path(), json!({ "synthesis": { "duration_s": 2.0 } }));
    let out_dir = dir.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_dnsc"))
        .args(["synth", "--count", "4", "--out-dir", s(&out_dir)])
        .env("DNSC_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records: Vec<Value> = read_jsonl(&out_dir.join("mixes.jsonl")).unwrap();
    assert_eq!(records.len(), 4);
    for r in &records {
        let noisy = r["output_path"].as_str().unwrap();
        assert!(Path::new(noisy).is_relative(), "{noisy}");
        let clip = read_wav(&out_dir.join(noisy)).unwrap();
        assert_eq!(clip.len(), 32_000);
    }

    // --seed overrides the config and changes the output
    let other = dir.path().join("other");
    let out = dnsc(&["--config", s(&cfg), "--seed", "7", "synth", "--count", "4", "--out-dir", s(&other)]);
    assert!(out.status.success());
    assert_ne!(snapshot(&out_dir), snapshot(&other));
}

fn write_rirs(root: &Path, n: usize) {
    fs::create_dir_all(root.join("rir")).unwrap();
    let mut entries = Vec::new();
    for i in 0..n {
        let rel = Path::new("rir").join(format!("rir{i}.wav"));
        let samples: Vec<f64> = (0..1600)
            .map(|k| {
                let sign = if (k * 7 + i) % 3 == 0 { -1.0 } else { 1.0 };
                sign * 0.9 * (-(k as f64) / 300.0).exp()
            })
            .collect();
        write_wav(&AudioClip::from_samples(samples), &root.join(&rel)).unwrap();
        entries.push(ClipManifestEntry {
            clip_id: format!("rir{i}"),
            path: rel,
            duration_s: 0.1,
            rt60_ms: Some(400.0 + 100.0 * i as f64),
            ..Default::default()
        });
    }
    write_jsonl(&root.join("rir.jsonl"), &entries).unwrap();
}

#[test]
fn testset_builds_both_sets_with_planned_counts() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), 6, 2, 150, 30, 150);
    write_rirs(dir.path(), 4);
    let cfg = write_config(
        dir.path(),
        json!({
            "corpus": {
                "speech_manifest": "speech.jsonl",
                "noise_manifest": "noise.jsonl",
                "rir_manifest": "rir.jsonl",
            },
            "testset": {
                "plan": {
                    "quota": 6,
                    "priority_classes": ["class0", "class1"],
                    "clips_per_priority": 2,
                    "random_fill": 2,
                    "duration_s": 2.0,
                },
            },
        }),
    );
    let out_dir = dir.path().join("test");
    let out = dnsc(&["--config", s(&cfg), "testset", "--out-dir", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("testset_report.json"));
    for set in ["dev", "blind"] {
        assert_eq!(report[set]["synthetic_no_reverb"], 6);
        assert_eq!(report[set]["synthetic_reverb"], 6);
        let entries: Vec<Value> = read_jsonl(&out_dir.join(set).join("manifest.jsonl")).unwrap();
        assert_eq!(entries.len(), 12);
        for e in &entries {
            let p = out_dir.join(set).join(e["clip_path"].as_str().unwrap());
            assert!(p.exists(), "{}", p.display());
        }
    }

    // rerun is byte-identical
    let again = dir.path().join("again");
    assert!(dnsc(&["--config", s(&cfg), "testset", "--out-dir", s(&again)]).status.success());
    assert_eq!(snapshot(&out_dir), snapshot(&again));
}

#[test]
fn curate_excerpts_then_select_chapters() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 4, 1, 3000, 20, 100);
    let cfg = write_config(
        dir.path(),
        json!({
            "curation": {
                "min_speaker_minutes": 0.5,
                "segment_s": 10.0,
                "excerpts_per_chapter": 3,
                "class_floor": 2,
            },
        }),
    );
    let out_dir = dir.path().join("cur");
    let out = dnsc(&["--config", s(&cfg), "curate", "--excerpts", "--out-dir", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let excerpts: Vec<ClipManifestEntry> = read_jsonl(&out_dir.join("excerpts.jsonl")).unwrap();
    assert_eq!(excerpts.len(), 12);

    // chapter k gets MOS k + 1; the upper quartile of four chapters is the best one
    let mut csv = String::from("rater_id,clip_id,group_id,score,timestamp,trap_answer,gold_delta\n");
    for (i, e) in excerpts.iter().enumerate() {
        let k = corpus.speech.iter().position(|s| s.chapter_id == e.chapter_id).unwrap();
        csv.push_str(&format!("r{i},{},g{i},{},t,,\n", e.clip_id, k + 1));
    }
    let ratings = dir.path().join("ratings.csv");
    fs::write(&ratings, csv).unwrap();
    let out = dnsc(&["--config", s(&cfg), "curate", "--ratings", s(&ratings), "--out-dir", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("curation_report.json"));
    assert_eq!(report["selected_chapters"], json!(["ch03_00"]));
    let clean: Vec<ClipManifestEntry> = read_jsonl(&out_dir.join("clean.jsonl")).unwrap();
    assert_eq!(clean.len(), 6, "one 60 s chapter in 10 s segments");
    assert!(clean.iter().all(|c| c.speaker_id.as_deref() == Some("spk03")));
    let noise: Vec<ClipManifestEntry> = read_jsonl(&out_dir.join("noise.jsonl")).unwrap();
    assert_eq!(noise.len(), 10, "five classes at a floor of two");
}

#[test]
fn groups_cover_every_clip_the_requested_number_of_times() {
    let dir = tempfile::tempdir().unwrap();
    let clips: Vec<String> = (0..23).map(|i| format!("clip{i:02}")).collect();
    fs::write(dir.path().join("clips.txt"), clips.join("\n") + "\n").unwrap();
    fs::write(dir.path().join("gold.jsonl"), "{\"clip_id\":\"gold0\",\"truth\":5.0}\n").unwrap();
    fs::write(
        dir.path().join("traps.jsonl"),
        "{\"clip_id\":\"trap0\",\"expected_answer\":2}\n",
    )
    .unwrap();
    let out_path = dir.path().join("groups.jsonl");
    let out = dnsc(&[
        "--seed",
        "5",
        "groups",
        "--clips",
        s(&dir.path().join("clips.txt")),
        "--gold",
        s(&dir.path().join("gold.jsonl")),
        "--traps",
        s(&dir.path().join("traps.jsonl")),
        "--out",
        s(&out_path),
        "--group-size",
        "4",
        "--raters-per-clip",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let groups: Vec<Value> = read_jsonl(&out_path).unwrap();
    for c in &clips {
        let n = groups
            .iter()
            .filter(|g| g["payload_clip_ids"].as_array().unwrap().iter().any(|x| x == c.as_str()))
            .count();
        assert_eq!(n, 3, "{c}");
    }
    assert!(groups.iter().all(|g| g["gold_clip_id"] == "gold0" && g["trap_clip_id"] == "trap0"));
}

#[test]
fn score_then_rank() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({
            "eval": {
                "spam": { "default_trap_answer": 3 },
                "complexity": { "a": "RT", "b": "NRT" },
            },
        }),
    );
    // noisy ~2, a and b ~4 and indistinguishable, c ~3; one spammer fails every trap
    let mut model_csv = String::from("rater_id,clip_id,group_id,score,timestamp,trap_answer,gold_delta\n");
    let mut noisy_csv = model_csv.clone();
    for clip in 0..12 {
        for r in 0..6 {
            let jitter = (clip + r) % 3 - 1;
            for (model, base) in [("a", 4), ("b", 4), ("c", 3)] {
                let score = (base + if r % 2 == 0 { jitter } else { 0 }).clamp(1, 5);
                model_csv.push_str(&format!("r{r},{model}/s{clip},g{r},{score},t,3,0\n"));
            }
            let score = (2 + jitter).clamp(1, 5);
            noisy_csv.push_str(&format!("r{r},noisy/s{clip},g{r},{score},t,3,0\n"));
        }
        model_csv.push_str(&format!("spam,a/s{clip},gs,1,t,1,0\n"));
    }
    fs::write(dir.path().join("models.csv"), model_csv).unwrap();
    fs::write(dir.path().join("noisy.csv"), noisy_csv).unwrap();
    let out_dir = dir.path().join("scores");
    let out = dnsc(&[
        "--config",
        s(&cfg),
        "score",
        "--ratings",
        s(&dir.path().join("models.csv")),
        "--noisy-baseline",
        s(&dir.path().join("noisy.csv")),
        "--out-dir",
        s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let verdicts = read_json(&out_dir.join("verdicts.json"));
    let spam = verdicts.as_array().unwrap().iter().find(|v| v["rater_id"] == "spam").unwrap();
    assert_eq!(spam["discarded"], true);
    let summaries = read_json(&out_dir.join("summaries.json"));
    let a = summaries["summaries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["scope"]["model"] == "a")
        .unwrap();
    assert!((a["mos"].as_f64().unwrap() - 4.0).abs() < 0.2);
    assert!(a["dmos"].as_f64().unwrap() > 1.5);

    let ranking_path = dir.path().join("ranking.json");
    let out = dnsc(&[
        "--config",
        s(&cfg),
        "rank",
        "--summaries",
        s(&out_dir.join("summaries.json")),
        "--pvalues",
        s(&out_dir.join("pvalues.json")),
        "--out",
        s(&ranking_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ranking = read_json(&ranking_path);
    let order: Vec<&str> = ranking["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["model"].as_str().unwrap())
        .collect();
    assert_eq!(order, ["a", "b", "c"]);
}

#[test]
fn validate_reports_rank_correlation() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("crowd.csv"), "condition,mos\nx,3.1\ny,3.9\nz,2.0\nw,4.4\n").unwrap();
    fs::write(dir.path().join("lab.csv"), "condition,mos\nx,3.0\nz,1.5\ny,4.0\nw,4.6\nextra,2\n").unwrap();
    let out = dnsc(&[
        "validate",
        "--crowd",
        s(&dir.path().join("crowd.csv")),
        "--lab",
        s(&dir.path().join("lab.csv")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["conditions"], 4);
    assert!((v["spearman_rho"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["unmatched"], json!(["extra"]));

    let out = dnsc(&["validate", "--crowd", s(&dir.path().join("nope.csv")), "--lab", s(&dir.path().join("lab.csv"))]);
    assert_exit(&out, 4, "missing_input");
}

#[test]
fn rtcheck_with_subprocess_passthrough() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.wav");
    write_wav(&bursty_speech(3, 600, 0.3), &input).unwrap();
    let report = dir.path().join("report.json");
    let output = dir.path().join("out.wav");
    let out = dnsc(&[
        "rtcheck",
        "--input",
        s(&input),
        "--lookahead-ms",
        "10",
        "--report",
        s(&report),
        "--output-wav",
        s(&output),
        "--",
        env!("CARGO_BIN_EXE_dnsc-passthrough"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    assert_eq!(r["structural_pass"], true);
    assert_eq!(r["timing_pass"], true);
    assert_eq!(r["total_frames"], 600);
    assert_eq!(read_wav(&output).unwrap().samples(), read_wav(&input).unwrap().samples());

    // a 50 ms frame breaks the structural rules
    let out = dnsc(&["rtcheck", "--input", s(&input), "--frame-ms", "50", "--report", s(&report)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(read_json(&report)["structural_pass"], false);
}
