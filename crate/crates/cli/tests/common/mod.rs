//! On-disk fixture corpora for CLI tests.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use dnsc_core::audio::{write_wav, AudioClip};
use dnsc_core::curation::ClipManifestEntry;
use dnsc_core::jsonl::write_jsonl;
use dnsc_core::seed::stream_rng;
use rand::Rng;

pub const FRAME: usize = 320;

/// Random bursts with exact-zero pauses, frame aligned, so frame activity
/// does not depend on gain or quantization.
pub fn bursty_speech(seed: u64, frames: usize, amp: f64) -> AudioClip {
    let mut r = stream_rng(seed, "fixture/speech", 0);
    let mut samples = Vec::with_capacity(frames * FRAME);
    for f in 0..frames {
        let silent = f % 7 == 6 || f % 11 == 10;
        for _ in 0..FRAME {
            samples.push(if silent { 0.0 } else { r.gen_range(-amp..amp) });
        }
    }
    AudioClip::from_samples(samples)
}

/// Noise with a per-frame level between roughly -35 and -15 dBFS and a few
/// silent frames.
pub fn frame_noise(seed: u64, frames: usize) -> AudioClip {
    let mut r = stream_rng(seed, "fixture/noise", 0);
    let mut samples = Vec::with_capacity(frames * FRAME);
    for f in 0..frames {
        let a = if f % 13 == 12 { 0.0 } else { r.gen_range(0.03..0.3) };
        for _ in 0..FRAME {
            samples.push(if a == 0.0 { 0.0 } else { r.gen_range(-a..a) });
        }
    }
    AudioClip::from_samples(samples)
}

pub struct Corpus {
    pub root: PathBuf,
    pub speech: Vec<ClipManifestEntry>,
    pub noise: Vec<ClipManifestEntry>,
}

/// `speakers` x `clips_per_speaker` speech files of `speech_frames` frames
/// and `noise_clips` noise files of `noise_frames` frames under `root`,
/// with `speech.jsonl` and `noise.jsonl` manifests.
pub fn write_corpus(
    root: &Path,
    speakers: usize,
    clips_per_speaker: usize,
    speech_frames: usize,
    noise_clips: usize,
    noise_frames: usize,
) -> Corpus {
    fs::create_dir_all(root.join("speech")).unwrap();
    fs::create_dir_all(root.join("noise")).unwrap();
    let mut speech = Vec::new();
    for s in 0..speakers {
        let amp = 0.2 + 0.1 * (s % 4) as f64;
        for c in 0..clips_per_speaker {
            let id = format!("spk{s:02}_c{c:02}");
            let rel = PathBuf::from("speech").join(format!("{id}.wav"));
            let clip = bursty_speech((s * 100 + c) as u64, speech_frames, amp);
            write_wav(&clip, &root.join(&rel)).unwrap();
            speech.push(ClipManifestEntry {
                clip_id: id,
                path: rel,
                duration_s: clip.duration_s(),
                speaker_id: Some(format!("spk{s:02}")),
                chapter_id: Some(format!("ch{s:02}_{c:02}")),
                ..Default::default()
            });
        }
    }
    let mut noise = Vec::new();
    for n in 0..noise_clips {
        let id = format!("noise{n:03}");
        let rel = PathBuf::from("noise").join(format!("{id}.wav"));
        let clip = frame_noise(1000 + n as u64, noise_frames);
        write_wav(&clip, &root.join(&rel)).unwrap();
        noise.push(ClipManifestEntry {
            clip_id: id,
            path: rel,
            duration_s: clip.duration_s(),
            labels: [format!("class{}", n % 5)].into(),
            ..Default::default()
        });
    }
    write_jsonl(&root.join("speech.jsonl"), &speech).unwrap();
    write_jsonl(&root.join("noise.jsonl"), &noise).unwrap();
    Corpus {
        root: root.to_path_buf(),
        speech,
        noise,
    }
}

/// Config pointing at a corpus written by [`write_corpus`].
pub fn write_config(root: &Path, extra: serde_json::Value) -> PathBuf {
    let mut cfg = serde_json::json!({
        "master_seed": 20200101u64,
        "corpus": {
            "speech_manifest": "speech.jsonl",
            "noise_manifest": "noise.jsonl",
        },
    });
    if let (Some(base), Some(extra)) = (cfg.as_object_mut(), extra.as_object()) {
        for (k, v) in extra {
            base.insert(k.clone(), v.clone());
        }
    }
    let path = root.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

/// Every file under `dir` with its bytes, keyed by relative path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
