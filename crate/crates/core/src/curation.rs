//! Source corpus preparation: chapter quality screening and speaker filtering
//! for clean speech, and label-driven cleanup and class balancing for noise.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use log::warn;
use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioClip;
use crate::eval::RatingRecord;
use crate::seed::PipelineRng;

pub const DEFAULT_SEGMENT_S: f64 = 10.0;
pub const DEFAULT_SEGMENTS_PER_CHAPTER: usize = 10;
pub const DEFAULT_MIN_SPEAKER_MINUTES: f64 = 15.0;
pub const DEFAULT_CLASS_FLOOR: usize = 500;
pub const DEFAULT_MOS_THRESHOLD: f64 = 4.3;

#[derive(Error, Debug)]
pub enum CurationError {
    #[error("chapter of {duration_s:.3} s is shorter than one {segment_s} s segment")]
    ChapterTooShort { duration_s: f64, segment_s: f64 },
    #[error("no chapters to select from")]
    NoChapters,
    #[error("chapter '{0}' has no ratings")]
    UnratedChapter(String),
    #[error("score {score} for '{segment}' is outside 1..=5")]
    InvalidScore { segment: String, score: u8 },
}

pub type Result<T> = std::result::Result<T, CurationError>;

/// Metadata for one clip of a speech, noise or impulse-response corpus.
///
/// Segments share their parent's `path` and carry an `offset_s` into it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClipManifestEntry {
    pub clip_id: String,
    pub path: PathBuf,
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub labels: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chapter_id: Option<String>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub offset_s: f64,
    /// Reverberation time, for impulse responses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rt60_ms: Option<f64>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// Chapter MOS from the ratings of its sampled excerpts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChapterQuality {
    pub chapter_id: String,
    pub segment_ratings: Vec<(String, u8)>,
    pub chapter_mos: f64,
}

impl ChapterQuality {
    pub fn from_ratings(chapter_id: impl Into<String>, segment_ratings: Vec<(String, u8)>) -> Result<Self> {
        let chapter_id = chapter_id.into();
        if segment_ratings.is_empty() {
            return Err(CurationError::UnratedChapter(chapter_id));
        }
        if let Some((segment, score)) = segment_ratings.iter().find(|(_, s)| !(1..=5).contains(s)) {
            return Err(CurationError::InvalidScore {
                segment: segment.clone(),
                score: *score,
            });
        }
        let chapter_mos =
            segment_ratings.iter().map(|(_, s)| f64::from(*s)).sum::<f64>() / segment_ratings.len() as f64;
        Ok(ChapterQuality {
            chapter_id,
            segment_ratings,
            chapter_mos,
        })
    }
}

/// Id of excerpt `k` of a chapter, as used in rating sheets.
pub fn excerpt_id(chapter_id: &str, k: usize) -> String {
    format!("{chapter_id}__seg{k:02}")
}

/// Inverse of [`excerpt_id`].
pub fn chapter_of_excerpt(id: &str) -> Option<&str> {
    let (chapter, k) = id.rsplit_once("__seg")?;
    k.parse::<usize>().ok().map(|_| chapter)
}

/// Group excerpt ratings by chapter. Ratings whose clip id is not an excerpt
/// id are ignored.
pub fn chapter_qualities(ratings: &[RatingRecord]) -> Result<Vec<ChapterQuality>> {
    let mut by_chapter: BTreeMap<&str, Vec<(String, u8)>> = BTreeMap::new();
    for r in ratings {
        if let Some(ch) = chapter_of_excerpt(&r.clip_id) {
            by_chapter.entry(ch).or_default().push((r.clip_id.clone(), r.score));
        }
    }
    by_chapter
        .into_iter()
        .map(|(ch, rs)| ChapterQuality::from_ratings(ch, rs))
        .collect()
}

/// A fixed-length excerpt cut from a chapter recording.
#[derive(Clone, Debug)]
pub struct ChapterExcerpt {
    pub start_sample: usize,
    pub clip: AudioClip,
}

impl ChapterExcerpt {
    pub fn start_s(&self) -> f64 {
        self.start_sample as f64 / f64::from(self.clip.sample_rate_hz())
    }
}

/// Cut up to `count` excerpts of `segment_s` seconds at distinct random
/// start offsets. Short chapters yield fewer excerpts, which may overlap.
pub fn sample_chapter_segments(
    chapter: &AudioClip,
    count: usize,
    segment_s: f64,
    rng: &mut PipelineRng,
) -> Result<Vec<ChapterExcerpt>> {
    let seg = (segment_s * f64::from(chapter.sample_rate_hz())).round() as usize;
    if seg == 0 || chapter.len() < seg {
        return Err(CurationError::ChapterTooShort {
            duration_s: chapter.duration_s(),
            segment_s,
        });
    }
    let positions = chapter.len() - seg + 1;
    let mut starts = index::sample(rng, positions, count.min(positions)).into_vec();
    starts.sort_unstable();
    Ok(starts
        .into_iter()
        .map(|start_sample| ChapterExcerpt {
            start_sample,
            clip: chapter.slice(start_sample, seg),
        })
        .collect())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Top 25% of chapters by MOS; ties at the boundary are all kept.
    #[default]
    UpperQuartile,
    /// Chapters with MOS at or above `min_mos`.
    Threshold { min_mos: f64 },
}

/// Ids of the chapters kept under `policy`, best first.
pub fn select_clean_chapters(qualities: &[ChapterQuality], policy: &SelectionPolicy) -> Result<Vec<String>> {
    if qualities.is_empty() {
        return Err(CurationError::NoChapters);
    }
    if let Some(q) = qualities.iter().find(|q| q.segment_ratings.is_empty()) {
        return Err(CurationError::UnratedChapter(q.chapter_id.clone()));
    }
    let mut sorted: Vec<&ChapterQuality> = qualities.iter().collect();
    sorted.sort_by(|a, b| {
        b.chapter_mos
            .total_cmp(&a.chapter_mos)
            .then_with(|| a.chapter_id.cmp(&b.chapter_id))
    });
    let cutoff = match policy {
        SelectionPolicy::UpperQuartile => {
            let k = (sorted.len() as f64 * 0.25).ceil() as usize;
            sorted[k.max(1) - 1].chapter_mos
        }
        SelectionPolicy::Threshold { min_mos } => *min_mos,
    };
    Ok(sorted
        .into_iter()
        .filter(|q| q.chapter_mos >= cutoff)
        .map(|q| q.chapter_id.clone())
        .collect())
}

/// Drop every speaker whose total duration is below `min_minutes`.
/// Entries without a speaker id are dropped as well.
pub fn filter_speakers_by_duration(entries: &[ClipManifestEntry], min_minutes: f64) -> Vec<ClipManifestEntry> {
    let mut totals: HashMap<&str, f64> = HashMap::new();
    for e in entries {
        match &e.speaker_id {
            Some(s) => *totals.entry(s).or_default() += e.duration_s,
            None => warn!("dropping '{}': no speaker id", e.clip_id),
        }
    }
    let min_s = min_minutes * 60.0;
    entries
        .iter()
        .filter(|e| {
            e.speaker_id
                .as_deref()
                // tolerance for durations summed from rounded values
                .is_some_and(|s| totals[s] + 1e-9 >= min_s)
        })
        .cloned()
        .collect()
}

/// Split every entry into whole `segment_s` segments; the remainder is dropped.
pub fn segment_clips(entries: &[ClipManifestEntry], segment_s: f64) -> Vec<ClipManifestEntry> {
    assert!(segment_s > 0.0, "segment length must be positive");
    let mut out = Vec::new();
    for e in entries {
        let n = (e.duration_s / segment_s + 1e-9).floor() as usize;
        for k in 0..n {
            out.push(ClipManifestEntry {
                clip_id: format!("{}_seg{k:03}", e.clip_id),
                duration_s: segment_s,
                offset_s: e.offset_s + k as f64 * segment_s,
                ..e.clone()
            });
        }
    }
    out
}

/// An external speech detector for noise clips.
pub trait SpeechDetector {
    /// `Ok(true)` if the clip contains speech.
    fn contains_speech(&self, entry: &ClipManifestEntry) -> std::result::Result<bool, String>;
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SpeechRemoval {
    pub kept: Vec<ClipManifestEntry>,
    pub removed: Vec<String>,
    pub warnings: Vec<String>,
}

/// Remove noise clips labelled with any of `speech_labels` or flagged by the
/// detector. A detector failure keeps the clip and records a warning.
pub fn remove_speech_clips(
    entries: &[ClipManifestEntry],
    speech_labels: &BTreeSet<String>,
    detector: Option<&dyn SpeechDetector>,
) -> SpeechRemoval {
    let mut report = SpeechRemoval::default();
    for e in entries {
        let labelled = e.labels.iter().any(|l| speech_labels.contains(l));
        let detected = !labelled
            && match detector.map(|d| d.contains_speech(e)) {
                Some(Ok(flag)) => flag,
                Some(Err(msg)) => {
                    let w = format!("speech detector failed on '{}': {msg}; clip kept", e.clip_id);
                    warn!("{w}");
                    report.warnings.push(w);
                    false
                }
                None => false,
            };
        if labelled || detected {
            report.removed.push(e.clip_id.clone());
        } else {
            report.kept.push(e.clone());
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDeficit {
    pub class: String,
    pub available: usize,
    pub floor: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BalanceReport {
    /// Selected clips in selection order.
    pub selected: Vec<ClipManifestEntry>,
    pub class_counts: BTreeMap<String, usize>,
    /// Classes with fewer than `floor` clips available in total.
    pub deficient: Vec<ClassDeficit>,
}

/// Greedy multi-cover selection so every class reaches `min(floor, available)`.
///
/// Each step takes the class furthest below its target, then adds the
/// unselected clip of that class that covers the most still-deficient
/// classes (ties go to the smallest clip id). Multi-label clips count toward
/// every label they carry.
pub fn balance_classes(entries: &[ClipManifestEntry], floor_per_class: usize) -> BalanceReport {
    assert!(floor_per_class >= 1, "class floor must be at least 1");
    let mut available: BTreeMap<&str, usize> = BTreeMap::new();
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        for l in &e.labels {
            *available.entry(l).or_default() += 1;
            members.entry(l).or_default().push(i);
        }
    }
    for list in members.values_mut() {
        list.sort_by(|&a, &b| entries[a].clip_id.cmp(&entries[b].clip_id).then(a.cmp(&b)));
    }
    let target: BTreeMap<&str, usize> = available
        .iter()
        .map(|(c, &n)| (*c, n.min(floor_per_class)))
        .collect();
    let mut count: BTreeMap<&str, usize> = available.keys().map(|c| (*c, 0)).collect();
    let mut taken = vec![false; entries.len()];
    let mut selected = Vec::new();

    loop {
        // class furthest below its target; BTreeMap order breaks ties by name
        let mut worst: Option<(&str, usize)> = None;
        for (c, &t) in &target {
            let d = t.saturating_sub(count[c]);
            if d > 0 && worst.is_none_or(|(_, wd)| d > wd) {
                worst = Some((c, d));
            }
        }
        let Some((class, _)) = worst else { break };

        let mut best: Option<(usize, usize)> = None;
        for &i in &members[class] {
            if taken[i] {
                continue;
            }
            let covers = entries[i]
                .labels
                .iter()
                .filter(|l| count[l.as_str()] < target[l.as_str()])
                .count();
            if best.is_none_or(|(_, bc)| covers > bc) {
                best = Some((i, covers));
            }
        }
        let (pick, _) = best.expect("a deficient class always has an unselected member");
        taken[pick] = true;
        for l in &entries[pick].labels {
            *count.get_mut(l.as_str()).unwrap() += 1;
        }
        selected.push(entries[pick].clone());
    }

    let deficient = available
        .iter()
        .filter(|(_, &n)| n < floor_per_class)
        .map(|(c, &n)| ClassDeficit {
            class: c.to_string(),
            available: n,
            floor: floor_per_class,
        })
        .collect::<Vec<_>>();
    for d in &deficient {
        warn!(
            "class '{}' has only {} clips available (floor {})",
            d.class, d.available, d.floor
        );
    }
    BalanceReport {
        selected,
        class_counts: count.into_iter().map(|(c, n)| (c.to_string(), n)).collect(),
        deficient,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn chapter(id: &str, mos: f64) -> ChapterQuality {
        ChapterQuality {
            chapter_id: id.into(),
            segment_ratings: vec![("x".into(), 3)],
            chapter_mos: mos,
        }
    }

    fn labelled(id: &str, labels: &[&str]) -> ClipManifestEntry {
        ClipManifestEntry {
            clip_id: id.into(),
            path: format!("{id}.wav").into(),
            duration_s: 10.0,
            labels: labels.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    fn spoken(id: &str, speaker: &str, dur: f64) -> ClipManifestEntry {
        ClipManifestEntry {
            clip_id: id.into(),
            path: format!("{id}.wav").into(),
            duration_s: dur,
            speaker_id: Some(speaker.into()),
            chapter_id: Some(format!("ch-{speaker}")),
            ..Default::default()
        }
    }

    #[test]
    fn ten_excerpts_from_long_chapter() {
        let ch = AudioClip::from_samples(vec![0.1; 600 * 16000]);
        let ex = sample_chapter_segments(&ch, 10, 10.0, &mut rng_from_seed(3)).unwrap();
        assert_eq!(ex.len(), 10);
        let mut starts: Vec<usize> = ex.iter().map(|e| e.start_sample).collect();
        for e in &ex {
            assert_eq!(e.clip.len(), 160_000);
            assert!(e.start_s() >= 0.0 && e.start_s() <= 590.0);
        }
        starts.dedup();
        assert_eq!(starts.len(), 10);
        let again = sample_chapter_segments(&ch, 10, 10.0, &mut rng_from_seed(3)).unwrap();
        assert_eq!(
            again.iter().map(|e| e.start_sample).collect::<Vec<_>>(),
            ex.iter().map(|e| e.start_sample).collect::<Vec<_>>()
        );
    }

    #[test]
    fn short_chapters() {
        let ch = AudioClip::from_samples(vec![0.1; 160_000]);
        let ex = sample_chapter_segments(&ch, 10, 10.0, &mut rng_from_seed(3)).unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].start_sample, 0);

        let ch = AudioClip::from_samples(vec![0.1; 150_000]);
        assert!(matches!(
            sample_chapter_segments(&ch, 10, 10.0, &mut rng_from_seed(3)),
            Err(CurationError::ChapterTooShort { .. })
        ));
    }

    #[test]
    fn quartile_selects_top_two_of_eight() {
        let qs: Vec<_> = (1..=8).map(|i| chapter(&format!("c{i}"), i as f64 * 0.5)).collect();
        // sort oracle
        let mut by_mos = qs.clone();
        by_mos.sort_by(|a, b| b.chapter_mos.total_cmp(&a.chapter_mos));
        let expected: Vec<String> = by_mos[..2].iter().map(|q| q.chapter_id.clone()).collect();
        assert_eq!(select_clean_chapters(&qs, &SelectionPolicy::UpperQuartile).unwrap(), expected);
    }

    #[test]
    fn quartile_keeps_boundary_ties() {
        let qs = vec![chapter("a", 4.0), chapter("b", 4.0), chapter("c", 3.0), chapter("d", 2.0)];
        let sel = select_clean_chapters(&qs, &SelectionPolicy::UpperQuartile).unwrap();
        assert_eq!(sel, vec!["a", "b"]);
    }

    #[test]
    fn threshold_policy() {
        let t = SelectionPolicy::Threshold { min_mos: 4.3 };
        let qs = vec![chapter("a", 4.5), chapter("b", 4.5)];
        assert_eq!(select_clean_chapters(&qs, &t).unwrap().len(), 2);
        let qs = vec![chapter("lo", 4.2), chapter("eq", 4.3), chapter("hi", 4.8)];
        assert_eq!(select_clean_chapters(&qs, &t).unwrap(), vec!["hi", "eq"]);
        assert!(matches!(select_clean_chapters(&[], &t), Err(CurationError::NoChapters)));
    }

    #[test]
    fn chapter_mos_is_mean_of_segments() {
        let q = ChapterQuality::from_ratings("c", vec![("a".into(), 4), ("b".into(), 5), ("c".into(), 3)]).unwrap();
        assert_eq!(q.chapter_mos, 4.0);
        assert!(ChapterQuality::from_ratings("c", vec![("a".into(), 6)]).is_err());
        assert!(ChapterQuality::from_ratings("c", vec![]).is_err());
        assert_eq!(chapter_of_excerpt(&excerpt_id("book_7", 3)), Some("book_7"));
        assert_eq!(chapter_of_excerpt("plain"), None);
    }

    #[test]
    fn speaker_floor_is_inclusive() {
        let entries = vec![
            spoken("a1", "a", 14.9 * 60.0),
            spoken("b1", "b", 600.0),
            spoken("b2", "b", 300.0),
            spoken("c1", "c", 20.0 * 60.0),
        ];
        let kept = filter_speakers_by_duration(&entries, 15.0);
        let ids: Vec<_> = kept.iter().map(|e| e.clip_id.as_str()).collect();
        assert_eq!(ids, vec!["b1", "b2", "c1"]);
        assert!(filter_speakers_by_duration(&[], 15.0).is_empty());
    }

    #[test]
    fn segmentation_floors_and_keeps_lineage() {
        let out = segment_clips(&[spoken("x", "s1", 35.0)], 10.0);
        assert_eq!(out.len(), 3);
        assert_eq!(out[2].offset_s, 20.0);
        assert!(out.iter().all(|e| e.speaker_id.as_deref() == Some("s1") && e.chapter_id.as_deref() == Some("ch-s1")));
        assert_eq!(segment_clips(&[spoken("x", "s", 10.0)], 10.0).len(), 1);
        assert!(segment_clips(&[spoken("x", "s", 9.0)], 10.0).is_empty());
    }

    struct Vocals;
    impl SpeechDetector for Vocals {
        fn contains_speech(&self, e: &ClipManifestEntry) -> std::result::Result<bool, String> {
            match e.clip_id.as_str() {
                "song" => Ok(true),
                "broken" => Err("decoder crashed".into()),
                _ => Ok(false),
            }
        }
    }

    #[test]
    fn speech_removal() {
        let speech: BTreeSet<String> = ["speech".to_string()].into();
        let entries = vec![
            labelled("talk", &["speech", "music"]),
            labelled("fan", &["fan"]),
            labelled("song", &["music"]),
            labelled("broken", &["music"]),
        ];
        let r = remove_speech_clips(&entries, &speech, None);
        assert_eq!(r.removed, vec!["talk"]);
        let r = remove_speech_clips(&entries, &speech, Some(&Vocals));
        assert_eq!(r.removed, vec!["talk", "song"]);
        assert_eq!(r.kept.iter().map(|e| e.clip_id.as_str()).collect::<Vec<_>>(), vec!["fan", "broken"]);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn balance_single_class_takes_exactly_floor() {
        let entries: Vec<_> = (0..600).map(|i| labelled(&format!("c{i:04}"), &["fan"])).collect();
        let r = balance_classes(&entries, 500);
        assert_eq!(r.selected.len(), 500);
        assert_eq!(r.selected[0].clip_id, "c0000");
        assert!(r.deficient.is_empty());
    }

    #[test]
    fn balance_reports_scarce_class() {
        let entries: Vec<_> = (0..100).map(|i| labelled(&format!("c{i}"), &["creak"])).collect();
        let r = balance_classes(&entries, 500);
        assert_eq!(r.selected.len(), 100);
        assert_eq!(
            r.deficient,
            vec![ClassDeficit {
                class: "creak".into(),
                available: 100,
                floor: 500
            }]
        );
    }

    #[test]
    fn balance_prefers_multi_label_clips() {
        let entries = vec![
            labelled("a", &["x"]),
            labelled("b", &["y"]),
            labelled("c", &["x", "y"]),
        ];
        let r = balance_classes(&entries, 1);
        assert_eq!(r.selected.len(), 1);
        assert_eq!(r.selected[0].clip_id, "c");
    }

    #[test]
    fn balance_tolerates_overshoot_from_shared_clips() {
        // Any second pick pushes one class past its floor of one.
        let entries = vec![
            labelled("a", &["x", "y"]),
            labelled("b", &["y", "z"]),
            labelled("c", &["x", "z"]),
        ];
        let r = balance_classes(&entries, 1);
        assert_eq!(r.selected.len(), 2);
        assert!(r.deficient.is_empty());
    }
}
