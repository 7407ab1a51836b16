use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::seed::stream_rng;

/// A reference clip with known quality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldItem {
    pub clip_id: String,
    pub truth: f64,
}

/// An attention check that instructs the rater to pick `expected_answer`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapItem {
    pub clip_id: String,
    pub expected_answer: i64,
}

/// One unit of rating work: payload clips plus one gold and one trap item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingGroup {
    pub group_id: String,
    pub payload_clip_ids: Vec<String>,
    pub gold_clip_id: String,
    pub gold_truth: f64,
    pub trap_clip_id: String,
    pub trap_expected_answer: i64,
    pub presentation_order: Vec<String>,
}

/// Build rating groups so every clip is rated in exactly `raters_per_clip`
/// groups and never twice within one group.
///
/// Each of the `raters_per_clip` rounds contributes a seeded permutation of
/// all clips; the concatenated sequence is cut into groups of
/// `group_size - 2` payload slots, with swaps resolving repeats that straddle
/// a round boundary. Only the final group may be short.
pub fn assemble_groups(
    clips: &[String],
    group_size: usize,
    raters_per_clip: usize,
    gold_pool: &[GoldItem],
    trap_pool: &[TrapItem],
    master_seed: u64,
) -> Result<Vec<RatingGroup>> {
    if group_size < 3 {
        return Err(EvalError::GroupTooSmall(group_size));
    }
    if gold_pool.is_empty() {
        return Err(EvalError::EmptyPool("gold"));
    }
    if trap_pool.is_empty() {
        return Err(EvalError::EmptyPool("trap"));
    }
    let payload = group_size - 2;
    let distinct: HashSet<&String> = clips.iter().collect();
    let impossible = || EvalError::ImpossibleQuota {
        clips: clips.len(),
        raters: raters_per_clip,
        payload,
    };
    if distinct.len() != clips.len() || clips.len() < payload || raters_per_clip == 0 {
        return Err(impossible());
    }

    let mut seq: Vec<usize> = Vec::with_capacity(clips.len() * raters_per_clip);
    for round in 0..raters_per_clip {
        let mut perm: Vec<usize> = (0..clips.len()).collect();
        perm.shuffle(&mut stream_rng(master_seed, "groups/round", round as u64));
        seq.extend(perm);
    }
    repair_repeats(&mut seq, payload).ok_or_else(impossible)?;

    let groups = seq
        .chunks(payload)
        .enumerate()
        .map(|(g, chunk)| {
            let gold = &gold_pool[g % gold_pool.len()];
            let trap = &trap_pool[g % trap_pool.len()];
            let payload_clip_ids: Vec<String> = chunk.iter().map(|&i| clips[i].clone()).collect();
            let mut presentation_order = payload_clip_ids.clone();
            presentation_order.push(gold.clip_id.clone());
            presentation_order.push(trap.clip_id.clone());
            presentation_order.shuffle(&mut stream_rng(master_seed, "groups/order", g as u64));
            RatingGroup {
                group_id: format!("g{g:06}"),
                payload_clip_ids,
                gold_clip_id: gold.clip_id.clone(),
                gold_truth: gold.truth,
                trap_clip_id: trap.clip_id.clone(),
                trap_expected_answer: trap.expected_answer,
                presentation_order,
            }
        })
        .collect();
    Ok(groups)
}

/// Swap elements until no chunk of `size` contains a value twice.
fn repair_repeats(seq: &mut [usize], size: usize) -> Option<()> {
    let chunks = seq.len().div_ceil(size);
    for c in 0..chunks {
        let (lo, hi) = (c * size, ((c + 1) * size).min(seq.len()));
        let mut seen = HashSet::new();
        for j in lo..hi {
            if seen.insert(seq[j]) {
                continue;
            }
            let dup = seq[j];
            // prefer pulling a replacement from later in the sequence
            let later = (hi..seq.len()).find(|&k| !seen.contains(&seq[k]));
            let k = match later {
                Some(k) => k,
                None => (0..lo).find(|&k| {
                    let other = (k / size) * size;
                    let other_end = (other + size).min(seq.len());
                    !seen.contains(&seq[k]) && !seq[other..other_end].contains(&dup)
                })?,
            };
            seq.swap(j, k);
            seen.insert(seq[j]);
        }
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn pools() -> (Vec<GoldItem>, Vec<TrapItem>) {
        (
            vec![
                GoldItem { clip_id: "gold_clean".into(), truth: 5.0 },
                GoldItem { clip_id: "gold_bad".into(), truth: 1.0 },
            ],
            vec![TrapItem { clip_id: "trap_2".into(), expected_answer: 2 }],
        )
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("clip{i:03}")).collect()
    }

    fn membership(groups: &[RatingGroup]) -> HashMap<String, usize> {
        let mut m = HashMap::new();
        for g in groups {
            for c in &g.payload_clip_ids {
                *m.entry(c.clone()).or_default() += 1;
            }
        }
        m
    }

    #[test]
    fn eighty_clips_ten_raters() {
        let (gold, trap) = pools();
        let groups = assemble_groups(&ids(80), 10, 10, &gold, &trap, 1).unwrap();
        assert_eq!(groups.len(), 100);
        let m = membership(&groups);
        assert_eq!(m.len(), 80);
        assert!(m.values().all(|&n| n == 10));
        for g in &groups {
            assert_eq!(g.payload_clip_ids.len(), 8);
            assert_eq!(g.presentation_order.len(), 10);
            let uniq: HashSet<_> = g.presentation_order.iter().collect();
            assert_eq!(uniq.len(), 10);
        }
        assert_eq!(groups[0].gold_clip_id, "gold_clean");
        assert_eq!(groups[1].gold_clip_id, "gold_bad");
    }

    #[test]
    fn uneven_counts_are_repaired() {
        let (gold, trap) = pools();
        for (n, r, size) in [(13, 7, 10), (9, 5, 10), (25, 3, 6), (8, 10, 10)] {
            let groups = assemble_groups(&ids(n), size, r, &gold, &trap, n as u64).unwrap();
            let m = membership(&groups);
            assert!(m.values().all(|&k| k == r), "{n} {r}");
            for g in &groups {
                let uniq: HashSet<_> = g.payload_clip_ids.iter().collect();
                assert_eq!(uniq.len(), g.payload_clip_ids.len());
            }
        }
    }

    #[test]
    fn errors() {
        let (gold, trap) = pools();
        assert!(matches!(assemble_groups(&ids(10), 2, 1, &gold, &trap, 0), Err(EvalError::GroupTooSmall(2))));
        assert!(matches!(assemble_groups(&ids(10), 10, 1, &[], &trap, 0), Err(EvalError::EmptyPool("gold"))));
        assert!(matches!(
            assemble_groups(&ids(5), 10, 2, &gold, &trap, 0),
            Err(EvalError::ImpossibleQuota { .. })
        ));
    }

    #[test]
    fn deterministic() {
        let (gold, trap) = pools();
        let a = assemble_groups(&ids(30), 10, 4, &gold, &trap, 42).unwrap();
        let b = assemble_groups(&ids(30), 10, 4, &gold, &trap, 42).unwrap();
        assert_eq!(a, b);
    }
}
