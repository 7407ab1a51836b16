use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{RatingGroup, RatingRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpamFilterConfig {
    /// Largest accepted |rater gold score - gold truth|.
    pub gold_tolerance: f64,
    /// A rater with more than this fraction of invalid submissions is dropped.
    pub max_fail_fraction: f64,
    /// Expected trap answer for groups that are not in the supplied plan.
    pub default_trap_answer: Option<i64>,
}

impl Default for SpamFilterConfig {
    fn default() -> Self {
        SpamFilterConfig {
            gold_tolerance: 1.0,
            max_fail_fraction: 0.5,
            default_trap_answer: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaterVerdict {
    pub rater_id: String,
    pub submissions: usize,
    pub invalid_submissions: usize,
    pub fail_fraction: f64,
    pub discarded: bool,
    pub reasons: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct SpamFilterOutcome {
    pub kept: Vec<RatingRecord>,
    pub verdicts: Vec<RaterVerdict>,
}

/// Screen ratings with the gold and trap answers of each group submission.
///
/// A submission (one rater, one group) is invalid when its trap answer is
/// missing or wrong, or when its gold deviation exceeds the tolerance. Raters
/// whose invalid fraction exceeds `max_fail_fraction` lose every rating;
/// everyone else loses only their invalid submissions. Surviving records are
/// returned unchanged and in input order.
pub fn filter_spam_raters(
    ratings: &[RatingRecord],
    groups: &[RatingGroup],
    cfg: &SpamFilterConfig,
) -> SpamFilterOutcome {
    let expected: HashMap<&str, i64> = groups
        .iter()
        .map(|g| (g.group_id.as_str(), g.trap_expected_answer))
        .collect();

    // (rater, group) -> record indices
    let mut submissions: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (i, r) in ratings.iter().enumerate() {
        submissions
            .entry((r.rater_id.as_str(), r.group_id.as_str()))
            .or_default()
            .push(i);
    }

    // submissions, [(group, reason)]
    type Tally = (usize, Vec<(String, String)>);
    let mut per_rater: BTreeMap<&str, Tally> = BTreeMap::new();
    let mut invalid_subs: HashSet<(&str, &str)> = HashSet::new();
    for (&(rater, group), idx) in &submissions {
        let entry = per_rater.entry(rater).or_default();
        entry.0 += 1;
        if let Some(reason) = submission_problem(ratings, idx, expected.get(group).copied().or(cfg.default_trap_answer), cfg) {
            entry.1.push((group.to_string(), reason));
            invalid_subs.insert((rater, group));
        }
    }

    let mut verdicts = Vec::new();
    let mut discarded: HashSet<&str> = HashSet::new();
    for (rater, (total, problems)) in per_rater {
        let fail_fraction = problems.len() as f64 / total as f64;
        let drop = fail_fraction > cfg.max_fail_fraction;
        if drop {
            discarded.insert(rater);
        }
        verdicts.push(RaterVerdict {
            rater_id: rater.to_string(),
            submissions: total,
            invalid_submissions: problems.len(),
            fail_fraction,
            discarded: drop,
            reasons: problems.into_iter().map(|(g, r)| format!("{g}: {r}")).collect(),
        });
    }

    let kept = ratings
        .iter()
        .filter(|r| {
            !discarded.contains(r.rater_id.as_str())
                && !invalid_subs.contains(&(r.rater_id.as_str(), r.group_id.as_str()))
        })
        .cloned()
        .collect();
    SpamFilterOutcome { kept, verdicts }
}

fn submission_problem(
    ratings: &[RatingRecord],
    idx: &[usize],
    expected_trap: Option<i64>,
    cfg: &SpamFilterConfig,
) -> Option<String> {
    if let Some(want) = expected_trap {
        let answers: Vec<i64> = idx.iter().filter_map(|&i| ratings[i].trap_answer).collect();
        if answers.is_empty() {
            return Some("trap question unanswered".into());
        }
        if let Some(a) = answers.iter().find(|&&a| a != want) {
            return Some(format!("trap answered {a}, expected {want}"));
        }
    }
    idx.iter()
        .filter_map(|&i| ratings[i].gold_delta)
        .find(|d| d.abs() > cfg.gold_tolerance)
        .map(|d| format!("gold deviation {d} exceeds {}", cfg.gold_tolerance))
}
