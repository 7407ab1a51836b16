use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EvalError, PValueMatrix, Result};

/// Computational cost tag used to break ties between overlapping models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Complexity {
    Track(Track),
    /// Any numeric cost where lower is cheaper.
    Cost(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Track {
    #[serde(rename = "RT")]
    RealTime,
    #[serde(rename = "NRT")]
    NonRealTime,
}

impl Complexity {
    fn cmp_cost(&self, other: &Complexity) -> Option<Ordering> {
        match (self, other) {
            (Complexity::Track(a), Complexity::Track(b)) => Some(a.cmp(b)),
            (Complexity::Cost(a), Complexity::Cost(b)) => a.partial_cmp(b),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    pub mos: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity: Option<Complexity>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub rank: usize,
    pub model: String,
    pub mos: f64,
    /// 1-based position in the plain MOS ordering.
    pub mos_position: usize,
    pub cluster: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prize: Option<usize>,
    pub rationale: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub threshold: f64,
    pub entries: Vec<RankedModel>,
}

impl Ranking {
    pub fn to_table(&self) -> String {
        let mut s = String::from("rank  model                 MOS   cluster  prize  note\n");
        for e in &self.entries {
            let prize = e.prize.map(|p| p.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<4}  {:<20}  {:.2}  {:<7}  {:<5}  {}",
                e.rank, e.model, e.mos, e.cluster, prize, e.rationale
            );
        }
        s
    }
}

const PRIZES: usize = 3;

/// Order models by MOS, then reorder within runs of adjacent models that are
/// not significantly different so that the cheaper model ranks higher.
pub fn rank_models(scores: &[ModelScore], p: &PValueMatrix) -> Result<Ranking> {
    let mut by_mos: Vec<&ModelScore> = scores.iter().collect();
    by_mos.sort_by(|a, b| b.mos.total_cmp(&a.mos).then_with(|| a.model.cmp(&b.model)));

    let mut clusters: Vec<Vec<(usize, &ModelScore)>> = Vec::new();
    for (pos, m) in by_mos.iter().enumerate() {
        let joins = match clusters.last().and_then(|c| c.last()) {
            Some((_, prev)) => {
                let pv = p
                    .get(&prev.model, &m.model)
                    .ok_or_else(|| EvalError::MissingPValue(prev.model.clone(), m.model.clone()))?;
                pv >= p.threshold
            }
            None => false,
        };
        if joins {
            clusters.last_mut().unwrap().push((pos, m));
        } else {
            clusters.push(vec![(pos, m)]);
        }
    }

    let mut entries = Vec::with_capacity(scores.len());
    for (ci, cluster) in clusters.iter_mut().enumerate() {
        if cluster.len() > 1 {
            for (_, m) in cluster.iter() {
                if m.complexity.is_none() {
                    return Err(EvalError::MissingComplexity(m.model.clone()));
                }
            }
            for w in cluster.windows(2) {
                let (a, b) = (w[0].1, w[1].1);
                a.complexity
                    .unwrap()
                    .cmp_cost(&b.complexity.unwrap())
                    .ok_or_else(|| EvalError::IncomparableComplexity(a.model.clone(), b.model.clone()))?;
            }
            // stable: equal cost keeps MOS order
            cluster.sort_by(|(_, a), (_, b)| {
                a.complexity
                    .unwrap()
                    .cmp_cost(&b.complexity.unwrap())
                    .unwrap_or(Ordering::Equal)
            });
        }
        let names: Vec<&str> = cluster.iter().map(|(_, m)| m.model.as_str()).collect();
        for (pos, m) in cluster.iter() {
            let rank = entries.len() + 1;
            let rationale = if cluster.len() == 1 {
                "significantly different from neighbours; ranked by MOS".to_string()
            } else if rank == pos + 1 {
                format!("overlaps with {}; order kept after complexity tie-break", names.join(", "))
            } else {
                format!(
                    "overlaps with {}; moved from MOS position {} by complexity tie-break",
                    names.join(", "),
                    pos + 1
                )
            };
            entries.push(RankedModel {
                rank,
                model: m.model.clone(),
                mos: m.mos,
                mos_position: pos + 1,
                cluster: ci + 1,
                prize: (rank <= PRIZES).then_some(rank),
                rationale,
            });
        }
    }
    Ok(Ranking {
        threshold: p.threshold,
        entries,
    })
}
