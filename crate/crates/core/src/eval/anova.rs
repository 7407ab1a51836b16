use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::special::f_survival;
use super::{mean, EvalError, RatingRecord, Result};

pub const DEFAULT_SIGNIFICANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub p_value: f64,
}

/// One-way ANOVA between two groups of observations.
///
/// With zero within-group variance the F ratio is degenerate: equal means
/// give p = 1 and different means give p = 0.
pub fn anova_two_group(a: &[f64], b: &[f64]) -> Result<AnovaResult> {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 || n1 + n2 < 3 {
        return Err(EvalError::TooFewObservations { needed: 3, got: n1 + n2 });
    }
    let (m1, m2) = (mean(a), mean(b));
    let n = (n1 + n2) as f64;
    let grand = (m1 * n1 as f64 + m2 * n2 as f64) / n;
    let ss_between = n1 as f64 * (m1 - grand).powi(2) + n2 as f64 * (m2 - grand).powi(2);
    let ss_within: f64 =
        a.iter().map(|x| (x - m1).powi(2)).sum::<f64>() + b.iter().map(|x| (x - m2).powi(2)).sum::<f64>();
    let df_within = n - 2.0;
    if ss_within == 0.0 {
        let (f, p_value) = if m1 == m2 { (0.0, 1.0) } else { (f64::INFINITY, 0.0) };
        return Ok(AnovaResult {
            f,
            df_between: 1.0,
            df_within,
            p_value,
        });
    }
    let f = ss_between / (ss_within / df_within);
    Ok(AnovaResult {
        f,
        df_between: 1.0,
        df_within,
        p_value: f_survival(f, 1.0, df_within),
    })
}

/// Symmetric matrix of pairwise p-values with a unit diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PValueMatrix {
    pub models: Vec<String>,
    pub p_values: Vec<Vec<f64>>,
    pub threshold: f64,
}

impl PValueMatrix {
    fn index(&self, model: &str) -> Option<usize> {
        self.models.iter().position(|m| m == model)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.p_values[self.index(a)?][self.index(b)?])
    }

    /// p < threshold
    pub fn significant(&self, a: &str, b: &str) -> Option<bool> {
        self.get(a, b).map(|p| p < self.threshold)
    }

    /// Lower-triangular text table with a significance legend.
    pub fn to_table(&self) -> String {
        let w = self.models.iter().map(String::len).max().unwrap_or(0).max(6);
        let mut s = format!("{:w$}", "");
        for m in &self.models {
            let _ = write!(s, "  {m:>w$}");
        }
        s.push('\n');
        for (i, row) in self.p_values.iter().enumerate() {
            let _ = write!(s, "{:w$}", self.models[i]);
            for p in &row[..=i] {
                let _ = write!(s, "  {p:>w$.2}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "p >= {:.2}: {}", self.threshold, significance_label(1.0, self.threshold));
        let _ = writeln!(s, "p <  {:.2}: {}", self.threshold, significance_label(0.0, self.threshold));
        s
    }
}

pub fn significance_label(p: f64, threshold: f64) -> &'static str {
    if p < threshold {
        "Statistically Significant"
    } else {
        "Not Statistically Significant"
    }
}

/// Pairwise two-group ANOVA over per-clip mean scores. Every model must have
/// a score for exactly the same clips.
pub fn anova_pairwise(per_clip: &BTreeMap<String, BTreeMap<String, f64>>, threshold: f64) -> Result<PValueMatrix> {
    let models: Vec<String> = per_clip.keys().cloned().collect();
    let reference: Vec<&String> = per_clip.values().next().map(|m| m.keys().collect()).unwrap_or_default();
    for (model, clips) in per_clip {
        if clips.len() != reference.len() || !clips.keys().eq(reference.iter().copied()) {
            return Err(EvalError::UnalignedScores {
                model: model.clone(),
                got: clips.len(),
                expected: reference.len(),
            });
        }
    }
    let series: Vec<Vec<f64>> = per_clip.values().map(|m| m.values().copied().collect()).collect();
    let k = models.len();
    let mut p_values = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in 0..i {
            let p = anova_two_group(&series[i], &series[j])?.p_value;
            p_values[i][j] = p;
            p_values[j][i] = p;
        }
    }
    Ok(PValueMatrix {
        models,
        p_values,
        threshold,
    })
}

/// Mean score per (model, clip). `locate` maps a rated clip id to its model
/// and the source clip it was derived from; unmapped ratings are skipped.
pub fn per_clip_means<F>(ratings: &[RatingRecord], locate: F) -> BTreeMap<String, BTreeMap<String, f64>>
where
    F: Fn(&str) -> Option<(String, String)>,
{
    let mut acc: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for r in ratings {
        if let Some((model, clip)) = locate(&r.clip_id) {
            acc.entry(model).or_default().entry(clip).or_default().push(f64::from(r.score));
        }
    }
    acc.into_iter()
        .map(|(m, clips)| (m, clips.into_iter().map(|(c, v)| (c, mean(&v))).collect()))
        .collect()
}
