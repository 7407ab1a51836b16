use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CompensatedSum, EvalError, Result};

/// z value of the two-sided 95% normal interval.
const Z_95: f64 = 1.96;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "snake_case")]
pub enum MosScope {
    Clip { clip_id: String },
    Condition { model: String, condition: String },
    Overall { model: String },
}

impl fmt::Display for MosScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MosScope::Clip { clip_id } => write!(f, "clip {clip_id}"),
            MosScope::Condition { model, condition } => write!(f, "{model} / {condition}"),
            MosScope::Overall { model } => write!(f, "{model} / overall"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MosSummary {
    pub scope: MosScope,
    pub mos: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmos: Option<f64>,
    pub n_ratings: usize,
    pub std_dev: f64,
    pub ci95: f64,
}

/// MOS with a normal-approximation 95% interval half-width, 1.96 * s / sqrt(n),
/// where `s` is the sample standard deviation. A single rating has ci95 = 0.
pub fn mos_summary(scope: MosScope, scores: &[u8]) -> Result<MosSummary> {
    if scores.is_empty() {
        return Err(EvalError::EmptyScope(scope.to_string()));
    }
    if let Some(&s) = scores.iter().find(|s| !(1..=5).contains(*s)) {
        return Err(EvalError::InvalidScore(s));
    }
    let n = scores.len();
    let mut sum = CompensatedSum::default();
    scores.iter().for_each(|&s| sum.add(f64::from(s)));
    let mos = sum.value() / n as f64;
    let std_dev = if n > 1 {
        let mut ss = CompensatedSum::default();
        scores.iter().for_each(|&s| ss.add((f64::from(s) - mos).powi(2)));
        (ss.value() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(MosSummary {
        scope,
        mos,
        dmos: None,
        n_ratings: n,
        std_dev,
        ci95: Z_95 * std_dev / (n as f64).sqrt(),
    })
}

/// MOS improvement of a model over the unprocessed noisy clips of the same scope.
pub fn dmos(model: &MosSummary, noisy: &MosSummary) -> Result<f64> {
    let same = match (&model.scope, &noisy.scope) {
        (MosScope::Overall { .. }, MosScope::Overall { .. }) => true,
        (MosScope::Condition { condition: a, .. }, MosScope::Condition { condition: b, .. }) => a == b,
        (MosScope::Clip { clip_id: a }, MosScope::Clip { clip_id: b }) => a == b,
        _ => false,
    };
    if !same {
        return Err(EvalError::ScopeMismatch(model.scope.to_string(), noisy.scope.to_string()));
    }
    Ok(model.mos - noisy.mos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn overall(m: &str) -> MosScope {
        MosScope::Overall { model: m.into() }
    }

    fn fixed(m: &str, mos: f64) -> MosSummary {
        MosSummary {
            scope: overall(m),
            mos,
            dmos: None,
            n_ratings: 1,
            std_dev: 0.0,
            ci95: 0.0,
        }
    }

    #[test]
    fn closed_form_examples() {
        let s = mos_summary(overall("m"), &[5; 20]).unwrap();
        assert_eq!((s.mos, s.ci95), (5.0, 0.0));
        let s = mos_summary(overall("m"), &[3, 4, 5]).unwrap();
        assert_eq!(s.mos, 4.0);
        assert_abs_diff_eq!(s.ci95, 1.96 / 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.ci95, 1.1316, epsilon = 1e-4);
        assert!(matches!(mos_summary(overall("m"), &[]), Err(EvalError::EmptyScope(_))));
        assert!(matches!(mos_summary(overall("m"), &[0]), Err(EvalError::InvalidScore(0))));
    }

    #[test]
    fn permutation_invariant() {
        let a = [1, 2, 2, 3, 5, 4, 4, 1, 3, 5, 5, 2];
        let mut b = a;
        b.reverse();
        b.swap(0, 5);
        let (x, y) = (mos_summary(overall("m"), &a).unwrap(), mos_summary(overall("m"), &b).unwrap());
        assert_eq!(x.mos, y.mos);
        assert_abs_diff_eq!(x.ci95, y.ci95, epsilon = 1e-15);
    }

    #[test]
    fn dmos_examples() {
        let noisy = fixed("noisy", 2.85);
        assert_abs_diff_eq!(dmos(&fixed("9 NRT", 3.52), &noisy).unwrap(), 0.67, epsilon = 1e-12);
        assert_abs_diff_eq!(dmos(&fixed("29 RT", 3.42), &noisy).unwrap(), 0.57, epsilon = 1e-12);
        assert_eq!(dmos(&noisy, &noisy).unwrap(), 0.0);
        let cond = MosSummary {
            scope: MosScope::Condition { model: "m".into(), condition: "real".into() },
            ..fixed("m", 3.0)
        };
        assert!(matches!(dmos(&cond, &noisy), Err(EvalError::ScopeMismatch(..))));
    }
}
