//! Crowdsourced ACR rating analysis.
//!
//! Ratings arrive as CSV rows (one vote each), are screened for inattentive
//! raters using the gold and trap items embedded in every rating group, and
//! are then summarised as MOS with a normal-approximation 95% confidence
//! interval. Models are compared pairwise with a two-group ANOVA on per-clip
//! means and ranked by MOS, with computational complexity breaking ties
//! between models that are not significantly different.

mod anova;
mod groups;
mod mos;
mod rank;
mod ratings;
pub mod special;
mod spam;
mod spearman;

use thiserror::Error;

pub use anova::{
    anova_pairwise, anova_two_group, per_clip_means, significance_label, AnovaResult, PValueMatrix,
    DEFAULT_SIGNIFICANCE,
};
pub use groups::{assemble_groups, GoldItem, RatingGroup, TrapItem};
pub use mos::{dmos, mos_summary, MosScope, MosSummary};
pub use rank::{rank_models, Complexity, ModelScore, RankedModel, Ranking, Track};
pub use ratings::{read_ratings, write_ratings, RatingRecord, RATINGS_HEADER};
pub use spam::{filter_spam_raters, RaterVerdict, SpamFilterConfig, SpamFilterOutcome};
pub use spearman::{average_ranks, spearman_rho};

#[derive(Error, Debug)]
pub enum EvalError {
    #[error("group size {0} leaves no room for payload clips (need at least 3)")]
    GroupTooSmall(usize),
    #[error("{0} pool is empty")]
    EmptyPool(&'static str),
    #[error("cannot place {clips} clips x {raters} raters into groups of {payload} payload slots without repeats")]
    ImpossibleQuota {
        clips: usize,
        raters: usize,
        payload: usize,
    },
    #[error("no ratings in scope '{0}'")]
    EmptyScope(String),
    #[error("score {0} is outside 1..=5")]
    InvalidScore(u8),
    #[error("scope mismatch: '{0}' vs '{1}'")]
    ScopeMismatch(String, String),
    #[error("model '{model}' has {got} clip scores, expected {expected}")]
    UnalignedScores {
        model: String,
        got: usize,
        expected: usize,
    },
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("correlation undefined: input is constant")]
    ConstantInput,
    #[error("no p-value for pair ('{0}', '{1}')")]
    MissingPValue(String, String),
    #[error("model '{0}' has no complexity tag")]
    MissingComplexity(String),
    #[error("complexity tags of '{0}' and '{1}' cannot be compared")]
    IncomparableComplexity(String, String),
    #[error("ratings csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    let mut s = CompensatedSum::default();
    xs.iter().for_each(|&x| s.add(x));
    s.value() / xs.len() as f64
}
