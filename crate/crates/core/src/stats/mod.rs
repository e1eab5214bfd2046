//! Pre/post survey evaluation: Likert factor aggregation, normality
//! screening, paired t-test, Wilcoxon signed-rank test and the paired
//! standardized mean difference `d_D`.

mod descriptive;
mod effect;
mod instrument;
mod report;
mod shapiro;
pub mod special;
mod ttest;
mod wilcoxon;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

pub use descriptive::{mean, sd_unbiased, var_unbiased};
pub use effect::{effect_size_dd, EffectSize};
pub use instrument::{FactorDef, InstrumentDefinition};
pub use report::{
    factor_scores, render_markdown, run_comparison, Comparison, FactorScores, Stars, TestReport,
    DEFAULT_ALPHA_NORMALITY,
};
pub use shapiro::{shapiro_wilk, ShapiroWilk};
pub use ttest::{paired_t_test, PairedT};
pub use wilcoxon::{wilcoxon_signed_rank, Wilcoxon, WilcoxonMethod, EXACT_MAX_N};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("at most {max} observations supported, got {got}")]
    TooManyObservations { max: usize, got: usize },
    #[error("sample has zero variance")]
    ZeroVariance,
    #[error("all paired differences are zero")]
    AllDifferencesZero,
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("respondent {0:?} appears more than once in a paired sample")]
    DuplicateRespondent(String),
    #[error("respondent {respondent:?} has more than one {phase} response")]
    DuplicatePhase { respondent: String, phase: String },
    #[error("respondent {respondent:?} is missing item {item:?}")]
    MissingItem { respondent: String, item: String },
    #[error("response for {respondent:?} was passed as {expected} but is marked {found}")]
    PhaseMismatch { respondent: String, expected: String, found: String },
    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),
}

/// One respondent's pair of factor scores (`x_a` before, `x_b` after).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Pair<T> {
    pub respondent_id: String,
    pub x_a: T,
    pub x_b: T,
}

/// Paired observations of one factor. Differences are `x_a - x_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PairedSample<T> {
    pub factor_name: String,
    pairs: Vec<Pair<T>>,
}

impl<T: Scalar> PairedSample<T> {
    pub fn new(factor_name: impl Into<String>, pairs: Vec<Pair<T>>) -> Result<Self, StatsError> {
        let mut seen = std::collections::BTreeSet::new();
        for p in &pairs {
            if !p.x_a.is_finite() || !p.x_b.is_finite() {
                return Err(StatsError::NonFinite);
            }
            if !seen.insert(p.respondent_id.as_str()) {
                return Err(StatsError::DuplicateRespondent(p.respondent_id.clone()));
            }
        }
        Ok(Self { factor_name: factor_name.into(), pairs })
    }

    /// Builds a sample from parallel slices; respondents are numbered `r1..rn`.
    pub fn from_slices(factor_name: impl Into<String>, a: &[T], b: &[T]) -> Result<Self, StatsError> {
        assert_eq!(a.len(), b.len(), "paired slices must have equal length");
        let pairs = a
            .iter()
            .zip(b)
            .enumerate()
            .map(|(i, (&x_a, &x_b))| Pair { respondent_id: format!("r{}", i + 1), x_a, x_b })
            .collect();
        Self::new(factor_name, pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[Pair<T>] {
        &self.pairs
    }

    pub fn a_values(&self) -> Vec<T> {
        self.pairs.iter().map(|p| p.x_a).collect()
    }

    pub fn b_values(&self) -> Vec<T> {
        self.pairs.iter().map(|p| p.x_b).collect()
    }

    pub fn differences(&self) -> Vec<T> {
        self.pairs.iter().map(|p| p.x_a - p.x_b).collect()
    }

    /// Same sample with the two phases exchanged.
    pub fn swapped(&self) -> Self {
        let pairs = self
            .pairs
            .iter()
            .map(|p| Pair { respondent_id: p.respondent_id.clone(), x_a: p.x_b, x_b: p.x_a })
            .collect();
        Self { factor_name: self.factor_name.clone(), pairs }
    }
}
