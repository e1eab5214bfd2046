use serde::{Deserialize, Serialize};

use super::descriptive::{is_degenerate, mean, sd_unbiased};
use super::special::student_t_two_tailed;
use super::{PairedSample, StatsError};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PairedT<T> {
    pub t: T,
    pub p_value: T,
    pub df: usize,
    pub mean_diff: T,
    pub sd_diff: T,
}

/// Two-tailed paired t-test on `x_a - x_b`.
pub fn paired_t_test<T: Scalar>(sample: &PairedSample<T>) -> Result<PairedT<T>, StatsError> {
    let n = sample.len();
    if n < 2 {
        return Err(StatsError::TooFewObservations { needed: 2, got: n });
    }
    let diffs = sample.differences();
    let mean_diff = mean(&diffs);
    let sd_diff = sd_unbiased(&diffs);
    if is_degenerate(&diffs, sd_diff) {
        return Err(StatsError::ZeroVariance);
    }
    let t = mean_diff / (sd_diff / T::from_count(n).sqrt());
    let df = n - 1;
    let p_value = student_t_two_tailed(t, T::from_count(df));
    Ok(PairedT { t, p_value, df, mean_diff, sd_diff })
}
