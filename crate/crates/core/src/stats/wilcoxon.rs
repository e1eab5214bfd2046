//! Wilcoxon signed-rank test for paired samples.

use serde::{Deserialize, Serialize};

use super::special::normal_sf;
use super::{PairedSample, StatsError};
use crate::Scalar;

/// Largest effective sample size for which the exact null distribution is used.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Wilcoxon<T> {
    /// `min(w_plus, w_minus)`.
    pub statistic: T,
    pub w_plus: T,
    pub w_minus: T,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub n_zero: usize,
    pub has_ties: bool,
    /// Continuity-corrected z score; only set on the normal path.
    pub z: Option<T>,
    pub p_value: T,
    pub method: WilcoxonMethod,
}

/// Average ranks of `values` (1-based) and the sizes of tied groups.
fn average_ranks<T: Scalar>(values: &[T]) -> (Vec<T>, Vec<usize>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut ranks = vec![T::zero(); n];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end share ranks start+1..=end
        let avg = T::from_count(start + 1 + end) / T::lit(2.0);
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

/// Number of subsets of `{1..n}` with each possible rank sum.
fn null_counts(n: usize) -> Vec<u64> {
    let max = n * (n + 1) / 2;
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    for rank in 1..=n {
        for s in (rank..=max).rev() {
            counts[s] += counts[s - rank];
        }
    }
    counts
}

fn exact_p(n: usize, w_plus: usize) -> f64 {
    let counts = null_counts(n);
    let total = (1u64 << n) as f64;
    let below: u64 = counts[..=w_plus].iter().sum();
    let above: u64 = counts[w_plus..].iter().sum();
    (2.0 * below.min(above) as f64 / total).min(1.0)
}

/// Two-tailed Wilcoxon signed-rank test on `x_a - x_b`.
///
/// Zero differences are dropped and tied magnitudes receive average ranks.
/// The exact null distribution is used when no ties remain and the
/// effective size is at most [`EXACT_MAX_N`]; otherwise a normal
/// approximation with tie and continuity corrections.
pub fn wilcoxon_signed_rank<T: Scalar>(sample: &PairedSample<T>) -> Result<Wilcoxon<T>, StatsError> {
    let diffs = sample.differences();
    let nonzero: Vec<T> = diffs.iter().copied().filter(|d| !d.is_zero()).collect();
    let n_zero = diffs.len() - nonzero.len();
    if nonzero.is_empty() {
        return Err(StatsError::AllDifferencesZero);
    }
    let n = nonzero.len();
    if n < 3 {
        return Err(StatsError::TooFewObservations { needed: 3, got: n });
    }

    let magnitudes: Vec<T> = nonzero.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&magnitudes);
    let (mut w_plus, mut w_minus) = (T::zero(), T::zero());
    for (d, r) in nonzero.iter().zip(&ranks) {
        if *d > T::zero() {
            w_plus = w_plus + *r;
        } else {
            w_minus = w_minus + *r;
        }
    }
    let has_ties = !ties.is_empty();
    let statistic = w_plus.min(w_minus);

    if !has_ties && n <= EXACT_MAX_N {
        let w = w_plus.to_usize().expect("integral rank sum without ties");
        return Ok(Wilcoxon {
            statistic,
            w_plus,
            w_minus,
            n_effective: n,
            n_zero,
            has_ties,
            z: None,
            p_value: T::lit(exact_p(n, w)),
            method: WilcoxonMethod::Exact,
        });
    }

    let nf = T::from_count(n);
    let mn = nf * (nf + T::one()) / T::lit(4.0);
    let tie_term = ties.iter().fold(T::zero(), |acc, &t| {
        let t = T::from_count(t);
        acc + t * t * t - t
    });
    let var = (nf * (nf + T::one()) * (T::lit(2.0) * nf + T::one()) - tie_term / T::lit(2.0)) / T::lit(24.0);
    let se = var.sqrt();
    let mut z = (w_plus - mn) / se;
    let sign = if z > T::zero() {
        T::one()
    } else if z < T::zero() {
        -T::one()
    } else {
        T::zero()
    };
    z = z - sign * T::lit(0.5) / se;
    let p_value = (T::lit(2.0) * normal_sf(z.abs())).min(T::one());
    Ok(Wilcoxon {
        statistic,
        w_plus,
        w_minus,
        n_effective: n,
        n_zero,
        has_ties,
        z: Some(z),
        p_value,
        method: WilcoxonMethod::NormalApprox,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(diffs: &[f64]) -> PairedSample<f64> {
        let zeros = vec![0.0; diffs.len()];
        PairedSample::from_slices("f", diffs, &zeros).unwrap()
    }

    #[test]
    fn three_positive_differences() {
        let r = wilcoxon_signed_rank(&sample(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.w_plus, 6.0);
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert!((r.p_value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn symmetric_differences_give_p_one() {
        // ties between |-1| and |1| push this onto the normal path
        let r = wilcoxon_signed_rank(&sample(&[-1.0, 1.0, -2.0, 2.0])).unwrap();
        assert_eq!(r.w_plus, r.w_minus);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        let r = wilcoxon_signed_rank(&sample(&[1.0, -2.0, -3.0, 4.0])).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert!((r.p_value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn all_zero_differences_error() {
        assert_eq!(wilcoxon_signed_rank(&sample(&[0.0, 0.0, 0.0, 0.0])), Err(StatsError::AllDifferencesZero));
    }

    #[test]
    fn null_counts_sum_to_power_of_two() {
        for n in 1..=20 {
            let total: u64 = null_counts(n).iter().sum();
            assert_eq!(total, 1u64 << n);
        }
    }

    #[test]
    fn average_ranks_with_ties() {
        let (r, t) = average_ranks(&[3.0_f64, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(t, vec![2]);
    }
}
