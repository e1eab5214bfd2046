use serde::{Deserialize, Serialize};

use super::descriptive::mean;
use super::{PairedSample, StatsError};
use crate::Scalar;

/// Paired standardized mean difference and the moments it is built from.
///
/// `s_a_sq`, `s_b_sq` and `s_ab` are population moments (divided by `n`);
/// `s_d = sqrt(n / (n - 1) * (s_a_sq + s_b_sq - 2 s_ab))`, which is the
/// unbiased standard deviation of the differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EffectSize<T> {
    pub n: usize,
    pub d: T,
    pub d_abs: T,
    pub mean_diff: T,
    pub s_d: T,
    pub s_a_sq: T,
    pub s_b_sq: T,
    pub s_ab: T,
}

impl<T: Scalar> EffectSize<T> {
    /// Conventional large-effect threshold on `|d_D|`.
    pub fn is_large(&self) -> bool {
        self.d_abs > T::lit(0.8)
    }
}

/// `d_D = mean(x_a - x_b) / s_d`, with `s_d` assembled from the separate
/// variances and covariance of the two phases.
pub fn effect_size_dd<T: Scalar>(sample: &PairedSample<T>) -> Result<EffectSize<T>, StatsError> {
    let n = sample.len();
    if n < 2 {
        return Err(StatsError::TooFewObservations { needed: 2, got: n });
    }
    let a = sample.a_values();
    let b = sample.b_values();
    let nf = T::from_count(n);
    let mean_a = mean(&a);
    let mean_b = mean(&b);
    let (mut saa, mut sbb, mut sab) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(&b) {
        let da = x - mean_a;
        let db = y - mean_b;
        saa = saa + da * da;
        sbb = sbb + db * db;
        sab = sab + da * db;
    }
    let s_a_sq = saa / nf;
    let s_b_sq = sbb / nf;
    let s_ab = sab / nf;

    let pooled = s_a_sq + s_b_sq - T::lit(2.0) * s_ab;
    if pooled <= (s_a_sq + s_b_sq) * T::epsilon() * T::lit(64.0) {
        return Err(StatsError::ZeroVariance);
    }
    let s_d = (nf / (nf - T::one()) * pooled).sqrt();
    let mean_diff = mean(&sample.differences());
    let d = mean_diff / s_d;
    Ok(EffectSize { n, d, d_abs: d.abs(), mean_diff, s_d, s_a_sq, s_b_sq, s_ab })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_three_pairs() {
        let s = PairedSample::from_slices("f", &[1.0_f64, 2.0, 3.0], &[2.0, 4.0, 5.0]).unwrap();
        let e = effect_size_dd(&s).unwrap();
        let sd = (1.0_f64 / 3.0).sqrt();
        assert!((e.s_d - sd).abs() < 1e-12);
        assert!((e.d - (-5.0 / 3.0) / sd).abs() < 1e-12);
        assert!((e.d + 2.886_751_345_948_129).abs() < 1e-12);
        assert!(e.is_large());
    }

    #[test]
    fn constant_shift_is_degenerate() {
        let a = [3.0_f64, 4.5, 5.0, 6.25];
        let b: Vec<f64> = a.iter().map(|x| x + 0.75).collect();
        let s = PairedSample::from_slices("f", &a, &b).unwrap();
        assert_eq!(effect_size_dd(&s), Err(StatsError::ZeroVariance));
    }
}
