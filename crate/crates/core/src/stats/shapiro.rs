//! Shapiro-Wilk W test following Royston's AS R94 algorithm.

use serde::{Deserialize, Serialize};

use super::special::{normal_quantile, normal_sf};
use super::StatsError;
use crate::Scalar;

pub const MIN_N: usize = 3;
pub const MAX_N: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ShapiroWilk<T> {
    pub w: T,
    pub p_value: T,
}

const C1: [f64; 6] = [0.0, 0.221_157, -0.147_981, -2.071_19, 4.434_685, -2.706_056];
const C2: [f64; 6] = [0.0, 0.042_981, -0.293_762, -1.752_461, 5.682_633, -3.582_633];
const C3: [f64; 4] = [0.544, -0.399_78, 0.025_054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.778_57, 0.062_767, -0.002_032_2];
const C5: [f64; 4] = [-1.5861, -0.310_82, -0.083_751, 0.003_891_5];
const C6: [f64; 3] = [-0.4803, -0.082_676, 0.003_030_2];
const G: [f64; 2] = [-2.273, 0.459];

/// `c[0] + c[1] x + c[2] x^2 + ...`
fn poly<T: Scalar>(c: &[f64], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &ci| acc * x + T::lit(ci))
}

/// Half of the antisymmetric coefficient vector, for the lower order statistics.
fn coefficients<T: Scalar>(n: usize) -> Vec<T> {
    let half = n / 2;
    let mut a = vec![T::zero(); half];
    if n == 3 {
        a[0] = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        return a;
    }
    let two = T::lit(2.0);
    let an25 = T::from_count(n) + T::lit(0.25);
    let m: Vec<T> = (1..=half).map(|i| normal_quantile((T::from_count(i) - T::lit(0.375)) / an25)).collect();
    let summ2 = two * m.iter().fold(T::zero(), |acc, &v| acc + v * v);
    let ssumm2 = summ2.sqrt();
    let rsn = T::from_count(n).sqrt().recip();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    let (first_scaled, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - two * m[0] * m[0] - two * m[1] * m[1]) / (T::one() - two * a1 * a1 - two * a2 * a2)).sqrt();
        a[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - two * m[0] * m[0]) / (T::one() - two * a1 * a1)).sqrt();
        (1, fac)
    };
    a[0] = a1;
    for i in first_scaled..half {
        a[i] = -m[i] / fac;
    }
    a
}

/// Shapiro-Wilk normality test. Valid for `3 <= n <= 5000`.
pub fn shapiro_wilk<T: Scalar>(sample: &[T]) -> Result<ShapiroWilk<T>, StatsError> {
    let n = sample.len();
    if n < MIN_N {
        return Err(StatsError::TooFewObservations { needed: MIN_N, got: n });
    }
    if n > MAX_N {
        return Err(StatsError::TooManyObservations { max: MAX_N, got: n });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut x = sample.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let range = x[n - 1] - x[0];
    let scale = x[0].abs().max(x[n - 1].abs());
    if range <= scale * T::epsilon() * T::lit(64.0) {
        return Err(StatsError::ZeroVariance);
    }

    let a = coefficients::<T>(n);
    let half = n / 2;
    let coef = |i: usize| -> T {
        if i < half {
            -a[i]
        } else if i >= n - half {
            a[n - 1 - i]
        } else {
            T::zero()
        }
    };

    // squared correlation between data and coefficients, in range units
    let nf = T::from_count(n);
    let scaled: Vec<T> = x.iter().map(|&v| v / range).collect();
    let sa = (0..n).fold(T::zero(), |acc, i| acc + coef(i)) / nf;
    let sx = scaled.iter().fold(T::zero(), |acc, &v| acc + v) / nf;
    let (mut ssa, mut ssx, mut sax) = (T::zero(), T::zero(), T::zero());
    for (i, &xi) in scaled.iter().enumerate() {
        let asa = coef(i) - sa;
        let xsx = xi - sx;
        ssa = ssa + asa * asa;
        ssx = ssx + xsx * xsx;
        sax = sax + asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = ((ssassx - sax) * (ssassx + sax) / (ssa * ssx)).max(T::zero());
    let w = T::one() - w1;

    Ok(ShapiroWilk { w, p_value: p_value(n, w, w1) })
}

fn p_value<T: Scalar>(n: usize, w: T, w1: T) -> T {
    if n == 3 {
        let pi6 = T::lit(6.0 / std::f64::consts::PI);
        let stqr = T::lit(std::f64::consts::FRAC_PI_3);
        return (pi6 * (w.sqrt().asin() - stqr)).max(T::zero()).min(T::one());
    }
    if w1 <= T::zero() {
        return T::one();
    }
    let an = T::from_count(n);
    let mut y = w1.ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return T::lit(1e-99).max(T::min_positive_value());
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    normal_sf((y - m) / s).min(T::one())
}
