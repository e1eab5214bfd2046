//! Special functions backing the test distributions: log-gamma, the
//! regularized incomplete beta and gamma functions, and the standard normal
//! distribution.

use crate::Scalar;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 10_000;

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = T::lit(std::f64::consts::PI);
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::from_count(i));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    T::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

fn tiny<T: Scalar>() -> T {
    T::min_positive_value() / T::epsilon()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf<T: Scalar>(a: T, b: T, x: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let fpmin = tiny::<T>();
    let eps = T::epsilon();
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < fpmin {
        d = fpmin;
    }
    d = d.recip();
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = T::from_count(m);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < fpmin {
            d = fpmin;
        }
        c = one + aa / c;
        if c.abs() < fpmin {
            c = fpmin;
        }
        d = d.recip();
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < fpmin {
            d = fpmin;
        }
        c = one + aa / c;
        if c.abs() < fpmin {
            c = fpmin;
        }
        d = d.recip();
        let del = d * c;
        h = h * del;
        if (del - one).abs() <= eps {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn inc_beta<T: Scalar>(a: T, b: T, x: T) -> T {
    let one = T::one();
    if x <= T::zero() {
        return T::zero();
    }
    if x >= one {
        return one;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (one - x).ln();
    let front = ln_front.exp();
    if x < (a + one) / (a + b + T::lit(2.0)) {
        front * beta_cf(a, b, x) / a
    } else {
        one - front * beta_cf(b, a, one - x) / b
    }
}

/// Two-tailed p-value of Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed<T: Scalar>(t: T, df: T) -> T {
    if t.is_infinite() {
        return T::zero();
    }
    let half = T::lit(0.5);
    let x = df / (df + t * t);
    inc_beta(df * half, half, x).min(T::one())
}

fn gamma_series<T: Scalar>(a: T, x: T) -> T {
    let mut ap = a;
    let mut del = a.recip();
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap = ap + T::one();
        del = del * x / ap;
        sum = sum + del;
        if del.abs() < sum.abs() * T::epsilon() {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cf<T: Scalar>(a: T, x: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let fpmin = tiny::<T>();
    let mut b = x + one - a;
    let mut c = fpmin.recip();
    let mut d = b.recip();
    let mut h = d;
    for i in 1..=MAX_ITER {
        let i = T::from_count(i);
        let an = -i * (i - a);
        b = b + two;
        d = an * d + b;
        if d.abs() < fpmin {
            d = fpmin;
        }
        c = b + an / c;
        if c.abs() < fpmin {
            c = fpmin;
        }
        d = d.recip();
        let del = d * c;
        h = h * del;
        if (del - one).abs() <= T::epsilon() {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p<T: Scalar>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x < a + T::one() {
        gamma_series(a, x)
    } else {
        T::one() - gamma_cf(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q<T: Scalar>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::one();
    }
    if x < a + T::one() {
        T::one() - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

/// Complementary error function.
pub fn erfc<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x >= T::zero() {
        gamma_q(half, x * x)
    } else {
        T::one() + gamma_p(half, x * x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf<T: Scalar>(z: T) -> T {
    T::lit(0.5) * erfc(-z / T::lit(std::f64::consts::SQRT_2))
}

/// Standard normal upper tail `1 - Φ(z)`, accurate far into the tail.
pub fn normal_sf<T: Scalar>(z: T) -> T {
    T::lit(0.5) * erfc(z / T::lit(std::f64::consts::SQRT_2))
}

const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] =
    [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];

fn horner<T: Scalar>(coef: &[f64], x: T) -> T {
    coef.iter().fold(T::zero(), |acc, &c| acc * x + T::lit(c))
}

/// Inverse of the standard normal CDF for `p` in (0, 1).
///
/// Rational approximation followed by one Halley refinement against
/// [`normal_cdf`], which brings the result to working precision.
pub fn normal_quantile<T: Scalar>(p: T) -> T {
    let half = T::lit(0.5);
    if p <= T::zero() {
        return T::neg_infinity();
    }
    if p >= T::one() {
        return T::infinity();
    }
    if p > half {
        return -normal_quantile(T::one() - p);
    }
    let p_low = T::lit(0.02425);
    let x = if p < p_low {
        let q = (T::lit(-2.0) * p.ln()).sqrt();
        horner(&ACKLAM_C, q) / (horner(&ACKLAM_D, q) * q + T::one())
    } else {
        let q = p - half;
        let r = q * q;
        horner(&ACKLAM_A, r) * q / (horner(&ACKLAM_B, r) * r + T::one())
    };
    let e = normal_cdf(x) - p;
    let u = e * T::lit((2.0 * std::f64::consts::PI).sqrt()) * (x * x * half).exp();
    x - u / (T::one() + x * u * half)
}
