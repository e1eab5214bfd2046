use crate::Scalar;

pub fn mean<T: Scalar>(xs: &[T]) -> T {
    let sum = xs.iter().fold(T::zero(), |acc, &x| acc + x);
    sum / T::from_count(xs.len())
}

/// Sample variance with the `n - 1` denominator (two-pass).
pub fn var_unbiased<T: Scalar>(xs: &[T]) -> T {
    let m = mean(xs);
    let ss = xs.iter().fold(T::zero(), |acc, &x| acc + (x - m) * (x - m));
    ss / T::from_count(xs.len() - 1)
}

pub fn sd_unbiased<T: Scalar>(xs: &[T]) -> T {
    var_unbiased(xs).sqrt()
}

/// True when the spread of `xs` is indistinguishable from rounding noise.
pub(crate) fn is_degenerate<T: Scalar>(xs: &[T], sd: T) -> bool {
    let scale = xs.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    sd <= scale * T::epsilon() * T::lit(64.0)
}
