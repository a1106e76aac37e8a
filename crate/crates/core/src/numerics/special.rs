//! Numerically stable scalar helpers.

use std::f64::consts::{LN_2, PI, SQRT_2};

/// `ln(1 + e^{-x})` without overflow for either sign of `x`.
#[inline]
pub fn softplus_neg(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// `log2(1 + e^{-x})`.
#[inline]
pub fn log2_one_plus_exp_neg(x: f64) -> f64 {
    softplus_neg(x) / LN_2
}

/// `ln(sum_i e^{v_i})`; `-inf` for an empty input.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values
        .into_iter()
        .map(|v| (v - max).exp())
        .sum::<f64>()
        .ln()
}

/// `ln(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
#[inline]
pub fn std_normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / SQRT_2)
}

/// `P(lo < Z < hi)` for a standard normal Z, accurate in both tails.
pub fn std_normal_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        0.5 * (libm::erfc(lo / SQRT_2) - libm::erfc(hi / SQRT_2))
    } else if hi <= 0.0 {
        0.5 * (libm::erfc(-hi / SQRT_2) - libm::erfc(-lo / SQRT_2))
    } else {
        1.0 - std_normal_cdf(lo) - 0.5 * libm::erfc(hi / SQRT_2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn softplus_branches_agree() {
        for x in [-50.0_f64, -3.0, -1e-9, 0.0, 1e-9, 2.5, 40.0, 800.0] {
            let naive = (1.0 + (-x).exp()).ln();
            assert_abs_diff_eq!(softplus_neg(x), naive, epsilon = 1e-12 * naive.max(1.0));
        }
        assert_abs_diff_eq!(softplus_neg(-1000.0), 1000.0, epsilon = 1e-12);
        assert_eq!(log2_one_plus_exp_neg(0.0), 1.0);
    }

    #[test]
    fn log_sum_exp_handles_large_values() {
        assert_abs_diff_eq!(
            log_sum_exp([1000.0, 1000.0]),
            1000.0 + LN_2,
            epsilon = 1e-12
        );
        assert_eq!(log_sum_exp(std::iter::empty::<f64>()), f64::NEG_INFINITY);
        assert_abs_diff_eq!(log_add_exp(-1e4, 0.0), 0.0, epsilon = 1e-300);
        assert_abs_diff_eq!(
            log_add_exp(2f64.ln(), 3f64.ln()),
            5f64.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn normal_interval_tails() {
        assert_abs_diff_eq!(
            std_normal_interval(-1.0, 1.0),
            0.682689492137086,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            std_normal_interval(8.0, f64::INFINITY),
            6.22096057427178e-16,
            epsilon = 1e-28
        );
        assert_abs_diff_eq!(
            std_normal_interval(f64::NEG_INFINITY, f64::INFINITY),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(std_normal_interval(2.0, 1.0), 0.0);
    }
}
