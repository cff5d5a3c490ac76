//! Overflow-safe helpers for Boltzmann arithmetic.

use std::f64::consts::LN_2;

/// `ln(cosh(x))` without overflow for large `|x|` and without cancellation
/// for small `|x|`.
pub fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1.0 {
        // cosh(x) - 1 = 2 sinh^2(x/2)
        let s = (0.5 * x).sinh();
        (2.0 * s * s).ln_1p()
    } else {
        ax + (-2.0 * ax).exp().ln_1p() - LN_2
    }
}

/// Logistic function `1 / (1 + e^{-x})`, accurate in both tails.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(sum(exp(v)))`. Returns `-inf` for an empty input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Two-term `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_cosh_matches_naive_where_naive_is_safe() {
        for i in -400..=400 {
            let x = i as f64 * 0.05;
            let naive = x.cosh().ln();
            assert!((ln_cosh(x) - naive).abs() < 1e-14 * naive.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn ln_cosh_large_argument() {
        assert!((ln_cosh(1000.0) - (1000.0 - LN_2)).abs() < 1e-12);
        assert!((ln_cosh(-1000.0) - (1000.0 - LN_2)).abs() < 1e-12);
    }

    #[test]
    fn ln_cosh_small_argument_keeps_relative_precision() {
        let x: f64 = 2e-6;
        let series = x * x / 2.0 - x.powi(4) / 12.0;
        assert!(((ln_cosh(x) - series) / series).abs() < 1e-12);
    }

    #[test]
    fn logistic_tails() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(-66.0) - (-66.0f64).exp()).abs() < 1e-40);
        assert!((logistic(5.0) + logistic(-5.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_basics() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - LN_2).abs() < 1e-15);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + LN_2)).abs() < 1e-12);
        assert!((log_add_exp(-3.0, 2.0) - (2.0f64.exp() + (-3.0f64).exp()).ln()).abs() < 1e-14);
    }
}
