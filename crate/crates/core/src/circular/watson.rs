//! Watson's U² goodness-of-fit test on the circle.

use super::{check_alpha, CircularError, CircularSample, TestMethod, TestResult};

pub const WATSON_MIN_POINTS: usize = 4;

/// Critical value at significance 0.01 for a von Mises fit with estimated parameters.
pub const WATSON_CRITICAL_ALPHA_001: f64 = 0.141;

/// Computational form on `u_i = F(θ_(i))` sorted ascending:
/// `Σ (u_i − (2i−1)/(2n))² − n(ū − ½)² + 1/(12n)`.
pub fn watson_u2_statistic(sample: &CircularSample, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sample.len();
    if n == 0 {
        return 0.0;
    }
    let mut u: Vec<f64> = sample.angles().iter().map(|&a| cdf(a)).collect();
    u.sort_by(f64::total_cmp);
    let nf = n as f64;
    let ss: f64 = u
        .iter()
        .enumerate()
        .map(|(i, ui)| {
            let expected = (2 * i + 1) as f64 / (2.0 * nf);
            (ui - expected).powi(2)
        })
        .sum();
    let mean = u.iter().sum::<f64>() / nf;
    ss - nf * (mean - 0.5).powi(2) + 1.0 / (12.0 * nf)
}

/// Test against the tabulated critical value; only `alpha = 0.01` is tabulated.
pub fn watson_u2_test(
    sample: &CircularSample,
    cdf: impl Fn(f64) -> f64,
    alpha: f64,
) -> Result<TestResult, CircularError> {
    check_alpha(alpha)?;
    if (alpha - 0.01).abs() > 1e-12 {
        return Err(CircularError::UntabulatedAlpha {
            test: "watson U²",
            alpha,
        });
    }
    watson_u2_test_with_critical(sample, cdf, alpha, WATSON_CRITICAL_ALPHA_001)
}

/// Test against a caller-supplied critical value (e.g. from a parametric bootstrap).
pub fn watson_u2_test_with_critical(
    sample: &CircularSample,
    cdf: impl Fn(f64) -> f64,
    alpha: f64,
    critical: f64,
) -> Result<TestResult, CircularError> {
    check_alpha(alpha)?;
    sample.require("watson U²", WATSON_MIN_POINTS)?;
    Ok(TestResult::with_critical(
        TestMethod::WatsonU2,
        watson_u2_statistic(sample, cdf),
        critical,
        alpha,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::{sample_von_mises, VonMises};
    use crate::rng::stream_rng;
    use std::f64::consts::TAU;

    #[test]
    fn calibrated_quantiles_give_one_over_12n() {
        // uniform cdf, points exactly at (2i-1)/(2n) of the circle
        let n = 4;
        let s = CircularSample::new((0..n).map(|i| (2 * i + 1) as f64 / (2.0 * n as f64) * TAU).collect())
            .unwrap();
        let u2 = watson_u2_statistic(&s, |a| a / TAU);
        assert!((u2 - 1.0 / 48.0).abs() < 1e-12, "{u2}");
    }

    /// The defining integral evaluated with a fine midpoint rule on the u-scale.
    fn integral_oracle(u: &[f64]) -> f64 {
        let n = u.len() as f64;
        let m = 200_000;
        let fn_at = |t: f64| u.iter().filter(|&&x| x <= t).count() as f64 / n;
        let grid: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let diffs: Vec<f64> = grid.iter().map(|&t| fn_at(t) - t).collect();
        let mean = diffs.iter().sum::<f64>() / m as f64;
        n * diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / m as f64
    }

    #[test]
    fn computational_form_matches_integral() {
        let mut rng = stream_rng(8, 0);
        let s = CircularSample::from_wrapped((0..25).map(|_| sample_von_mises(&mut rng, 2.0, 1.0)));
        let u: Vec<f64> = s.angles().iter().map(|a| a / TAU).collect();
        let got = watson_u2_statistic(&s, |a| a / TAU);
        assert!((got - integral_oracle(&u)).abs() < 1e-4);
    }

    #[test]
    fn invariant_under_common_rotation() {
        let mut rng = stream_rng(9, 0);
        let s = CircularSample::from_wrapped((0..60).map(|_| sample_von_mises(&mut rng, 1.0, 2.0)));
        let base = VonMises::new(1.2, 1.8).unwrap().cdf_table();
        let u0 = watson_u2_statistic(&s, |a| base.cdf(a));
        for c in [0.7, 3.0, 5.5] {
            let rotated = VonMises::new(1.2 + c, 1.8).unwrap().cdf_table();
            let u = watson_u2_statistic(&s.rotated(c), |a| rotated.cdf(a));
            assert!((u - u0).abs() < 1e-9, "c={c}: {u} vs {u0}");
        }
    }

    #[test]
    fn true_distribution_not_rejected() {
        let mut rng = stream_rng(4242, 0);
        let s = CircularSample::from_wrapped((0..500).map(|_| sample_von_mises(&mut rng, 1.0, 4.0)));
        let table = VonMises::new(1.0, 4.0).unwrap().cdf_table();
        let res = watson_u2_test(&s, |a| table.cdf(a), 0.01).unwrap();
        assert!(!res.reject_null, "U² = {}", res.statistic);
    }

    #[test]
    fn rejects_wrong_distribution_and_validates_inputs() {
        let mut rng = stream_rng(4243, 0);
        let s = CircularSample::from_wrapped((0..300).map(|_| sample_von_mises(&mut rng, 1.0, 4.0)));
        let res = watson_u2_test(&s, |a| a / TAU, 0.01).unwrap();
        assert!(res.reject_null);
        assert!(watson_u2_test(&s, |a| a / TAU, 0.05).is_err());
        let tiny = CircularSample::new(vec![0.0, 1.0]).unwrap();
        assert!(watson_u2_test(&tiny, |a| a / TAU, 0.01).is_err());
    }
}
