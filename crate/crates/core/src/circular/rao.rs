//! Rao's spacing test for circular uniformity.
//!
//! `U = ½ Σ |T_i − λ|` in degrees, with `T_i` the successive gaps between the
//! sorted observations (the last gap wrapping through 360°) and `λ = 360/n`.
//! Large `U` means the gaps are uneven, i.e. evidence against uniformity.
//!
//! Critical values come from a seeded Monte Carlo null distribution that is
//! computed once per `(n, alpha)` and memoized for the life of the process.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rayon::prelude::*;

use super::{check_alpha, upper_quantile, CircularError, CircularSample, TestMethod, TestResult};
use crate::rng::{derive_seed, stream_rng};

pub const RAO_MIN_POINTS: usize = 4;
/// Null replicates per sample size.
pub const RAO_REPLICATES: usize = 100_000;
const RAO_SEED: u64 = 0x5241_4f5f_5350_4143;

/// Test statistic in degrees.
pub fn rao_spacing_statistic(sample: &CircularSample) -> f64 {
    let n = sample.len();
    if n == 0 {
        return 0.0;
    }
    let f: Vec<f64> = sample.sorted().iter().map(|a| a.to_degrees()).collect();
    let lambda = 360.0 / n as f64;
    let inner: f64 = f.windows(2).map(|w| (w[1] - w[0] - lambda).abs()).sum();
    let wrap = (360.0 - f[n - 1]) + f[0];
    0.5 * (inner + (wrap - lambda).abs())
}

/// Upper `alpha` critical value of `U` for samples of size `n`.
pub fn rao_critical_value(n: usize, alpha: f64) -> Result<f64, CircularError> {
    check_alpha(alpha)?;
    if n < RAO_MIN_POINTS {
        return Err(CircularError::TooFewPoints {
            test: "rao spacing test",
            need: RAO_MIN_POINTS,
            got: n,
        });
    }
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (n, alpha.to_bits());
    if let Some(v) = cache.lock().expect("rao cache poisoned").get(&key) {
        return Ok(*v);
    }
    let v = upper_quantile(null_replicates(n), alpha);
    cache.lock().expect("rao cache poisoned").insert(key, v);
    Ok(v)
}

/// Null distribution of `U`.
///
/// The `n` circular gaps of `n` iid uniform points are jointly distributed as
/// `n` iid exponentials divided by their sum, so no sorting is needed.
fn null_replicates(n: usize) -> Vec<f64> {
    let seed = derive_seed(RAO_SEED, n as u64);
    let lambda = 360.0 / n as f64;
    (0..RAO_REPLICATES)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |gaps, r| {
                let mut rng = stream_rng(seed, r as u64);
                let mut total = 0.0;
                for g in gaps.iter_mut() {
                    let u: f64 = rng.random();
                    *g = -(1.0 - u).ln();
                    total += *g;
                }
                let scale = 360.0 / total;
                0.5 * gaps.iter().map(|g| (g * scale - lambda).abs()).sum::<f64>()
            },
        )
        .collect()
}

/// Rejects circular uniformity when `U` exceeds the critical value.
pub fn rao_spacing_test(sample: &CircularSample, alpha: f64) -> Result<TestResult, CircularError> {
    sample.require("rao spacing test", RAO_MIN_POINTS)?;
    let critical = rao_critical_value(sample.len(), alpha)?;
    Ok(TestResult::with_critical(
        TestMethod::RaoSpacing,
        rao_spacing_statistic(sample),
        critical,
        alpha,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::sample_uniform_angle;
    use std::f64::consts::TAU;

    fn even(n: usize, offset: f64) -> CircularSample {
        CircularSample::from_wrapped((0..n).map(|i| offset + i as f64 * TAU / n as f64))
    }

    /// The statistic written straight from the formula, on unsorted-then-sorted degrees.
    fn direct_oracle(angles: &[f64]) -> f64 {
        let mut f: Vec<f64> = angles.iter().map(|a| a * 180.0 / std::f64::consts::PI).collect();
        f.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = f.len();
        let lambda = 360.0 / n as f64;
        let mut u = 0.0;
        for i in 0..n {
            let t = if i + 1 < n { f[i + 1] - f[i] } else { (360.0 - f[n - 1]) + f[0] };
            u += (t - lambda).abs();
        }
        u / 2.0
    }

    #[test]
    fn even_spacing_gives_zero() {
        for n in [4, 12, 100] {
            let s = even(n, 0.3);
            assert!(rao_spacing_statistic(&s).abs() < 1e-9);
        }
        let res = rao_spacing_test(&even(12, 0.0), 0.01).unwrap();
        assert!(!res.reject_null);
    }

    #[test]
    fn matches_direct_formula_on_random_angles() {
        let mut rng = stream_rng(2024, 0);
        let angles: Vec<f64> = (0..200).map(|_| sample_uniform_angle(&mut rng)).collect();
        let s = CircularSample::new(angles.clone()).unwrap();
        assert!((rao_spacing_statistic(&s) - direct_oracle(&angles)).abs() < 1e-9);
    }

    #[test]
    fn rotation_invariant() {
        let mut rng = stream_rng(5, 1);
        let s = CircularSample::from_wrapped((0..80).map(|_| sample_uniform_angle(&mut rng)));
        let u = rao_spacing_statistic(&s);
        for c in [0.1, 1.7, 4.0] {
            assert!((rao_spacing_statistic(&s.rotated(c)) - u).abs() < 1e-9);
        }
    }

    #[test]
    fn point_mass_is_maximal() {
        let s = CircularSample::new(vec![1.0; 10]).unwrap();
        // one gap of 360 and nine of 0: ½(324 + 9·36)
        assert!((rao_spacing_statistic(&s) - 324.0).abs() < 1e-9);
    }

    #[test]
    fn critical_values_agree_with_direct_simulation_and_asymptotics() {
        // Direct simulation from sorted uniform points, smaller budget.
        let n = 30;
        let direct: Vec<f64> = (0..20_000)
            .map(|r| {
                let mut rng = stream_rng(99, r);
                let a: Vec<f64> = (0..n).map(|_| sample_uniform_angle(&mut rng)).collect();
                direct_oracle(&a)
            })
            .collect();
        let direct_q = upper_quantile(direct, 0.05);
        let mc = rao_critical_value(n, 0.05).unwrap();
        assert!((mc - direct_q).abs() < 1.5, "{mc} vs {direct_q}");

        // Large n: U is approximately normal with mean 360/e and
        // sd 360·sqrt(2e − 5) / (e·sqrt(n)).
        let n = 400;
        let e = std::f64::consts::E;
        let mean = 360.0 / e;
        let sd = 360.0 * (2.0 * e - 5.0).sqrt() / (e * (n as f64).sqrt());
        let approx = mean + 2.326_348 * sd;
        let mc = rao_critical_value(n, 0.01).unwrap();
        assert!((mc - approx).abs() < 1.0, "{mc} vs {approx}");
    }

    #[test]
    fn too_few_points() {
        let s = CircularSample::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(
            rao_spacing_test(&s, 0.01),
            Err(CircularError::TooFewPoints { .. })
        ));
        assert!(rao_spacing_test(&even(8, 0.0), 1.5).is_err());
    }
}
