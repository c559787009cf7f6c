//! Hartigan's dip test of unimodality, circularized by cutting at the largest gap.
//!
//! The dip is the maximum distance between the empirical distribution
//! function and the closest unimodal distribution function. The linear
//! statistic is the classic GCM/LCM algorithm (Hartigan & Hartigan, AS 217,
//! with Maechler's termination fix). On the circle, the sample is unrolled
//! so that its largest circular gap straddles the cut point, which makes the
//! statistic independent of where zero is placed. P-values are bootstrapped
//! from the circular-uniform null.

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::{check_alpha, sample_uniform_angle, CircularError, CircularSample, TestMethod, TestResult};
use crate::rng::stream_rng;

pub const DIP_MIN_POINTS: usize = 4;

/// Linear dip statistic of an ascending-sorted sample.
///
/// Returns 0 for fewer than two points or when every value is equal;
/// otherwise the result lies in `[1/(2n), 1/4]`.
pub fn dip_statistic(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n < 2 || sorted[n - 1] == sorted[0] {
        return 0.0;
    }
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]), "input must be sorted");

    // 1-based copies so the index arithmetic reads like the published algorithm
    let mut x = Vec::with_capacity(n + 1);
    x.push(f64::NAN);
    x.extend_from_slice(sorted);
    let diff = |a: usize, b: usize| a as f64 - b as f64;

    // Indices over which combination is necessary for the convex minorant.
    let mut mn = vec![0usize; n + 1];
    mn[1] = 1;
    for j in 2..=n {
        mn[j] = j - 1;
        loop {
            let mnj = mn[j];
            let mnmnj = mn[mnj];
            if mnj == 1 || (x[j] - x[mnj]) * diff(mnj, mnmnj) < (x[mnj] - x[mnmnj]) * diff(j, mnj) {
                break;
            }
            mn[j] = mnmnj;
        }
    }

    // ... and for the concave majorant.
    let mut mj = vec![0usize; n + 1];
    mj[n] = n;
    for k in (1..n).rev() {
        mj[k] = k + 1;
        loop {
            let mjk = mj[k];
            let mjmjk = mj[mjk];
            if mjk == n || (x[k] - x[mjk]) * diff(mjk, mjmjk) < (x[mjk] - x[mjmjk]) * diff(k, mjk) {
                break;
            }
            mj[k] = mjmjk;
        }
    }

    let mut gcm = vec![0usize; n + 2];
    let mut lcm = vec![0usize; n + 2];
    let mut low = 1usize;
    let mut high = n;
    // twice n times the dip until the final division
    let mut dip = 1.0f64;

    loop {
        if low >= high {
            break;
        }
        // change points of the GCM from high down to low
        let mut ic = 1;
        gcm[1] = high;
        while gcm[ic] > low {
            let i = gcm[ic];
            ic += 1;
            gcm[ic] = mn[i];
        }
        let l_gcm = ic;

        // change points of the LCM from low up to high
        ic = 1;
        lcm[1] = low;
        while lcm[ic] < high {
            let i = lcm[ic];
            ic += 1;
            lcm[ic] = mj[i];
        }
        let l_lcm = ic;

        // largest distance between GCM and LCM on [low, high]
        let mut ig = l_gcm;
        let mut ih = l_lcm;
        let mut d = 0.0f64;
        if l_gcm != 2 || l_lcm != 2 {
            let mut ix = l_gcm - 1;
            let mut iv = 2usize;
            loop {
                let gcmix = gcm[ix];
                let lcmiv = lcm[iv];
                if gcmix > lcmiv {
                    let gcmi1 = gcm[ix + 1];
                    let dx = diff(lcmiv + 1, gcmi1)
                        - (x[lcmiv] - x[gcmi1]) * diff(gcmix, gcmi1) / (x[gcmix] - x[gcmi1]);
                    iv += 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv - 1;
                    }
                } else {
                    let lcmiv1 = lcm[iv - 1];
                    let dx = (x[gcmix] - x[lcmiv1]) * diff(lcmiv, lcmiv1) / (x[lcmiv] - x[lcmiv1])
                        - (diff(gcmix, lcmiv1) - 1.0);
                    ix -= 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv;
                    }
                }
                ix = ix.max(1);
                iv = iv.min(l_lcm);
                if gcm[ix] == lcm[iv] {
                    break;
                }
            }
        } else {
            d = 1.0;
        }

        if d < dip {
            break;
        }

        // dip of the convex minorant
        let mut dip_l = 0.0f64;
        for j in ig..l_gcm {
            let mut max_t = 1.0f64;
            let jb = gcm[j + 1];
            let je = gcm[j];
            if je - jb > 1 && x[je] != x[jb] {
                let c = diff(je, jb) / (x[je] - x[jb]);
                for jj in jb..=je {
                    let t = diff(jj + 1, jb) - (x[jj] - x[jb]) * c;
                    max_t = max_t.max(t);
                }
            }
            dip_l = dip_l.max(max_t);
        }

        // dip of the concave majorant
        let mut dip_u = 0.0f64;
        for j in ih..l_lcm {
            let mut max_t = 1.0f64;
            let jb = lcm[j];
            let je = lcm[j + 1];
            if je - jb > 1 && x[je] != x[jb] {
                let c = diff(je, jb) / (x[je] - x[jb]);
                for jj in jb..=je {
                    let t = (x[jj] - x[jb]) * c - (diff(jj, jb) - 1.0);
                    max_t = max_t.max(t);
                }
            }
            dip_u = dip_u.max(max_t);
        }

        dip = dip.max(dip_l.max(dip_u));

        // no movement of the modal interval: done
        if low == gcm[ig] && high == lcm[ih] {
            break;
        }
        low = gcm[ig];
        high = lcm[ih];
    }

    dip / (2 * n) as f64
}

/// Dip of a circular sample, cut at its largest circular gap.
pub fn circular_dip(sample: &CircularSample) -> f64 {
    let sorted = sample.sorted();
    dip_statistic(&unroll_at_largest_gap(&sorted))
}

/// Re-expresses sorted angles as offsets from the point following the
/// largest circular gap; the result is sorted on `[0, 2π)`.
fn unroll_at_largest_gap(sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    if n < 2 {
        return sorted.to_vec();
    }
    let mut best = (sorted[0] + TAU - sorted[n - 1], 0usize);
    for i in 1..n {
        let gap = sorted[i] - sorted[i - 1];
        if gap > best.0 {
            best = (gap, i);
        }
    }
    let start = sorted[best.1];
    (0..n)
        .map(|i| {
            let a = sorted[(best.1 + i) % n] - start;
            if a < 0.0 {
                a + TAU
            } else {
                a
            }
        })
        .collect()
}

/// Rejects unimodality when the bootstrap p-value falls below `alpha`.
///
/// The p-value is the fraction of `n_boot` circular-uniform samples of the
/// same size whose dip is at least the observed one.
pub fn dip_test(
    sample: &CircularSample,
    alpha: f64,
    n_boot: usize,
    seed: u64,
) -> Result<TestResult, CircularError> {
    check_alpha(alpha)?;
    sample.require("dip test", DIP_MIN_POINTS)?;
    if n_boot == 0 {
        return Err(CircularError::NoReplicates);
    }
    let dip = circular_dip(sample);
    if dip == 0.0 {
        return Ok(TestResult::with_p_value(TestMethod::HartiganDip, 0.0, 1.0, alpha));
    }
    let n = sample.len();
    let exceed = (0..n_boot)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = stream_rng(seed, r as u64);
            let null = CircularSample::from_wrapped((0..n).map(|_| sample_uniform_angle(&mut rng)));
            circular_dip(&null) >= dip
        })
        .count();
    let p = exceed as f64 / n_boot as f64;
    Ok(TestResult::with_p_value(TestMethod::HartiganDip, dip, p, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::sample_von_mises;
    use std::f64::consts::PI;

    // Reference dips from an independent implementation (R `diptest::dip`, min.is.0 = FALSE).
    #[test]
    fn linear_dip_reference_values() {
        let cases: &[(&[f64], f64)] = &[
            (&[1.0, 2.0, 3.0, 4.0, 10.0, 11.0, 12.0], 0.160_714_285_714_285_73),
            (&[0.0, 1.0, 2.0, 3.0], 0.125),
        ];
        for (x, expected) in cases {
            let got = dip_statistic(x);
            assert!((got - expected).abs() < 1e-12, "{x:?}: {got} vs {expected}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(dip_statistic(&[]), 0.0);
        assert_eq!(dip_statistic(&[3.0]), 0.0);
        assert_eq!(dip_statistic(&[2.0, 2.0, 2.0]), 0.0);
        let s = CircularSample::new(vec![1.0; 8]).unwrap();
        let res = dip_test(&s, 0.01, 100, 1).unwrap();
        assert_eq!(res.statistic, 0.0);
        assert!(!res.reject_null);
    }

    #[test]
    fn unroll_puts_largest_gap_at_cut() {
        let u = unroll_at_largest_gap(&[0.1, 0.2, 6.2]);
        // largest gap 0.2 -> 6.2; start at 6.2
        assert!((u[0] - 0.0).abs() < 1e-12);
        assert!((u[1] - (0.1 + TAU - 6.2)).abs() < 1e-12);
        assert!((u[2] - (0.2 + TAU - 6.2)).abs() < 1e-12);
    }

    #[test]
    fn rotation_invariant() {
        let mut rng = stream_rng(17, 0);
        let s = CircularSample::from_wrapped((0..150).map(|i| {
            let mu = if i % 2 == 0 { 1.0 } else { 4.0 };
            sample_von_mises(&mut rng, mu, 3.0)
        }));
        let d = circular_dip(&s);
        for c in [0.3, 2.5, 5.9] {
            assert!((circular_dip(&s.rotated(c)) - d).abs() < 1e-9);
        }
    }

    #[test]
    fn unimodal_von_mises_not_rejected() {
        let mut rng = stream_rng(500, 0);
        let s = CircularSample::from_wrapped((0..500).map(|_| sample_von_mises(&mut rng, 2.0, 5.0)));
        let res = dip_test(&s, 0.01, 1000, 42).unwrap();
        assert!(!res.reject_null, "p = {:?}", res.p_value());
    }

    #[test]
    fn antipodal_bimodal_rejected() {
        let mut rng = stream_rng(501, 0);
        let s = CircularSample::from_wrapped((0..500).map(|i| {
            let mu = if i < 250 { 1.0 } else { 1.0 + PI };
            sample_von_mises(&mut rng, mu, 8.0)
        }));
        let res = dip_test(&s, 0.01, 1000, 42).unwrap();
        assert!(res.reject_null, "p = {:?}", res.p_value());
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let mut rng = stream_rng(3, 3);
        let s = CircularSample::from_wrapped((0..60).map(|_| sample_von_mises(&mut rng, 0.0, 1.0)));
        let a = dip_test(&s, 0.05, 300, 9).unwrap();
        let b = dip_test(&s, 0.05, 300, 9).unwrap();
        assert_eq!(a, b);
        assert!(dip_test(&s, 0.05, 0, 9).is_err());
    }
}
