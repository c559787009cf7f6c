//! The von Mises distribution on the circle.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::bessel::{bessel_i0e, check_kappa};
use super::quadrature::adaptive_simpson;
use super::{wrap_angle, CircularError};

/// Absolute tolerance of each quadrature panel in [`VonMisesCdf`].
const PANEL_TOL: f64 = 1e-14;

/// Von Mises distribution with mean direction `mu` and concentration `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VonMises {
    mu: f64,
    kappa: f64,
    /// `ln(2π I0(κ))`, with the `e^κ` factor pulled out: `ln(2π I0e(κ))`.
    #[serde(skip)]
    log_norm_scaled: f64,
}

impl VonMises {
    /// `mu` is wrapped into `[0, 2π)`; `kappa` must lie in `[0, KAPPA_CAP]`.
    pub fn new(mu: f64, kappa: f64) -> Result<Self, CircularError> {
        check_kappa(kappa)?;
        if !mu.is_finite() {
            return Err(CircularError::AngleOutOfRange(mu));
        }
        Ok(Self {
            mu: wrap_angle(mu),
            kappa,
            log_norm_scaled: (TAU * bessel_i0e(kappa)).ln(),
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn ln_pdf(&self, theta: f64) -> f64 {
        self.kappa * ((theta - self.mu).cos() - 1.0) - self.log_norm_scaled
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        self.ln_pdf(theta).exp()
    }

    /// Builds the distribution function with cut point 0.
    pub fn cdf_table(&self) -> VonMisesCdf {
        VonMisesCdf::new(*self)
    }
}

/// Density `e^{κ cos(θ−μ)} / (2π I0(κ))`.
pub fn von_mises_pdf(theta: f64, mu: f64, kappa: f64) -> Result<f64, CircularError> {
    Ok(VonMises::new(mu, kappa)?.pdf(theta))
}

/// `P(0 <= Θ <= theta)` by numerical integration of the density.
pub fn von_mises_cdf(theta: f64, mu: f64, kappa: f64) -> Result<f64, CircularError> {
    Ok(VonMises::new(mu, kappa)?.cdf_table().cdf(theta))
}

/// Distribution function on `[0, 2π]` with cut point 0.
///
/// The circle is split into equal panels no wider than half a standard
/// deviation of the density; panel integrals are accumulated once, so each
/// evaluation only integrates the partial panel containing `theta`.
#[derive(Debug, Clone)]
pub struct VonMisesCdf {
    dist: VonMises,
    width: f64,
    cumulative: Vec<f64>,
}

impl VonMisesCdf {
    pub fn new(dist: VonMises) -> Self {
        let target = (PI / 16.0).min(0.5 / dist.kappa.sqrt());
        let panels = (TAU / target).ceil().max(1.0) as usize;
        let width = TAU / panels as f64;
        let f = |x: f64| dist.pdf(x);
        let mut cumulative = Vec::with_capacity(panels + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for j in 0..panels {
            let a = j as f64 * width;
            acc += adaptive_simpson(&f, a, a + width, PANEL_TOL);
            cumulative.push(acc);
        }
        Self {
            dist,
            width,
            cumulative,
        }
    }

    pub fn distribution(&self) -> &VonMises {
        &self.dist
    }

    /// `theta` is clamped to `[0, 2π]`.
    pub fn cdf(&self, theta: f64) -> f64 {
        let panels = self.cumulative.len() - 1;
        let theta = theta.clamp(0.0, TAU);
        let j = ((theta / self.width) as usize).min(panels);
        if j == panels {
            return self.cumulative[panels];
        }
        let a = j as f64 * self.width;
        let f = |x: f64| self.dist.pdf(x);
        (self.cumulative[j] + adaptive_simpson(&f, a, theta, PANEL_TOL)).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapezoid_integral(dist: &VonMises, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let inner: f64 = (1..m).map(|i| dist.pdf(a + i as f64 * h)).sum();
        h * (0.5 * dist.pdf(a) + inner + 0.5 * dist.pdf(b))
    }

    #[test]
    fn uniform_when_kappa_zero() {
        for theta in [0.0, 1.0, 3.0, 6.2] {
            let d = von_mises_pdf(theta, 2.0, 0.0).unwrap();
            assert!((d - 1.0 / TAU).abs() < 1e-15);
            let c = von_mises_cdf(theta, 2.0, 0.0).unwrap();
            assert!((c - theta / TAU).abs() < 1e-12);
        }
        assert!((1.0 / TAU - 0.159_155).abs() < 1e-6);
    }

    #[test]
    fn maximum_at_mean() {
        for kappa in [0.5, 3.0, 40.0] {
            let d = VonMises::new(1.0, kappa).unwrap();
            let peak = d.pdf(1.0);
            let expected = kappa.exp() / (TAU * super::super::bessel_i0(kappa).unwrap());
            assert!((peak - expected).abs() / expected < 1e-12);
            for i in 0..100 {
                assert!(d.pdf(i as f64 * 0.0628) <= peak);
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        for kappa in [0.0, 0.5, 2.0, 10.0, 100.0, 700.0] {
            let d = VonMises::new(2.0, kappa).unwrap();
            // trapezoid on a periodic integrand converges geometrically
            let total = trapezoid_integral(&d, 0.0, TAU, 20_000);
            assert!((total - 1.0).abs() < 1e-6, "kappa={kappa}: {total}");
        }
    }

    #[test]
    fn cdf_endpoints_and_trapezoid_oracle() {
        let d = VonMises::new(2.05, 3.85).unwrap();
        let table = d.cdf_table();
        assert_eq!(table.cdf(0.0), 0.0);
        assert!((table.cdf(TAU) - 1.0).abs() < 1e-8);
        for theta in [0.3, 1.0, 2.05, 3.3, 5.9] {
            let oracle = trapezoid_integral(&d, 0.0, theta, 200_000);
            assert!((table.cdf(theta) - oracle).abs() < 1e-7, "theta={theta}");
        }
    }

    #[test]
    fn cdf_monotone_on_fine_grid() {
        for (mu, kappa) in [(0.1, 0.3), (2.05, 3.85), (5.94, 1.56), (3.0, 700.0)] {
            let table = VonMises::new(mu, kappa).unwrap().cdf_table();
            let mut prev = 0.0;
            for i in 0..=5000 {
                let c = table.cdf(i as f64 * TAU / 5000.0);
                assert!(c >= prev, "mu={mu} kappa={kappa} i={i}");
                prev = c;
            }
            assert!((prev - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn rotation_equivariant_density() {
        let d = VonMises::new(1.0, 4.0).unwrap();
        for c in [0.5, 2.0, 6.0] {
            let r = VonMises::new(1.0 + c, 4.0).unwrap();
            for theta in [0.0, 1.0, 4.0] {
                let rotated = wrap_angle(theta + c);
                assert!((d.pdf(theta) - r.pdf(rotated)).abs() < 1e-12);
            }
        }
    }
}
