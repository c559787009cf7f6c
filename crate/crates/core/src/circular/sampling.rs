//! Random angle generation.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use super::wrap_angle;

pub fn sample_uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    wrap_angle(rng.random::<f64>() * TAU)
}

/// Best–Fisher rejection sampler for the von Mises distribution.
pub fn sample_von_mises<R: Rng + ?Sized>(rng: &mut R, mu: f64, kappa: f64) -> f64 {
    if kappa < 1e-8 {
        return sample_uniform_angle(rng);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let offset = f.clamp(-1.0, 1.0).acos();
            let theta = if u3 > 0.5 { mu + offset } else { mu - offset };
            return wrap_angle(theta);
        }
    }
}
