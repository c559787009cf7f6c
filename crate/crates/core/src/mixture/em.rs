//! Expectation-maximization for von Mises mixtures.
//!
//! E-step: posterior responsibilities from the weighted component densities
//! (log-sum-exp). M-step: weight = mean responsibility, mean direction =
//! responsibility-weighted circular mean, concentration = inverse of
//! `A(κ) = I1(κ)/I0(κ)` at the weighted mean resultant length.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Component, MixtureError, VonMisesMixture};
use crate::circular::{
    bessel_i0e, bessel_ratio, mean_resultant, resultant_from_sums, wrap_angle, CircularSample,
    DEGENERATE_RESULTANT, KAPPA_CAP,
};
use crate::rng::{derive_seed, stream_rng};

/// Responsibility mass below which a component counts as collapsed.
const COLLAPSE_MASS: f64 = 1e-12;
/// Fresh initializations tried per restart slot before giving up on it.
const REINIT_ATTEMPTS: u64 = 4;
const NEWTON_STEPS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub restarts: usize,
    /// Relative log-likelihood improvement below which a run has converged.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            tol: 1e-8,
            max_iter: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: VonMisesMixture,
    pub log_likelihood: f64,
    pub bic: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after initialization and after every EM iteration.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

/// Free parameters of a `k`-component mixture: `k − 1` weights, `k` means, `k` concentrations.
pub fn parameter_count(k: usize) -> usize {
    3 * k - 1
}

pub fn bic_value(log_likelihood: f64, k: usize, n: usize) -> f64 {
    -2.0 * log_likelihood + parameter_count(k) as f64 * (n as f64).ln()
}

/// BIC of a fit on `n` points; lower is better.
pub fn bic(fit: &FitResult, n: usize) -> f64 {
    bic_value(fit.log_likelihood, fit.model.k(), n)
}

pub fn log_likelihood(model: &VonMisesMixture, sample: &CircularSample) -> f64 {
    let mut buf = vec![0.0; model.k()];
    sample
        .angles()
        .iter()
        .map(|&theta| {
            model.weighted_log_densities(theta, &mut buf);
            log_sum_exp(&buf)
        })
        .sum()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Maximum-likelihood concentration for mean resultant length `r`.
///
/// Closed-form approximation `r(2 − r²)/(1 − r²)` polished by Newton steps
/// on `A(κ) − r = 0`, clamped to `[0, KAPPA_CAP]`.
pub fn kappa_mle(r: f64) -> f64 {
    if !(r >= DEGENERATE_RESULTANT) {
        return 0.0;
    }
    if r >= 1.0 - 1e-12 {
        return KAPPA_CAP;
    }
    let mut kappa = (r * (2.0 - r * r) / (1.0 - r * r)).min(KAPPA_CAP);
    for _ in 0..NEWTON_STEPS {
        let a = bessel_ratio(kappa);
        let slope = if kappa < 1e-8 { 0.5 } else { 1.0 - a / kappa - a * a };
        if !(slope > 0.0) {
            break;
        }
        let next = (kappa - (a - r) / slope).clamp(0.0, KAPPA_CAP);
        let done = (next - kappa).abs() <= 1e-13 * kappa.max(1.0);
        kappa = next;
        if done {
            break;
        }
    }
    kappa
}

#[derive(Clone)]
struct Params {
    weight: Vec<f64>,
    mu: Vec<f64>,
    kappa: Vec<f64>,
}

impl Params {
    fn from_mixture(m: &VonMisesMixture) -> Self {
        Self {
            weight: m.components().iter().map(|c| c.weight).collect(),
            mu: m.components().iter().map(|c| c.mu).collect(),
            kappa: m.components().iter().map(|c| c.kappa).collect(),
        }
    }

    fn into_mixture(self) -> VonMisesMixture {
        let total: f64 = self.weight.iter().sum();
        let mut comps: Vec<Component> = (0..self.weight.len())
            .map(|j| Component {
                weight: self.weight[j] / total,
                mu: wrap_angle(self.mu[j]),
                kappa: self.kappa[j],
            })
            .collect();
        // largest component first; ties by mean direction
        comps.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.mu.total_cmp(&b.mu)));
        VonMisesMixture::new(comps).expect("EM keeps parameters inside their domains")
    }
}

/// Fills `resp` (row-major, n × k) and returns the log-likelihood.
fn e_step(trig: &[(f64, f64)], p: &Params, resp: &mut [f64]) -> f64 {
    let k = p.weight.len();
    let offset: Vec<f64> = (0..k)
        .map(|j| p.weight[j].ln() - (TAU * bessel_i0e(p.kappa[j])).ln() - p.kappa[j])
        .collect();
    let kc: Vec<f64> = (0..k).map(|j| p.kappa[j] * p.mu[j].cos()).collect();
    let ks: Vec<f64> = (0..k).map(|j| p.kappa[j] * p.mu[j].sin()).collect();
    let mut ll = 0.0;
    for (row, &(c, s)) in resp.chunks_exact_mut(k).zip(trig) {
        for j in 0..k {
            row[j] = offset[j] + kc[j] * c + ks[j] * s;
        }
        let lse = log_sum_exp(row);
        for r in row.iter_mut() {
            *r = (*r - lse).exp();
        }
        ll += lse;
    }
    ll
}

fn m_step(trig: &[(f64, f64)], resp: &[f64], prev: &Params) -> Option<Params> {
    let k = prev.weight.len();
    let n = trig.len() as f64;
    let mut mass = vec![0.0; k];
    let mut sum_cos = vec![0.0; k];
    let mut sum_sin = vec![0.0; k];
    for (row, &(c, s)) in resp.chunks_exact(k).zip(trig) {
        for j in 0..k {
            mass[j] += row[j];
            sum_cos[j] += row[j] * c;
            sum_sin[j] += row[j] * s;
        }
    }
    let mut next = prev.clone();
    for j in 0..k {
        if mass[j] < COLLAPSE_MASS {
            return None;
        }
        next.weight[j] = mass[j] / n;
        let res = resultant_from_sums(sum_sin[j] / mass[j], sum_cos[j] / mass[j]);
        if let Some(d) = res.direction {
            next.mu[j] = d;
        }
        next.kappa[j] = kappa_mle(res.length);
    }
    Some(next)
}

/// A single EM run from a given starting mixture.
///
/// Fails with [`MixtureError::AllRestartsCollapsed`] if a component loses
/// all responsibility mass.
pub fn em_run(sample: &CircularSample, init: &VonMisesMixture, config: &EmConfig) -> Result<FitResult, MixtureError> {
    let trig: Vec<(f64, f64)> = sample.angles().iter().map(|a| (a.cos(), a.sin())).collect();
    let k = init.k();
    let mut resp = vec![0.0; trig.len() * k];
    let mut params = Params::from_mixture(init);
    let mut ll = e_step(&trig, &params, &mut resp);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        params = m_step(&trig, &resp, &params).ok_or(MixtureError::AllRestartsCollapsed)?;
        let next = e_step(&trig, &params, &mut resp);
        iterations += 1;
        trace.push(next);
        let improvement = next - ll;
        ll = next;
        if improvement <= config.tol * ll.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    let model = params.into_mixture();
    Ok(FitResult {
        bic: bic_value(ll, k, sample.len()),
        model,
        log_likelihood: ll,
        iterations,
        converged,
        trace,
    })
}

fn random_init<R: Rng>(sample: &CircularSample, k: usize, rng: &mut R) -> VonMisesMixture {
    let picks = rand::seq::index::sample(rng, sample.len(), k);
    let comps = picks
        .iter()
        .map(|i| Component {
            weight: 1.0 / k as f64,
            mu: sample.angles()[i],
            kappa: 1.0,
        })
        .collect();
    VonMisesMixture::new(comps).expect("uniform weights and sample means are valid")
}

fn single_component_fit(sample: &CircularSample) -> FitResult {
    let res = mean_resultant(sample);
    let model = VonMisesMixture::single(res.direction.unwrap_or(0.0), kappa_mle(res.length))
        .expect("closed-form estimates are in range");
    let ll = super::log_likelihood(&model, sample);
    FitResult {
        bic: bic_value(ll, 1, sample.len()),
        model,
        log_likelihood: ll,
        iterations: 1,
        converged: true,
        trace: vec![ll],
    }
}

/// Best of `config.restarts` EM runs with means initialized at random sample points.
///
/// `k = 1` is solved in closed form. Restarts run in parallel, each on its
/// own random stream, so the result depends only on `(sample, k, config)`.
pub fn em_fit(sample: &CircularSample, k: usize, config: &EmConfig) -> Result<FitResult, MixtureError> {
    if k == 0 {
        return Err(MixtureError::ZeroComponents);
    }
    if sample.len() < 2 * k {
        return Err(MixtureError::InsufficientData {
            k,
            need: 2 * k,
            got: sample.len(),
        });
    }
    if k == 1 {
        return Ok(single_component_fit(sample));
    }
    let seed = derive_seed(config.seed, k as u64);
    let runs: Vec<(usize, FitResult)> = (0..config.restarts.max(1))
        .into_par_iter()
        .filter_map(|r| {
            (0..REINIT_ATTEMPTS).find_map(|attempt| {
                let mut rng = stream_rng(seed, r as u64 * REINIT_ATTEMPTS + attempt);
                let init = random_init(sample, k, &mut rng);
                em_run(sample, &init, config).ok().map(|fit| (r, fit))
            })
        })
        .collect();
    runs.into_iter()
        .reduce(|best, cand| {
            if cand.1.log_likelihood > best.1.log_likelihood {
                cand
            } else {
                best
            }
        })
        .map(|(_, fit)| fit)
        .ok_or(MixtureError::AllRestartsCollapsed)
}
