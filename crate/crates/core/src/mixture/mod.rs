//! Von Mises mixture models.
//!
//! EM fitting with random restarts, BIC-driven choice of the component
//! count, hard maximum-posterior cluster assignment and extraction of the
//! clock-time range each cluster covers.

mod assign;
mod em;
mod select;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circular::{CircularError, CircularSample, VonMises, KAPPA_CAP};

pub use assign::{assign_clusters, cluster_time_ranges, ClusterAssignment, HourRange};
pub use em::{bic, bic_value, em_fit, em_run, kappa_mle, log_likelihood, parameter_count, EmConfig, FitResult};
pub use select::{select_components, ComponentSelection, BIC_DECISIVE_IMPROVEMENT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixtureError {
    #[error("a {k}-component fit needs at least {need} points, got {got}")]
    InsufficientData { k: usize, need: usize, got: usize },

    #[error("component count must be at least 1")]
    ZeroComponents,

    #[error("mixture weights must be positive and sum to 1 (sum = {0})")]
    InvalidWeights(f64),

    #[error("every EM restart collapsed a component")]
    AllRestartsCollapsed,

    #[error("assignment has {assigned} entries but the sample has {sample}")]
    AssignmentMismatch { assigned: usize, sample: usize },

    #[error(transparent)]
    Circular(#[from] CircularError),
}

/// One weighted von Mises component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mu: f64,
    pub kappa: f64,
}

impl Component {
    pub fn distribution(&self) -> VonMises {
        VonMises::new(self.mu, self.kappa).expect("component parameters are validated on construction")
    }
}

/// Convex combination of von Mises densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Component>", into = "Vec<Component>")]
pub struct VonMisesMixture {
    components: Vec<Component>,
    #[serde(skip)]
    dists: Vec<VonMises>,
}

impl VonMisesMixture {
    pub const WEIGHT_TOLERANCE: f64 = 1e-9;

    pub fn new(components: Vec<Component>) -> Result<Self, MixtureError> {
        if components.is_empty() {
            return Err(MixtureError::ZeroComponents);
        }
        let sum: f64 = components.iter().map(|c| c.weight).sum();
        if (sum - 1.0).abs() > Self::WEIGHT_TOLERANCE || components.iter().any(|c| !(c.weight > 0.0)) {
            return Err(MixtureError::InvalidWeights(sum));
        }
        for c in &components {
            if !(0.0..TAU).contains(&c.mu) {
                return Err(CircularError::AngleOutOfRange(c.mu).into());
            }
            if !(0.0..=KAPPA_CAP).contains(&c.kappa) {
                return Err(CircularError::KappaOutOfRange(c.kappa).into());
            }
        }
        let dists = components
            .iter()
            .map(|c| VonMises::new(c.mu, c.kappa))
            .collect::<Result<_, _>>()?;
        Ok(Self { components, dists })
    }

    /// Single component.
    pub fn single(mu: f64, kappa: f64) -> Result<Self, MixtureError> {
        Self::new(vec![Component { weight: 1.0, mu, kappa }])
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn distributions(&self) -> &[VonMises] {
        &self.dists
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        self.components
            .iter()
            .zip(&self.dists)
            .map(|(c, d)| c.weight * d.pdf(theta))
            .sum()
    }

    /// `ln(α_j) + ln pdf_j(θ)` for every component.
    pub(crate) fn weighted_log_densities(&self, theta: f64, out: &mut [f64]) {
        for ((o, c), d) in out.iter_mut().zip(&self.components).zip(&self.dists) {
            *o = c.weight.ln() + d.ln_pdf(theta);
        }
    }

    /// Draws `n` angles: component by weight, then angle from that component.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R, n: usize) -> CircularSample {
        CircularSample::from_wrapped((0..n).map(|_| {
            let mut u: f64 = rng.random();
            let mut pick = self.components.len() - 1;
            for (j, c) in self.components.iter().enumerate() {
                if u < c.weight {
                    pick = j;
                    break;
                }
                u -= c.weight;
            }
            let c = self.components[pick];
            crate::circular::sample_von_mises(rng, c.mu, c.kappa)
        }))
    }
}

impl TryFrom<Vec<Component>> for VonMisesMixture {
    type Error = MixtureError;

    fn try_from(v: Vec<Component>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<VonMisesMixture> for Vec<Component> {
    fn from(m: VonMisesMixture) -> Self {
        m.components
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(VonMisesMixture::new(vec![]).is_err());
        let half = |mu| Component { weight: 0.5, mu, kappa: 1.0 };
        assert!(VonMisesMixture::new(vec![half(0.0), half(1.0)]).is_ok());
        assert!(VonMisesMixture::new(vec![half(0.0)]).is_err());
        assert!(VonMisesMixture::new(vec![half(0.0), half(TAU)]).is_err());
        let neg = Component { weight: -0.5, mu: 0.0, kappa: 1.0 };
        let big = Component { weight: 1.5, mu: 0.0, kappa: 1.0 };
        assert!(VonMisesMixture::new(vec![neg, big]).is_err());
        let hot = Component { weight: 1.0, mu: 0.0, kappa: 800.0 };
        assert!(VonMisesMixture::new(vec![hot]).is_err());
    }

    #[test]
    fn serde_roundtrip_rebuilds_distributions() {
        let m = VonMisesMixture::new(vec![
            Component { weight: 0.76, mu: 2.05, kappa: 3.85 },
            Component { weight: 0.24, mu: 5.94, kappa: 1.56 },
        ])
        .unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: VonMisesMixture = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!((back.pdf(2.0) - m.pdf(2.0)).abs() < 1e-15);
    }
}
