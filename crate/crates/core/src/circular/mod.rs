//! Circular statistics kernel.
//!
//! Angles are radians in `[0, 2π)`. The module provides descriptive
//! statistics, the von Mises density and distribution function, the two
//! pre-fit hypothesis tests (Rao's spacing test for uniformity, a circular
//! Hartigan dip test for unimodality) and Watson's U² goodness-of-fit test.

mod bessel;
mod dip;
mod quadrature;
mod rao;
mod sampling;
mod von_mises;
mod watson;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bessel::{bessel_i0, bessel_i0e, bessel_i1e, bessel_ratio, KAPPA_CAP};
pub use dip::{circular_dip, dip_statistic, dip_test, DIP_MIN_POINTS};
pub use rao::{rao_critical_value, rao_spacing_statistic, rao_spacing_test, RAO_MIN_POINTS, RAO_REPLICATES};
pub use sampling::{sample_uniform_angle, sample_von_mises};
pub use von_mises::{von_mises_cdf, von_mises_pdf, VonMises, VonMisesCdf};
pub use watson::{
    watson_u2_statistic, watson_u2_test, watson_u2_test_with_critical, WATSON_CRITICAL_ALPHA_001,
    WATSON_MIN_POINTS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircularError {
    #[error("angle {0} is outside [0, 2π)")]
    AngleOutOfRange(f64),

    #[error("concentration {0} is outside [0, {cap}]", cap = KAPPA_CAP)]
    KappaOutOfRange(f64),

    #[error("{test} needs at least {need} points, got {got}")]
    TooFewPoints {
        test: &'static str,
        need: usize,
        got: usize,
    },

    #[error("significance level {0} is outside (0, 1)")]
    InvalidAlpha(f64),

    #[error("no tabulated {test} critical value for alpha {alpha}; use the bootstrap mode")]
    UntabulatedAlpha { test: &'static str, alpha: f64 },

    #[error("bootstrap needs at least 1 replicate")]
    NoReplicates,
}

/// Reduces any finite angle to `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// A multiset of angles in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CircularSample(Vec<f64>);

impl CircularSample {
    /// Validates that every angle lies in `[0, 2π)`.
    pub fn new(angles: Vec<f64>) -> Result<Self, CircularError> {
        if let Some(bad) = angles.iter().find(|a| !(0.0..TAU).contains(*a)) {
            return Err(CircularError::AngleOutOfRange(*bad));
        }
        Ok(Self(angles))
    }

    /// Wraps arbitrary finite angles into `[0, 2π)`.
    pub fn from_wrapped(angles: impl IntoIterator<Item = f64>) -> Self {
        Self(angles.into_iter().map(wrap_angle).collect())
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Angles sorted ascending.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Every angle shifted by `c` (mod 2π), order preserved.
    pub fn rotated(&self, c: f64) -> Self {
        Self::from_wrapped(self.0.iter().map(|a| a + c))
    }

    /// Sub-sample at the given indices.
    pub fn select(&self, indices: impl IntoIterator<Item = usize>) -> Self {
        Self(indices.into_iter().map(|i| self.0[i]).collect())
    }

    pub(crate) fn require(&self, test: &'static str, need: usize) -> Result<(), CircularError> {
        if self.0.len() < need {
            return Err(CircularError::TooFewPoints {
                test,
                need,
                got: self.0.len(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for CircularSample {
    type Error = CircularError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<CircularSample> for Vec<f64> {
    fn from(s: CircularSample) -> Self {
        s.0
    }
}

/// Mean direction and mean resultant length of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanResultant {
    /// `None` when the resultant vanishes and the direction is undefined.
    pub direction: Option<f64>,
    pub length: f64,
}

/// Resultant lengths below this are treated as zero.
pub const DEGENERATE_RESULTANT: f64 = 1e-12;

pub fn mean_resultant(sample: &CircularSample) -> MeanResultant {
    let n = sample.len();
    if n == 0 {
        return MeanResultant {
            direction: None,
            length: 0.0,
        };
    }
    let (s, c) = sample
        .angles()
        .iter()
        .fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    resultant_from_sums(s / n as f64, c / n as f64)
}

pub(crate) fn resultant_from_sums(mean_sin: f64, mean_cos: f64) -> MeanResultant {
    let length = mean_sin.hypot(mean_cos).min(1.0);
    let direction = (length >= DEGENERATE_RESULTANT).then(|| wrap_angle(mean_sin.atan2(mean_cos)));
    MeanResultant { direction, length }
}

/// Which hypothesis test produced a [`TestResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    RaoSpacing,
    HartiganDip,
    WatsonU2,
    ChiSquaredYates,
    ChiSquared,
    FisherExact,
    MonteCarloExact,
}

/// What the statistic is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Evidence {
    /// Reject when the statistic exceeds this value.
    CriticalValue(f64),
    /// Reject when this p-value is below alpha.
    PValue(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: TestMethod,
    pub statistic: f64,
    pub evidence: Evidence,
    pub alpha: f64,
    pub reject_null: bool,
}

impl TestResult {
    pub fn with_critical(method: TestMethod, statistic: f64, critical: f64, alpha: f64) -> Self {
        Self {
            method,
            statistic,
            evidence: Evidence::CriticalValue(critical),
            alpha,
            reject_null: statistic > critical,
        }
    }

    pub fn with_p_value(method: TestMethod, statistic: f64, p: f64, alpha: f64) -> Self {
        Self {
            method,
            statistic,
            evidence: Evidence::PValue(p),
            alpha,
            reject_null: p < alpha,
        }
    }

    pub fn p_value(&self) -> Option<f64> {
        match self.evidence {
            Evidence::PValue(p) => Some(p),
            Evidence::CriticalValue(_) => None,
        }
    }

    pub fn critical_value(&self) -> Option<f64> {
        match self.evidence {
            Evidence::CriticalValue(c) => Some(c),
            Evidence::PValue(_) => None,
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), CircularError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CircularError::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Upper `1 - alpha` empirical quantile of a set of replicate statistics.
pub(crate) fn upper_quantile(mut values: Vec<f64>, alpha: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let b = values.len();
    let idx = ((1.0 - alpha) * b as f64).ceil() as usize;
    values[idx.clamp(1, b) - 1]
}
