//! Choosing the number of components by BIC.

use serde::{Deserialize, Serialize};

use super::{em_fit, EmConfig, FitResult, MixtureError};
use crate::circular::CircularSample;

/// A BIC drop larger than this is treated as decisive evidence for the larger model.
pub const BIC_DECISIVE_IMPROVEMENT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSelection {
    pub chosen_k: usize,
    /// Fits for `k = 1, 2, ...` up to where the search stopped.
    pub fits: Vec<FitResult>,
}

impl ComponentSelection {
    pub fn chosen(&self) -> &FitResult {
        &self.fits[self.chosen_k - 1]
    }
}

/// Starts at one component and keeps adding one while BIC drops by more than
/// [`BIC_DECISIVE_IMPROVEMENT`], up to `k_max` (or until the sample is too
/// small for another component).
pub fn select_components(
    sample: &CircularSample,
    k_max: usize,
    config: &EmConfig,
) -> Result<ComponentSelection, MixtureError> {
    let k_max = k_max.max(1);
    let mut fits = vec![em_fit(sample, 1, config)?];
    let mut chosen_k = 1;
    for k in 2..=k_max {
        if sample.len() < 2 * k {
            break;
        }
        let fit = em_fit(sample, k, config)?;
        let improvement = fits[k - 2].bic - fit.bic;
        fits.push(fit);
        if improvement > BIC_DECISIVE_IMPROVEMENT {
            chosen_k = k;
        } else {
            break;
        }
    }
    Ok(ComponentSelection { chosen_k, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::sample_von_mises;
    use crate::mixture::{Component, VonMisesMixture};
    use crate::rng::stream_rng;
    use std::f64::consts::TAU;

    #[test]
    fn single_cluster_selects_one() {
        let mut rng = stream_rng(400, 0);
        let s = CircularSample::from_wrapped((0..400).map(|_| sample_von_mises(&mut rng, 2.0, 6.0)));
        let sel = select_components(&s, 5, &EmConfig { seed: 1, ..Default::default() }).unwrap();
        assert_eq!(sel.chosen_k, 1);
        assert_eq!(sel.fits.len(), 2);
    }

    #[test]
    fn three_separated_clusters_select_three() {
        let third = 1.0 / 3.0;
        let truth = VonMisesMixture::new(
            (0..3)
                .map(|j| Component {
                    weight: third,
                    mu: 0.5 + j as f64 * TAU / 3.0,
                    kappa: 12.0,
                })
                .collect(),
        )
        .unwrap();
        let s = truth.sample(&mut stream_rng(900, 0), 900);
        let sel = select_components(&s, 5, &EmConfig { seed: 2, ..Default::default() }).unwrap();
        assert_eq!(sel.chosen_k, 3);
        assert!(sel.fits[2].bic < sel.fits[1].bic - BIC_DECISIVE_IMPROVEMENT);
    }

    #[test]
    fn stops_when_sample_too_small() {
        let s = CircularSample::new(vec![0.1, 0.2, 3.0, 3.1, 3.2]).unwrap();
        let sel = select_components(&s, 5, &EmConfig::default()).unwrap();
        assert!(sel.fits.len() <= 2);
    }
}
