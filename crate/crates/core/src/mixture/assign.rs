//! Hard cluster assignment and clock-time ranges.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{MixtureError, VonMisesMixture};
use crate::circular::CircularSample;

/// Circular interval of clock time in hours; wraps midnight when `start > end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourRange {
    pub start: f64,
    pub end: f64,
}

impl HourRange {
    pub fn wraps_midnight(&self) -> bool {
        self.start > self.end
    }

    pub fn contains(&self, hour: f64) -> bool {
        if self.wraps_midnight() {
            hour >= self.start || hour <= self.end
        } else {
            (self.start..=self.end).contains(&hour)
        }
    }

    /// Length in hours going clockwise from `start` to `end`.
    pub fn span(&self) -> f64 {
        (self.end - self.start).rem_euclid(24.0)
    }
}

impl fmt::Display for HourRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.2}-{:.2}]", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub k: usize,
    /// Cluster index of each sample point, in sample order.
    pub clusters: Vec<usize>,
    /// Time range per cluster; `None` for clusters that received no points.
    pub ranges: Vec<Option<HourRange>>,
}

impl ClusterAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.clusters {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.clusters
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| (c == cluster).then_some(i))
            .collect()
    }

    pub fn non_empty(&self) -> usize {
        self.sizes().iter().filter(|&&s| s > 0).count()
    }
}

/// Maximum-posterior assignment: argmax of `α_j · pdf_j(θ)`, ties to the lowest index.
pub fn assign_clusters(model: &VonMisesMixture, sample: &CircularSample) -> ClusterAssignment {
    let mut buf = vec![0.0; model.k()];
    let clusters: Vec<usize> = sample
        .angles()
        .iter()
        .map(|&theta| {
            model.weighted_log_densities(theta, &mut buf);
            let mut best = 0;
            for j in 1..buf.len() {
                if buf[j] > buf[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    let ranges = ranges_for(&clusters, model.k(), sample);
    ClusterAssignment {
        k: model.k(),
        clusters,
        ranges,
    }
}

/// Tightest circular interval holding each cluster's points: the complement
/// of the cluster's largest circular gap, reported in hours.
pub fn cluster_time_ranges(
    assignment: &ClusterAssignment,
    sample: &CircularSample,
) -> Result<Vec<Option<HourRange>>, MixtureError> {
    if assignment.clusters.len() != sample.len() {
        return Err(MixtureError::AssignmentMismatch {
            assigned: assignment.clusters.len(),
            sample: sample.len(),
        });
    }
    Ok(ranges_for(&assignment.clusters, assignment.k, sample))
}

fn ranges_for(clusters: &[usize], k: usize, sample: &CircularSample) -> Vec<Option<HourRange>> {
    let mut per: Vec<Vec<f64>> = vec![Vec::new(); k];
    for (&c, &a) in clusters.iter().zip(sample.angles()) {
        per[c].push(a);
    }
    per.into_iter().map(|pts| tightest_range(pts)).collect()
}

fn tightest_range(mut pts: Vec<f64>) -> Option<HourRange> {
    if pts.is_empty() {
        return None;
    }
    pts.sort_by(f64::total_cmp);
    let n = pts.len();
    // (gap, index of the point after the gap); the wrap gap comes first
    let mut best = (pts[0] + TAU - pts[n - 1], 0usize);
    for i in 1..n {
        let gap = pts[i] - pts[i - 1];
        if gap > best.0 {
            best = (gap, i);
        }
    }
    let start = pts[best.1];
    let end = pts[(best.1 + n - 1) % n];
    Some(HourRange {
        start: to_hours(start),
        end: to_hours(end),
    })
}

fn to_hours(angle: f64) -> f64 {
    (angle * 12.0 / PI).min(24.0 - f64::EPSILON * 24.0)
}
