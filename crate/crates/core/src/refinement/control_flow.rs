//! Directly-follows contingency tests between refined label variants.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::factorial::ln_factorial;

use crate::circular::{TestMethod, TestResult};
use crate::event_log::{EventLog, Label};
use crate::rng::stream_rng;

/// Expected cell count under which the chi-squared approximation is replaced by an exact test.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

/// Contingency test of one other activity against the refined variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityTest {
    pub activity: Label,
    /// Per variant: `[followed by activity, not followed]`.
    pub table: Vec<[u64; 2]>,
    /// `None` when a margin of the table is zero.
    pub result: Option<TestResult>,
}

impl ActivityTest {
    pub fn significant(&self) -> bool {
        self.result.as_ref().is_some_and(|r| r.reject_null)
    }
}

/// Tests, for every activity outside `original` and its `variants`, whether
/// the chance that the activity directly follows an event depends on the
/// variant the event carries.
///
/// 2×2 tables use Yates-corrected chi-squared, or Fisher's exact test when an
/// expected count is below 5. Larger tables use Pearson chi-squared, or a
/// seeded Monte Carlo permutation test with `replicates` draws when an
/// expected count is below 5.
pub fn control_flow_significance(
    log: &EventLog,
    original: &Label,
    variants: &[Label],
    alpha: f64,
    replicates: usize,
    seed: u64,
) -> Vec<ActivityTest> {
    let index: HashMap<&Label, usize> = variants.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut totals = vec![0u64; variants.len()];
    let mut followed: BTreeMap<&Label, Vec<u64>> = BTreeMap::new();
    for trace in log.traces() {
        for (i, e) in trace.events.iter().enumerate() {
            let Some(&v) = index.get(&e.label) else { continue };
            totals[v] += 1;
            if let Some(next) = trace.events.get(i + 1) {
                followed.entry(&next.label).or_insert_with(|| vec![0; variants.len()])[v] += 1;
            }
        }
    }
    let excluded: BTreeSet<&Label> = variants.iter().chain([original]).collect();
    let others: Vec<&Label> = log.alphabet().iter().filter(|a| !excluded.contains(a)).collect();
    others
        .par_iter()
        .enumerate()
        .map(|(i, &activity)| {
            let hits = followed.get(activity).cloned().unwrap_or_else(|| vec![0; variants.len()]);
            let table: Vec<[u64; 2]> = hits.iter().zip(&totals).map(|(&h, &t)| [h, t - h]).collect();
            let result = independence_test(&table, alpha, replicates, crate::rng::derive_seed(seed, i as u64));
            ActivityTest {
                activity: activity.clone(),
                table,
                result,
            }
        })
        .collect()
}

/// Independence test on an `m × 2` table; `None` when a margin is zero.
pub fn independence_test(table: &[[u64; 2]], alpha: f64, replicates: usize, seed: u64) -> Option<TestResult> {
    let rows: Vec<u64> = table.iter().map(|r| r[0] + r[1]).collect();
    let cols = [table.iter().map(|r| r[0]).sum::<u64>(), table.iter().map(|r| r[1]).sum::<u64>()];
    if table.len() < 2 || rows.contains(&0) || cols.contains(&0) {
        return None;
    }
    let n = (cols[0] + cols[1]) as f64;
    let small = rows
        .iter()
        .any(|&r| cols.iter().any(|&c| (r as f64) * (c as f64) / n < MIN_EXPECTED_COUNT));
    let dof = (table.len() - 1) as f64;
    let chi2_p = |stat: f64| 1.0 - ChiSquared::new(dof).expect("positive degrees of freedom").cdf(stat);
    Some(match (table.len(), small) {
        (2, true) => {
            let p = fisher_exact(table);
            TestResult::with_p_value(TestMethod::FisherExact, table[0][0] as f64, p, alpha)
        }
        (2, false) => {
            let stat = pearson(table, &rows, &cols, true);
            TestResult::with_p_value(TestMethod::ChiSquaredYates, stat, chi2_p(stat), alpha)
        }
        (_, false) => {
            let stat = pearson(table, &rows, &cols, false);
            TestResult::with_p_value(TestMethod::ChiSquared, stat, chi2_p(stat), alpha)
        }
        (_, true) => {
            let stat = pearson(table, &rows, &cols, false);
            let p = permutation_p(&rows, &cols, stat, replicates.max(1), seed);
            TestResult::with_p_value(TestMethod::MonteCarloExact, stat, p, alpha)
        }
    })
}

fn pearson(table: &[[u64; 2]], rows: &[u64], cols: &[u64; 2], yates: bool) -> f64 {
    let n = (cols[0] + cols[1]) as f64;
    table
        .iter()
        .zip(rows)
        .flat_map(|(r, &rt)| (0..2).map(move |j| (r[j] as f64, rt as f64 * cols[j] as f64 / n)))
        .map(|(o, e)| {
            let d = (o - e).abs();
            let d = if yates { (d - 0.5).max(0.0) } else { d };
            d * d / e
        })
        .sum()
}

/// Two-sided Fisher exact p-value: total probability of tables with the same
/// margins that are no more likely than the observed one.
pub fn fisher_exact(table: &[[u64; 2]]) -> f64 {
    let (a, b, c, d) = (table[0][0], table[0][1], table[1][0], table[1][1]);
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let n = r1 + r2;
    let lf = |x: u64| ln_factorial(x);
    let fixed = lf(r1) + lf(r2) + lf(c1) + lf(n - c1) - lf(n);
    let ln_p = |x: u64| fixed - lf(x) - lf(r1 - x) - lf(c1 - x) - lf(r2 + x - c1);
    let observed = ln_p(a);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    (lo..=hi)
        .map(ln_p)
        .filter(|&lp| lp <= observed + 1e-7)
        .map(f64::exp)
        .sum::<f64>()
        .min(1.0)
}

/// `(1 + #{X² ≥ observed}) / (B + 1)` over random tables with the observed margins.
fn permutation_p(rows: &[u64], cols: &[u64; 2], observed: f64, replicates: usize, seed: u64) -> f64 {
    let exceed = (0..replicates)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = stream_rng(seed, r as u64);
            let mut flags: Vec<bool> = (0..cols[0] + cols[1]).map(|i| i < cols[0]).collect();
            flags.shuffle(&mut rng);
            let mut start = 0usize;
            let table: Vec<[u64; 2]> = rows
                .iter()
                .map(|&rt| {
                    let chunk = &flags[start..start + rt as usize];
                    start += rt as usize;
                    let hit = chunk.iter().filter(|&&f| f).count() as u64;
                    [hit, rt - hit]
                })
                .collect();
            pearson(&table, rows, cols, false) >= observed - 1e-9
        })
        .count();
    (1 + exceed) as f64 / (replicates + 1) as f64
}
