//! Time-based label refinement.
//!
//! Each label runs through three stages: uniformity and unimodality gates on
//! its clock-time sample, a von Mises mixture fit with BIC-chosen component
//! count, and validation of the fitted clusters (Watson U² goodness of fit
//! and directly-follows control-flow tests on the relabeled log).

mod control_flow;
mod iterate;

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circular::{
    dip_test, mean_resultant, rao_spacing_test, sample_von_mises, upper_quantile, watson_u2_statistic,
    watson_u2_test, watson_u2_test_with_critical, CircularError, CircularSample, TestResult, VonMises,
    WATSON_MIN_POINTS,
};
use crate::event_log::{relabel, EventLog, Label, Relabeling};
use crate::mixture::{
    assign_clusters, kappa_mle, select_components, ClusterAssignment, Component, ComponentSelection, EmConfig, HourRange,
    MixtureError,
};
use crate::rng::{derive_seed, fnv1a, stream_rng};

pub use control_flow::{control_flow_significance, fisher_exact, independence_test, ActivityTest, MIN_EXPECTED_COUNT};
pub use iterate::{refine_iteratively, IterativeOutcome, Round};

#[derive(Debug, Error)]
pub enum RefinementError {
    #[error("label {0:?} does not occur in the log")]
    LabelNotFound(Label),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("assignment for {label:?} covers {got} events but the label has {expected}")]
    AssignmentMismatch { label: Label, expected: usize, got: usize },

    #[error("refined label {0:?} already exists in the log")]
    LabelCollision(Label),

    #[error(transparent)]
    Circular(#[from] CircularError),

    #[error(transparent)]
    Mixture(#[from] MixtureError),
}

/// How the Watson U² critical value for each cluster is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum WatsonMode {
    /// Tabulated value for a von Mises fit; requires `alpha_watson = 0.01`.
    Tabulated,
    /// Parametric bootstrap from the fitted component with re-estimated parameters.
    Bootstrap { replicates: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub alpha_uniformity: f64,
    pub alpha_unimodality: f64,
    pub alpha_watson: f64,
    pub alpha_controlflow: f64,
    pub k_max: usize,
    pub em: EmConfig,
    pub dip_replicates: usize,
    pub watson_mode: WatsonMode,
    /// Reject a refinement when a cluster fails the Watson test.
    pub watson_gate: bool,
    /// Replicates of the permutation test for sparse contingency tables.
    pub controlflow_replicates: usize,
    /// Labels with fewer events are skipped.
    pub min_events: usize,
    pub max_rounds: usize,
    pub max_refinements_per_round: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alpha_uniformity: 0.01,
            alpha_unimodality: 0.01,
            alpha_watson: 0.01,
            alpha_controlflow: 0.01,
            k_max: 5,
            em: EmConfig::default(),
            dip_replicates: 1000,
            watson_mode: WatsonMode::Tabulated,
            watson_gate: false,
            controlflow_replicates: 10_000,
            min_events: 20,
            max_rounds: 5,
            max_refinements_per_round: 1,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), RefinementError> {
        let alphas = [
            ("alpha_uniformity", self.alpha_uniformity),
            ("alpha_unimodality", self.alpha_unimodality),
            ("alpha_watson", self.alpha_watson),
            ("alpha_controlflow", self.alpha_controlflow),
        ];
        for (name, a) in alphas {
            if !(a > 0.0 && a < 1.0) {
                return Err(RefinementError::Config(format!("{name} = {a} is not in (0, 1)")));
            }
        }
        if self.k_max < 2 {
            return Err(RefinementError::Config(format!("k_max = {} must be at least 2", self.k_max)));
        }
        if self.watson_mode == WatsonMode::Tabulated && (self.alpha_watson - 0.01).abs() > 1e-12 {
            return Err(RefinementError::Config(format!(
                "alpha_watson = {} has no tabulated critical value; use the bootstrap mode",
                self.alpha_watson
            )));
        }
        let counts = [
            ("dip_replicates", self.dip_replicates),
            ("controlflow_replicates", self.controlflow_replicates),
            ("em.restarts", self.em.restarts),
            ("em.max_iter", self.em.max_iter),
            ("max_refinements_per_round", self.max_refinements_per_round),
        ];
        for (name, c) in counts {
            if c == 0 {
                return Err(RefinementError::Config(format!("{name} must be positive")));
            }
        }
        if let WatsonMode::Bootstrap { replicates: 0 } = self.watson_mode {
            return Err(RefinementError::Config("watson bootstrap replicates must be positive".into()));
        }
        Ok(())
    }

    /// Seed for everything random in the analysis of `label`.
    pub fn label_seed(&self, label: &Label) -> u64 {
        derive_seed(self.seed, fnv1a(label.as_str().as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    Uniform,
    Unimodal,
    SingleComponent,
    WatsonFail,
    NoControlflowDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "outcome", content = "reason")]
pub enum Decision {
    Refined,
    Rejected(RejectReason),
    /// Too few events to analyze.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub refined_label: Label,
    pub component: Component,
    pub size: usize,
    pub range: Option<HourRange>,
    /// `None` when the cluster is too small to test.
    pub watson: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub label: Label,
    pub n_events: usize,
    pub seed: u64,
    pub rao: Option<TestResult>,
    pub dip: Option<TestResult>,
    pub selection: Option<ComponentSelection>,
    pub clusters: Vec<ClusterReport>,
    pub control_flow: Vec<ActivityTest>,
    pub significant_activities: usize,
    pub decision: Decision,
    /// Hard assignment of the label's events (ascending id order).
    #[serde(skip)]
    pub assignment: Option<ClusterAssignment>,
}

impl RefinementReport {
    fn new(label: &Label, n_events: usize, seed: u64) -> Self {
        Self {
            label: label.clone(),
            n_events,
            seed,
            rao: None,
            dip: None,
            selection: None,
            clusters: Vec::new(),
            control_flow: Vec::new(),
            significant_activities: 0,
            decision: Decision::Skipped,
            assignment: None,
        }
    }

    fn rejected(mut self, reason: RejectReason) -> Self {
        self.decision = Decision::Rejected(reason);
        self
    }

    pub fn is_refined(&self) -> bool {
        self.decision == Decision::Refined
    }

    pub fn refined_labels(&self) -> Vec<Label> {
        self.clusters
            .iter()
            .filter(|c| c.size > 0)
            .map(|c| c.refined_label.clone())
            .collect()
    }
}

/// Clock-time sample of the events carrying `label`, in ascending id order.
pub fn label_sample(log: &EventLog, label: &Label) -> CircularSample {
    CircularSample::from_wrapped(log.events_with_label(label).iter().map(|e| e.angle()))
}

/// Runs the three-stage analysis on one label; a failed gate stops the analysis.
pub fn analyze_label(log: &EventLog, label: &Label, config: &PipelineConfig) -> Result<RefinementReport, RefinementError> {
    config.validate()?;
    if !log.alphabet().contains(label) {
        return Err(RefinementError::LabelNotFound(label.clone()));
    }
    let sample = label_sample(log, label);
    let seed = config.label_seed(label);
    let mut report = RefinementReport::new(label, sample.len(), seed);
    if sample.len() < config.min_events.max(WATSON_MIN_POINTS) {
        return Ok(report);
    }

    let rao = rao_spacing_test(&sample, config.alpha_uniformity)?;
    let uniform = !rao.reject_null;
    report.rao = Some(rao);
    if uniform {
        return Ok(report.rejected(RejectReason::Uniform));
    }

    let dip = dip_test(&sample, config.alpha_unimodality, config.dip_replicates, derive_seed(seed, 1))?;
    let unimodal = !dip.reject_null;
    report.dip = Some(dip);
    if unimodal {
        return Ok(report.rejected(RejectReason::Unimodal));
    }

    let em = EmConfig { seed: derive_seed(seed, 2), ..config.em };
    let selection = select_components(&sample, config.k_max, &em)?;
    let model = selection.chosen().model.clone();
    report.selection = Some(selection);
    let assignment = assign_clusters(&model, &sample);
    if assignment.non_empty() < 2 {
        return Ok(report.rejected(RejectReason::SingleComponent));
    }

    let names = refined_names(label, &assignment);
    let sizes = assignment.sizes();
    for (j, (component, dist)) in model.components().iter().zip(model.distributions()).enumerate() {
        let members = sample.select(assignment.members(j));
        let watson = if members.len() >= WATSON_MIN_POINTS {
            Some(watson_for_cluster(&members, dist, config, derive_seed(seed, 3 + j as u64))?)
        } else {
            None
        };
        report.clusters.push(ClusterReport {
            refined_label: names[j].clone(),
            component: *component,
            size: sizes[j],
            range: assignment.ranges[j],
            watson,
        });
    }
    let watson_failed = report.clusters.iter().any(|c| c.watson.as_ref().is_some_and(|w| w.reject_null));
    if config.watson_gate && watson_failed {
        report.assignment = Some(assignment);
        return Ok(report.rejected(RejectReason::WatsonFail));
    }

    let (refined_log, _) = apply_refinement(log, label, &assignment)?;
    let variants = report.refined_labels();
    report.control_flow = control_flow_significance(
        &refined_log,
        label,
        &variants,
        config.alpha_controlflow,
        config.controlflow_replicates,
        derive_seed(seed, 100),
    );
    report.significant_activities = report.control_flow.iter().filter(|t| t.significant()).count();
    report.assignment = Some(assignment);
    if report.significant_activities == 0 {
        return Ok(report.rejected(RejectReason::NoControlflowDifference));
    }
    report.decision = Decision::Refined;
    Ok(report)
}

/// Analyzes every label of the log in parallel, in alphabet order.
pub fn analyze_all(log: &EventLog, config: &PipelineConfig) -> Result<Vec<RefinementReport>, RefinementError> {
    config.validate()?;
    let labels: Vec<&Label> = log.alphabet().iter().collect();
    labels.par_iter().map(|l| analyze_label(log, l, config)).collect()
}

fn watson_for_cluster(
    members: &CircularSample,
    dist: &VonMises,
    config: &PipelineConfig,
    seed: u64,
) -> Result<TestResult, RefinementError> {
    let table = dist.cdf_table();
    let cdf = |a: f64| table.cdf(a);
    Ok(match config.watson_mode {
        WatsonMode::Tabulated => watson_u2_test(members, cdf, config.alpha_watson)?,
        WatsonMode::Bootstrap { replicates } => {
            let critical = watson_bootstrap_critical(dist, members.len(), config.alpha_watson, replicates, seed)?;
            watson_u2_test_with_critical(members, cdf, config.alpha_watson, critical)?
        }
    })
}

/// Upper `alpha` quantile of U² for samples of size `n` from `dist`, each
/// compared against its own re-estimated von Mises fit.
pub fn watson_bootstrap_critical(
    dist: &VonMises,
    n: usize,
    alpha: f64,
    replicates: usize,
    seed: u64,
) -> Result<f64, RefinementError> {
    if replicates == 0 {
        return Err(CircularError::NoReplicates.into());
    }
    let stats: Result<Vec<f64>, CircularError> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let s = CircularSample::from_wrapped((0..n).map(|_| sample_von_mises(&mut rng, dist.mu(), dist.kappa())));
            let mr = mean_resultant(&s);
            let fit = VonMises::new(mr.direction.unwrap_or(0.0), kappa_mle(mr.length))?.cdf_table();
            Ok(watson_u2_statistic(&s, |a| fit.cdf(a)))
        })
        .collect();
    Ok(upper_quantile(stats?, alpha))
}

/// `"<label>@[start-end]"` per cluster; empty clusters get their index instead of a range.
fn refined_names(label: &Label, assignment: &ClusterAssignment) -> Vec<Label> {
    let mut seen = BTreeSet::new();
    assignment
        .ranges
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let base = match r {
                Some(r) => format!("{label}@{r}"),
                None => format!("{label}@#{j}"),
            };
            let name = if seen.contains(&base) { format!("{base}#{j}") } else { base };
            seen.insert(name.clone());
            Label::new(name)
        })
        .collect()
}

/// Relabels the events of `label` by cluster.
///
/// `assignment.clusters[i]` belongs to the `i`-th event of `label` in
/// ascending id order. A single non-empty cluster leaves the log unchanged.
pub fn apply_refinement(
    log: &EventLog,
    label: &Label,
    assignment: &ClusterAssignment,
) -> Result<(EventLog, Relabeling), RefinementError> {
    let events = log.events_with_label(label);
    if events.len() != assignment.clusters.len() {
        return Err(RefinementError::AssignmentMismatch {
            label: label.clone(),
            expected: events.len(),
            got: assignment.clusters.len(),
        });
    }
    if assignment.non_empty() < 2 {
        return Ok((log.clone(), Relabeling::identity()));
    }
    let names = refined_names(label, assignment);
    if let Some(clash) = names.iter().find(|n| log.alphabet().contains(*n)) {
        return Err(RefinementError::LabelCollision(clash.clone()));
    }
    let table: HashMap<_, _> = events
        .iter()
        .zip(&assignment.clusters)
        .map(|(e, &c)| (e.id, names[c].clone()))
        .collect();
    let relabeling = Relabeling::from_table(format!("refine {label}"), table);
    Ok((relabel(log, &relabeling), relabeling))
}


#[cfg(test)]
mod tests {
    use super::synthetic::two_door_log;
    use super::*;
    use crate::event_log::{is_refinement, Event, EventSet, PartitionKey};
    use crate::event_log::fixtures::at;
    use crate::circular::{sample_uniform_angle, sample_von_mises};

    fn fast() -> PipelineConfig {
        PipelineConfig {
            dip_replicates: 400,
            em: EmConfig { restarts: 6, ..EmConfig::default() },
            controlflow_replicates: 2000,
            ..PipelineConfig::default()
        }
    }

    fn single_label_log(angles: impl IntoIterator<Item = f64>) -> EventLog {
        let events = angles
            .into_iter()
            .enumerate()
            .map(|(i, a)| {
                let secs = (a / std::f64::consts::TAU * 86_400.0) as u32;
                Event::new(i as u64 + 1, at(1 + (i % 28) as u32, secs / 3600, (secs / 60) % 60, secs % 60), "s")
            })
            .collect();
        EventLog::from_events(&EventSet::new(events).unwrap(), PartitionKey::Day)
    }

    #[test]
    fn uniform_label_rejected_as_uniform() {
        let mut rng = stream_rng(101, 0);
        let log = single_label_log((0..200).map(|_| sample_uniform_angle(&mut rng)));
        let r = analyze_label(&log, &"s".into(), &fast()).unwrap();
        assert_eq!(r.decision, Decision::Rejected(RejectReason::Uniform));
        assert!(r.dip.is_none());
    }

    #[test]
    fn tight_cluster_rejected_as_unimodal() {
        let mut rng = stream_rng(102, 0);
        let log = single_label_log((0..200).map(|_| sample_von_mises(&mut rng, 2.0, 8.0)));
        let r = analyze_label(&log, &"s".into(), &fast()).unwrap();
        assert!(r.rao.as_ref().unwrap().reject_null);
        assert_eq!(r.decision, Decision::Rejected(RejectReason::Unimodal));
    }

    #[test]
    fn small_and_missing_labels() {
        let log = single_label_log([1.0, 2.0, 3.0]);
        assert_eq!(analyze_label(&log, &"s".into(), &fast()).unwrap().decision, Decision::Skipped);
        assert!(matches!(
            analyze_label(&log, &"nope".into(), &fast()),
            Err(RefinementError::LabelNotFound(_))
        ));
        let bad = PipelineConfig { k_max: 1, ..fast() };
        assert!(matches!(analyze_label(&log, &"s".into(), &bad), Err(RefinementError::Config(_))));
        let bad = PipelineConfig { alpha_watson: 0.05, ..fast() };
        assert!(bad.validate().is_err());
        let ok = PipelineConfig { alpha_watson: 0.05, watson_mode: WatsonMode::Bootstrap { replicates: 50 }, ..fast() };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn bimodal_door_is_refined() {
        let log = two_door_log(60, 5);
        let door = Label::from("door");
        let r = analyze_label(&log, &door, &fast()).unwrap();
        assert_eq!(r.decision, Decision::Refined, "{r:#?}");
        assert_eq!(r.selection.as_ref().unwrap().chosen_k, 2);
        let names: Vec<String> = r.refined_labels().iter().map(|l| l.to_string()).collect();
        assert!(names.iter().all(|n| n.starts_with("door@[")), "{names:?}");
        let coffee = r.control_flow.iter().find(|t| t.activity.as_str() == "coffee").unwrap();
        assert!(coffee.significant());

        let (out, l) = apply_refinement(&log, &door, r.assignment.as_ref().unwrap()).unwrap();
        assert_eq!(out.alphabet().len(), log.alphabet().len() + 1);
        assert!(is_refinement(&l, &Relabeling::identity(), log.events()));
        let total: usize = r.refined_labels().iter().map(|n| out.events_with_label(n).len()).sum();
        assert_eq!(total, log.events_with_label(&door).len());
        for (a, b) in log.events().zip(out.events()) {
            assert_eq!((a.id, a.timestamp), (b.id, b.timestamp));
            if a.label != door {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn bootstrap_watson_mode_runs() {
        let log = two_door_log(40, 6);
        let cfg = PipelineConfig { watson_mode: WatsonMode::Bootstrap { replicates: 200 }, ..fast() };
        let r = analyze_label(&log, &"door".into(), &cfg).unwrap();
        for c in &r.clusters {
            let w = c.watson.as_ref().unwrap();
            assert!(w.critical_value().unwrap() > 0.0);
        }
    }

    #[test]
    fn watson_bootstrap_matches_table_roughly() {
        // the tabulated 1% point for large n with estimated parameters and moderate κ
        let d = VonMises::new(1.0, 2.0).unwrap();
        let c = watson_bootstrap_critical(&d, 200, 0.01, 4000, 9).unwrap();
        assert!((c - WATSON_CRITICAL).abs() < 0.03, "{c}");
    }

    const WATSON_CRITICAL: f64 = crate::circular::WATSON_CRITICAL_ALPHA_001;

    #[test]
    fn apply_rejects_mismatch_and_is_noop_for_one_cluster() {
        let log = two_door_log(10, 7);
        let door = Label::from("door");
        let n = log.events_with_label(&door).len();
        let bad = ClusterAssignment { k: 2, clusters: vec![0; n - 1], ranges: vec![None, None] };
        assert!(matches!(
            apply_refinement(&log, &door, &bad),
            Err(RefinementError::AssignmentMismatch { .. })
        ));
        let one = ClusterAssignment { k: 1, clusters: vec![0; n], ranges: vec![Some(HourRange { start: 1.0, end: 2.0 })] };
        let (out, _) = apply_refinement(&log, &door, &one).unwrap();
        assert_eq!(out, log);
    }

    #[test]
    fn deterministic_given_seed() {
        let log = two_door_log(40, 8);
        let a = analyze_label(&log, &"door".into(), &fast()).unwrap();
        let b = analyze_label(&log, &"door".into(), &fast()).unwrap();
        assert_eq!(serde_json_string(&a), serde_json_string(&b));
    }

    fn serde_json_string(r: &RefinementReport) -> String {
        serde_json::to_string(r).unwrap()
    }
}
