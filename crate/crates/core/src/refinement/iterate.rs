//! Repeated rounds of analysis and refinement.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{analyze_label, apply_refinement, Decision, PipelineConfig, RefinementError, RefinementReport, RejectReason};
use crate::event_log::{EventLog, Label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    /// 1-based.
    pub round: usize,
    pub reports: Vec<RefinementReport>,
    /// Labels refined in this round, in application order.
    pub applied: Vec<Label>,
}

#[derive(Debug, Clone)]
pub struct IterativeOutcome {
    pub log: EventLog,
    pub rounds: Vec<Round>,
}

impl IterativeOutcome {
    pub fn refinement_count(&self) -> usize {
        self.rounds.iter().map(|r| r.applied.len()).sum()
    }
}

/// Outcomes that depend only on the label's own events, which a refinement
/// of another label does not touch.
fn log_independent(d: Decision) -> bool {
    matches!(
        d,
        Decision::Skipped
            | Decision::Rejected(RejectReason::Uniform | RejectReason::Unimodal | RejectReason::SingleComponent | RejectReason::WatsonFail)
    )
}

/// Analyzes every label, applies the accepted refinements with the most
/// significant control-flow activities first (up to
/// `max_refinements_per_round`), and repeats until a round applies nothing
/// or `max_rounds` is reached.
pub fn refine_iteratively(log: &EventLog, config: &PipelineConfig) -> Result<IterativeOutcome, RefinementError> {
    config.validate()?;
    let mut current = log.clone();
    let mut rounds = Vec::new();
    let mut cache: HashMap<Label, RefinementReport> = HashMap::new();
    for round in 1..=config.max_rounds {
        let labels: Vec<&Label> = current.alphabet().iter().collect();
        let reports: Vec<RefinementReport> = labels
            .par_iter()
            .map(|&l| match cache.get(l) {
                Some(r) => Ok(r.clone()),
                None => analyze_label(&current, l, config),
            })
            .collect::<Result<_, _>>()?;
        for r in &reports {
            if log_independent(r.decision) {
                cache.entry(r.label.clone()).or_insert_with(|| r.clone());
            }
        }
        let mut accepted: Vec<&RefinementReport> = reports.iter().filter(|r| r.is_refined()).collect();
        accepted.sort_by(|a, b| {
            b.significant_activities
                .cmp(&a.significant_activities)
                .then_with(|| a.label.cmp(&b.label))
        });
        let mut applied = Vec::new();
        let mut next = current.clone();
        for r in accepted.into_iter().take(config.max_refinements_per_round) {
            let assignment = r.assignment.as_ref().expect("refined reports carry their assignment");
            next = apply_refinement(&next, &r.label, assignment)?.0;
            applied.push(r.label.clone());
        }
        let done = applied.is_empty();
        rounds.push(Round { round, reports, applied });
        current = next;
        if done {
            break;
        }
    }
    Ok(IterativeOutcome { log: current, rounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::{is_refinement, Relabeling};
    use crate::mixture::EmConfig;
    use crate::refinement::synthetic::two_door_log;

    fn fast() -> PipelineConfig {
        PipelineConfig {
            dip_replicates: 300,
            em: EmConfig { restarts: 5, ..EmConfig::default() },
            controlflow_replicates: 1000,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn refines_door_then_stops() {
        let log = two_door_log(60, 11);
        let out = refine_iteratively(&log, &fast()).unwrap();
        assert_eq!(out.rounds[0].applied, vec![Label::from("door")]);
        assert!(out.refinement_count() >= 1);
        assert!(out.rounds.len() <= fast().max_rounds);
        assert!(out.rounds.last().unwrap().applied.is_empty() || out.rounds.len() == fast().max_rounds);
        assert_eq!(out.log.alphabet().len(), log.alphabet().len() + out.refinement_count());
        let fin = Relabeling::from_log("final", &out.log);
        assert!(is_refinement(&fin, &Relabeling::identity(), log.events()));
    }

    #[test]
    fn round_cap_respected() {
        let log = two_door_log(40, 12);
        let cfg = PipelineConfig { max_rounds: 1, ..fast() };
        let out = refine_iteratively(&log, &cfg).unwrap();
        assert_eq!(out.rounds.len(), 1);
    }
}
