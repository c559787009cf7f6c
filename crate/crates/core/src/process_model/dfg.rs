use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::event_log::{EventLog, Label};

/// Weighted directly-follows relation of a log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectlyFollowsGraph {
    /// Occurrences of each activity.
    pub activities: BTreeMap<Label, u64>,
    /// `edges[a][b]`: positions where `b` directly follows `a` within a trace.
    pub edges: BTreeMap<Label, BTreeMap<Label, u64>>,
    pub start: BTreeMap<Label, u64>,
    pub end: BTreeMap<Label, u64>,
}

impl DirectlyFollowsGraph {
    pub fn weight(&self, from: &Label, to: &Label) -> u64 {
        self.edges.get(from).and_then(|m| m.get(to)).copied().unwrap_or(0)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().flat_map(|m| m.values()).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeMap::len).sum()
    }
}

pub fn discover_dfg(log: &EventLog) -> DirectlyFollowsGraph {
    let mut g = DirectlyFollowsGraph::default();
    for t in log.traces() {
        let labels: Vec<&Label> = t.labels().collect();
        let (Some(first), Some(last)) = (labels.first(), labels.last()) else {
            continue;
        };
        *g.start.entry((*first).clone()).or_default() += 1;
        *g.end.entry((*last).clone()).or_default() += 1;
        for l in &labels {
            *g.activities.entry((*l).clone()).or_default() += 1;
        }
        for w in labels.windows(2) {
            *g.edges.entry(w[0].clone()).or_default().entry(w[1].clone()).or_default() += 1;
        }
    }
    g
}
