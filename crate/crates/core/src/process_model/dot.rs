//! Graphviz DOT rendering.

use std::fmt::Write;

use super::{AcceptingPetriNet, DirectlyFollowsGraph};

pub trait ToDot {
    fn to_dot(&self) -> String;
}

pub fn export_dot(model: &impl ToDot) -> String {
    model.to_dot()
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl ToDot for AcceptingPetriNet {
    /// Places are circles (double when part of the first final marking) with
    /// their initial tokens inside, transitions are labeled boxes, τ
    /// transitions are narrow filled boxes.
    fn to_dot(&self) -> String {
        let mut s = String::from("digraph petri_net {\n  rankdir=LR;\n");
        let fin = self.final_markings().first();
        for (i, name) in self.places().iter().enumerate() {
            let tokens = self.initial_marking().tokens(i);
            let inside = match tokens {
                0 => String::new(),
                1 => "●".to_string(),
                n => n.to_string(),
            };
            let shape = if fin.is_some_and(|m| m.tokens(i) > 0) { "doublecircle" } else { "circle" };
            let _ = writeln!(
                s,
                "  p{i} [shape={shape}, label={}, xlabel={}, width=0.4, fixedsize=true];",
                quote(&inside),
                quote(name)
            );
        }
        for (i, t) in self.transitions().iter().enumerate() {
            match &t.label {
                Some(l) => {
                    let _ = writeln!(s, "  t{i} [shape=box, label={}, xlabel={}];", quote(l.as_str()), quote(&t.name));
                }
                None => {
                    let _ = writeln!(
                        s,
                        "  t{i} [shape=box, label=\"\", xlabel={}, style=filled, fillcolor=gray, width=0.15, height=0.5];",
                        quote(&t.name)
                    );
                }
            }
        }
        for t in 0..self.transitions().len() {
            for &p in self.preset(t) {
                let _ = writeln!(s, "  p{p} -> t{t};");
            }
            for &p in self.postset(t) {
                let _ = writeln!(s, "  t{t} -> p{p};");
            }
        }
        s.push_str("}\n");
        s
    }
}

impl ToDot for DirectlyFollowsGraph {
    /// Activities as boxes with their counts, edges labeled with weights,
    /// plus start and end markers.
    fn to_dot(&self) -> String {
        let mut s = String::from("digraph dfg {\n  rankdir=LR;\n");
        let ids: std::collections::BTreeMap<_, _> = self.activities.keys().enumerate().map(|(i, l)| (l, i)).collect();
        if !self.start.is_empty() {
            s.push_str("  start [shape=circle, label=\"\", style=filled, fillcolor=green, width=0.3];\n");
            s.push_str("  end [shape=circle, label=\"\", style=filled, fillcolor=red, width=0.3];\n");
        }
        for (l, &i) in &ids {
            let label = format!("{} ({})", l, self.activities[*l]);
            let _ = writeln!(s, "  a{i} [shape=box, label={}];", quote(&label));
        }
        for (l, w) in &self.start {
            let _ = writeln!(s, "  start -> a{} [label=\"{w}\"];", ids[l]);
        }
        for (from, targets) in &self.edges {
            for (to, w) in targets {
                let _ = writeln!(s, "  a{} -> a{} [label=\"{w}\", penwidth={:.2}];", ids[from], ids[to], 1.0 + (*w as f64).ln());
            }
        }
        for (l, w) in &self.end {
            let _ = writeln!(s, "  a{} -> end [label=\"{w}\"];", ids[l]);
        }
        s.push_str("}\n");
        s
    }
}
