//! Accepting Petri nets and directly-follows graphs.
//!
//! Nets are read from a line-oriented text format:
//!
//! ```text
//! # comment
//! place p1
//! transition t1 Take plates      (label is the rest of the line; `tau` marks an invisible transition)
//! arc p1 t1
//! arc t1 p2
//! initial p1
//! final p2 p3:2                  (one line per final marking)
//! ```

mod dfg;
mod dot;
mod search;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_log::Label;

pub use dfg::{discover_dfg, DirectlyFollowsGraph};
pub use dot::{export_dot, ToDot};
pub use search::{prefix_closure, Acceptance, Language, SearchBudget};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProcessModelError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown node {0:?}")]
    UnknownNode(String),

    #[error("node {0:?} is defined twice")]
    DuplicateNode(String),

    #[error("arc {0:?} -> {1:?} must connect a place and a transition")]
    InvalidArc(String, String),

    #[error("duplicate arc {0:?} -> {1:?}")]
    DuplicateArc(String, String),

    #[error("transition {0:?} is not enabled")]
    NotEnabled(String),

    #[error("marking has {got} places, the net has {expected}")]
    MarkingSize { expected: usize, got: usize },
}

/// Token count per place, indexed like [`AcceptingPetriNet::places`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Marking(Vec<u32>);

impl Marking {
    pub fn empty(places: usize) -> Self {
        Self(vec![0; places])
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn tokens(&self, place: usize) -> u32 {
        self.0[place]
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub name: String,
    /// `None` for τ.
    pub label: Option<Label>,
}

impl Transition {
    pub fn is_tau(&self) -> bool {
        self.label.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptingPetriNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
    /// Input places of each transition.
    preset: Vec<Vec<usize>>,
    /// Output places of each transition.
    postset: Vec<Vec<usize>>,
    initial: Marking,
    finals: Vec<Marking>,
}

impl AcceptingPetriNet {
    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn preset(&self, t: usize) -> &[usize] {
        &self.preset[t]
    }

    pub fn postset(&self, t: usize) -> &[usize] {
        &self.postset[t]
    }

    pub fn arc_count(&self) -> usize {
        self.preset.iter().chain(&self.postset).map(Vec::len).sum()
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn final_markings(&self) -> &[Marking] {
        &self.finals
    }

    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|p| p == name)
    }

    pub fn transition_index(&self, name: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.name == name)
    }

    /// Marking from `(place, tokens)` pairs.
    pub fn marking(&self, tokens: &[(&str, u32)]) -> Result<Marking, ProcessModelError> {
        let mut m = Marking::empty(self.places.len());
        for (p, n) in tokens {
            let i = self.place_index(p).ok_or_else(|| ProcessModelError::UnknownNode(p.to_string()))?;
            m.0[i] += n;
        }
        Ok(m)
    }

    fn check_marking(&self, m: &Marking) -> Result<(), ProcessModelError> {
        if m.0.len() != self.places.len() {
            return Err(ProcessModelError::MarkingSize {
                expected: self.places.len(),
                got: m.0.len(),
            });
        }
        Ok(())
    }

    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        self.preset[t].iter().all(|&p| m.0[p] >= 1)
    }

    /// Transitions whose every input place holds a token, in definition order.
    pub fn enabled(&self, m: &Marking) -> Result<Vec<usize>, ProcessModelError> {
        self.check_marking(m)?;
        Ok((0..self.transitions.len()).filter(|&t| self.is_enabled(m, t)).collect())
    }

    /// Removes one token from each input place and adds one to each output place.
    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking, ProcessModelError> {
        self.check_marking(m)?;
        let tr = self
            .transitions
            .get(t)
            .ok_or_else(|| ProcessModelError::UnknownNode(format!("#{t}")))?;
        if !self.is_enabled(m, t) {
            return Err(ProcessModelError::NotEnabled(tr.name.clone()));
        }
        Ok(self.fire_unchecked(m, t))
    }

    pub(crate) fn fire_unchecked(&self, m: &Marking, t: usize) -> Marking {
        let mut next = m.clone();
        for &p in &self.preset[t] {
            next.0[p] -= 1;
        }
        for &p in &self.postset[t] {
            next.0[p] += 1;
        }
        next
    }

    pub fn is_final(&self, m: &Marking) -> bool {
        self.finals.contains(m)
    }

    /// Labels of the visible transitions.
    pub fn alphabet(&self) -> BTreeSet<Label> {
        self.transitions.iter().filter_map(|t| t.label.clone()).collect()
    }

    pub fn parse(text: &str) -> Result<Self, ProcessModelError> {
        let mut b = NetBuilder::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ProcessModelError::Parse { line: line_no, message };
            let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            let at_line = |e: ProcessModelError| match e {
                ProcessModelError::Parse { .. } => e,
                other => err(other.to_string()),
            };
            match kw {
                "place" => {
                    let name = single_token(rest).map_err(&err)?;
                    b.place(name).map_err(at_line)?;
                }
                "transition" => {
                    let (name, label) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                    if name.is_empty() {
                        return Err(err("transition needs a name".into()));
                    }
                    let label = label.trim();
                    let label = match label {
                        "" => return Err(err(format!("transition {name:?} needs a label or `tau`"))),
                        "tau" | "τ" => None,
                        l => Some(l),
                    };
                    b.transition(name, label).map_err(at_line)?;
                }
                "arc" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    let [from, to] = parts[..] else {
                        return Err(err("arc needs exactly a source and a target".into()));
                    };
                    b.arc(from, to).map_err(at_line)?;
                }
                "initial" => {
                    let m = parse_marking(rest).map_err(&err)?;
                    b.initial = Some((line_no, m));
                }
                "final" => {
                    let m = parse_marking(rest).map_err(&err)?;
                    b.finals.push((line_no, m));
                }
                other => return Err(err(format!("unknown keyword {other:?}"))),
            }
        }
        b.build()
    }

    /// Text in the format accepted by [`AcceptingPetriNet::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.places {
            out += &format!("place {p}\n");
        }
        for t in &self.transitions {
            let label = t.label.as_ref().map_or("tau", |l| l.as_str());
            out += &format!("transition {} {label}\n", t.name);
        }
        for (t, tr) in self.transitions.iter().enumerate() {
            for &p in &self.preset[t] {
                out += &format!("arc {} {}\n", self.places[p], tr.name);
            }
            for &p in &self.postset[t] {
                out += &format!("arc {} {}\n", tr.name, self.places[p]);
            }
        }
        out += &format!("initial {}\n", self.render_marking(&self.initial));
        for f in &self.finals {
            out += &format!("final {}\n", self.render_marking(f));
        }
        out
    }

    pub fn render_marking(&self, m: &Marking) -> String {
        m.0.iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(p, &c)| if c == 1 { self.places[p].clone() } else { format!("{}:{c}", self.places[p]) })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for AcceptingPetriNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn single_token(rest: &str) -> Result<&str, String> {
    let mut it = rest.split_whitespace();
    match (it.next(), it.next()) {
        (Some(name), None) => Ok(name),
        _ => Err(format!("expected exactly one name, got {rest:?}")),
    }
}

fn parse_marking(rest: &str) -> Result<Vec<(String, u32)>, String> {
    rest.split_whitespace()
        .map(|tok| match tok.split_once(':') {
            Some((p, n)) => n
                .parse::<u32>()
                .map(|n| (p.to_string(), n))
                .map_err(|_| format!("bad token count in {tok:?}")),
            None => Ok((tok.to_string(), 1)),
        })
        .collect()
}

/// Incremental construction of an [`AcceptingPetriNet`].
#[derive(Debug, Default)]
pub struct NetBuilder {
    places: Vec<String>,
    transitions: Vec<Transition>,
    index: HashMap<String, Node>,
    preset: Vec<Vec<usize>>,
    postset: Vec<Vec<usize>>,
    initial: Option<(usize, Vec<(String, u32)>)>,
    finals: Vec<(usize, Vec<(String, u32)>)>,
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Place(usize),
    Transition(usize),
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(&mut self, name: &str) -> Result<&mut Self, ProcessModelError> {
        self.claim(name, Node::Place(self.places.len()))?;
        self.places.push(name.to_string());
        Ok(self)
    }

    /// `label = None` adds a τ transition.
    pub fn transition(&mut self, name: &str, label: Option<&str>) -> Result<&mut Self, ProcessModelError> {
        self.claim(name, Node::Transition(self.transitions.len()))?;
        self.transitions.push(Transition {
            name: name.to_string(),
            label: label.map(Label::from),
        });
        self.preset.push(Vec::new());
        self.postset.push(Vec::new());
        Ok(self)
    }

    fn claim(&mut self, name: &str, node: Node) -> Result<(), ProcessModelError> {
        if self.index.contains_key(name) {
            return Err(ProcessModelError::DuplicateNode(name.to_string()));
        }
        self.index.insert(name.to_string(), node);
        Ok(())
    }

    pub fn arc(&mut self, from: &str, to: &str) -> Result<&mut Self, ProcessModelError> {
        let lookup = |n: &str| self.index.get(n).copied().ok_or_else(|| ProcessModelError::UnknownNode(n.to_string()));
        let (set, t, p) = match (lookup(from)?, lookup(to)?) {
            (Node::Place(p), Node::Transition(t)) => (&mut self.preset, t, p),
            (Node::Transition(t), Node::Place(p)) => (&mut self.postset, t, p),
            _ => return Err(ProcessModelError::InvalidArc(from.to_string(), to.to_string())),
        };
        if set[t].contains(&p) {
            return Err(ProcessModelError::DuplicateArc(from.to_string(), to.to_string()));
        }
        set[t].push(p);
        Ok(self)
    }

    pub fn initial(&mut self, tokens: &[(&str, u32)]) -> &mut Self {
        self.initial = Some((0, tokens.iter().map(|(p, n)| (p.to_string(), *n)).collect()));
        self
    }

    pub fn final_marking(&mut self, tokens: &[(&str, u32)]) -> &mut Self {
        self.finals.push((0, tokens.iter().map(|(p, n)| (p.to_string(), *n)).collect()));
        self
    }

    pub fn build(self) -> Result<AcceptingPetriNet, ProcessModelError> {
        let resolve = |line: usize, tokens: &[(String, u32)]| -> Result<Marking, ProcessModelError> {
            let mut m = Marking::empty(self.places.len());
            for (p, n) in tokens {
                match self.index.get(p) {
                    Some(Node::Place(i)) => m.0[*i] += n,
                    _ if line > 0 => {
                        return Err(ProcessModelError::Parse {
                            line,
                            message: format!("{p:?} is not a place"),
                        })
                    }
                    _ => return Err(ProcessModelError::UnknownNode(p.clone())),
                }
            }
            Ok(m)
        };
        let initial = match &self.initial {
            Some((line, tokens)) => resolve(*line, tokens)?,
            None => Marking::empty(self.places.len()),
        };
        let finals = self
            .finals
            .iter()
            .map(|(line, tokens)| resolve(*line, tokens))
            .collect::<Result<_, _>>()?;
        Ok(AcceptingPetriNet {
            places: self.places,
            transitions: self.transitions,
            preset: self.preset,
            postset: self.postset,
            initial,
            finals,
        })
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::figure_one;
    use super::*;

    fn names(net: &AcceptingPetriNet, ts: &[usize]) -> Vec<String> {
        ts.iter().map(|&t| net.transitions()[t].name.clone()).collect()
    }

    #[test]
    fn figure_one_structure() {
        let net = figure_one();
        assert_eq!(net.places().len(), 8);
        assert_eq!(net.transitions().len(), 7);
        assert_eq!(net.arc_count(), 16);
        assert!(net.transitions()[6].is_tau());
        assert_eq!(net.alphabet().len(), 6);
    }

    #[test]
    fn enabled_and_fire_on_figure_one() {
        let net = figure_one();
        let m0 = net.initial_marking().clone();
        assert_eq!(names(&net, &net.enabled(&m0).unwrap()), ["t1"]);
        let m1 = net.fire(&m0, 0).unwrap();
        assert_eq!(m1, net.marking(&[("p2", 1)]).unwrap());
        assert_eq!(names(&net, &net.enabled(&m1).unwrap()), ["t2", "t3"]);
        let p3 = net.marking(&[("p3", 1)]).unwrap();
        assert_eq!(net.fire(&p3, 3).unwrap(), net.marking(&[("p4", 1), ("p5", 1)]).unwrap());
        assert!(net.enabled(&Marking::empty(8)).unwrap().is_empty());
        assert!(matches!(net.fire(&m0, 1), Err(ProcessModelError::NotEnabled(t)) if t == "t2"));
        assert!(net.enabled(&Marking::empty(3)).is_err());
    }

    #[test]
    fn self_loop_leaves_marking_unchanged() {
        let mut b = NetBuilder::new();
        b.place("p").unwrap().place("q").unwrap().transition("t", Some("X")).unwrap();
        b.arc("p", "t").unwrap().arc("t", "p").unwrap();
        b.initial(&[("p", 1), ("q", 3)]);
        let net = b.build().unwrap();
        let m = net.initial_marking().clone();
        assert_eq!(net.fire(&m, 0).unwrap(), m);
    }

    #[test]
    fn text_roundtrip() {
        let net = figure_one();
        let again = AcceptingPetriNet::parse(&net.to_text()).unwrap();
        assert_eq!(again, net);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let cases = [
            ("place p\nplace p\n", 2),
            ("place p\ntransition t\n", 2),
            ("place p\narc p q\n", 2),
            ("place p\nplace q\narc p q\n", 3),
            ("bogus x\n", 1),
            ("place p\ninitial q\n", 2),
            ("place p\nfinal p:x\n", 2),
        ];
        for (text, line) in cases {
            match AcceptingPetriNet::parse(text) {
                Err(ProcessModelError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn labels_may_contain_spaces() {
        let net = AcceptingPetriNet::parse("place p\ntransition t bedroom door\narc p t\n").unwrap();
        assert_eq!(net.transitions()[0].label.as_ref().unwrap().as_str(), "bedroom door");
    }
}
