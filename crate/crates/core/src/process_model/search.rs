//! Bounded search of the reachable markings.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{AcceptingPetriNet, Marking};
use crate::event_log::Label;

/// Limits that keep the search finite on unbounded nets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Distinct search states (marking plus progress through the word) visited.
    pub max_states: usize,
    /// Markings with more tokens than this on some place are not explored.
    pub max_tokens: u32,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_states: 100_000,
            max_tokens: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Acceptance {
    Accepted,
    Rejected,
    /// The budget ran out before the word was found.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Language {
    pub words: BTreeSet<Vec<Label>>,
    /// `false` when the budget cut the search short.
    pub complete: bool,
}

struct Frontier<S> {
    seen: HashSet<S>,
    stack: Vec<S>,
    budget: SearchBudget,
    complete: bool,
}

impl<S: Clone + Eq + std::hash::Hash> Frontier<S> {
    fn new(start: S, budget: SearchBudget) -> Self {
        Self {
            seen: HashSet::from([start.clone()]),
            stack: vec![start],
            budget,
            complete: true,
        }
    }

    fn push(&mut self, marking: &Marking, state: S) {
        if marking.counts().iter().any(|&c| c > self.budget.max_tokens) {
            self.complete = false;
            return;
        }
        if self.seen.contains(&state) {
            return;
        }
        if self.seen.len() >= self.budget.max_states {
            self.complete = false;
            return;
        }
        self.seen.insert(state.clone());
        self.stack.push(state);
    }
}

impl AcceptingPetriNet {
    /// Visible words of length at most `max_len` that reach a final marking.
    pub fn language(&self, max_len: usize) -> Language {
        self.language_within(max_len, SearchBudget::default())
    }

    pub fn language_within(&self, max_len: usize, budget: SearchBudget) -> Language {
        let mut words = BTreeSet::new();
        let mut f = Frontier::new((self.initial.clone(), Vec::<Label>::new()), budget);
        while let Some((m, w)) = f.stack.pop() {
            if self.is_final(&m) {
                words.insert(w.clone());
            }
            for t in 0..self.transitions.len() {
                if !self.is_enabled(&m, t) {
                    continue;
                }
                let next_word = match &self.transitions[t].label {
                    None => w.clone(),
                    Some(_) if w.len() == max_len => continue,
                    Some(l) => {
                        let mut v = w.clone();
                        v.push(l.clone());
                        v
                    }
                };
                let next = self.fire_unchecked(&m, t);
                f.push(&next.clone(), (next, next_word));
            }
        }
        Language {
            words,
            complete: f.complete,
        }
    }

    /// Whether some firing sequence spelling `word` (τ omitted) ends in a final marking.
    pub fn accepts(&self, word: &[Label]) -> Acceptance {
        self.accepts_within(word, SearchBudget::default())
    }

    pub fn accepts_within(&self, word: &[Label], budget: SearchBudget) -> Acceptance {
        let mut f = Frontier::new((self.initial.clone(), 0usize), budget);
        while let Some((m, pos)) = f.stack.pop() {
            if pos == word.len() && self.is_final(&m) {
                return Acceptance::Accepted;
            }
            for t in 0..self.transitions.len() {
                if !self.is_enabled(&m, t) {
                    continue;
                }
                let next_pos = match &self.transitions[t].label {
                    None => pos,
                    Some(l) if pos < word.len() && *l == word[pos] => pos + 1,
                    Some(_) => continue,
                };
                let next = self.fire_unchecked(&m, t);
                f.push(&next.clone(), (next, next_pos));
            }
        }
        if f.complete {
            Acceptance::Rejected
        } else {
            Acceptance::Indeterminate
        }
    }
}

/// Every prefix, including the empty one, of every word; empty for an empty language.
pub fn prefix_closure<T: Ord + Clone>(language: &BTreeSet<Vec<T>>) -> BTreeSet<Vec<T>> {
    language
        .iter()
        .flat_map(|w| (0..=w.len()).map(move |i| w[..i].to_vec()))
        .collect()
}
