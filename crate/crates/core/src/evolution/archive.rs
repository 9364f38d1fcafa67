use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constitution::Constitution;
use crate::scoring::Category;

/// Performance summary handed to the mutator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub score: f64,
    pub productivity: f64,
    pub survival: f64,
    pub conflict: f64,
    pub fractions: BTreeMap<Category, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub parent: Option<String>,
    pub island: usize,
    pub iteration: u32,
    /// Mutation applied to the parent.
    pub mutation: String,
    /// The language-model mutator failed and the mock mutator produced this child.
    pub fallback: bool,
    /// Evaluation failed; fitness forced to 0.
    pub eval_failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub constitution: Constitution,
    /// Mean S over `run_count` episodes.
    pub fitness: f64,
    /// Mean (P, V, C).
    pub metrics: (f64, f64, f64),
    pub run_count: usize,
    pub feedback: Feedback,
    pub lineage: Lineage,
}

impl Candidate {
    /// A candidate that has not been evaluated yet.
    pub fn unscored(constitution: Constitution) -> Self {
        Candidate {
            constitution,
            fitness: 0.0,
            metrics: (0.0, 0.0, 0.0),
            run_count: 0,
            feedback: Feedback::default(),
            lineage: Lineage::default(),
        }
    }

    pub fn label(&self) -> &str {
        &self.constitution.label
    }
}

/// `(clamp(rules − 1, 0, bins − 1), clamp(floor(S / score_max · bins), 0, bins − 1))`.
pub fn feature_descriptor(rules: usize, fitness: f64, bins: usize, score_max: f64) -> (usize, usize) {
    let top = bins.saturating_sub(1);
    let complexity = rules.saturating_sub(1).min(top);
    let raw = (fitness / score_max * bins as f64).floor();
    let score = if raw.is_nan() || raw < 0.0 { 0 } else { (raw as usize).min(top) };
    (complexity, score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliteMap {
    pub bins: usize,
    pub score_max: f64,
    #[serde(with = "cells_as_list")]
    pub cells: BTreeMap<(usize, usize), Candidate>,
}

mod cells_as_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Candidate;

    #[derive(Serialize, Deserialize)]
    struct Cell {
        complexity_bin: usize,
        score_bin: usize,
        candidate: Candidate,
    }

    pub fn serialize<S: Serializer>(cells: &BTreeMap<(usize, usize), Candidate>, s: S) -> Result<S::Ok, S::Error> {
        let list: Vec<Cell> = cells
            .iter()
            .map(|(&(c, b), cand)| Cell { complexity_bin: c, score_bin: b, candidate: cand.clone() })
            .collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(usize, usize), Candidate>, D::Error> {
        let list = Vec::<Cell>::deserialize(d)?;
        Ok(list.into_iter().map(|c| ((c.complexity_bin, c.score_bin), c.candidate)).collect())
    }
}

impl EliteMap {
    pub fn new(bins: usize, score_max: f64) -> Self {
        Self { bins, score_max, cells: BTreeMap::new() }
    }

    pub fn descriptor(&self, cand: &Candidate) -> (usize, usize) {
        feature_descriptor(cand.constitution.complexity(), cand.fitness, self.bins, self.score_max)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.cells.values().max_by(|a, b| a.fitness.total_cmp(&b.fitness))
    }

    /// Every stored candidate sits in the cell its descriptor names.
    pub fn is_consistent(&self) -> bool {
        self.cells.iter().all(|(&cell, cand)| self.descriptor(cand) == cell)
    }
}

/// Inserts when the cell is empty or the candidate is strictly fitter.
pub fn try_insert(map: &mut EliteMap, cand: &Candidate) -> bool {
    let cell = map.descriptor(cand);
    match map.cells.get(&cell) {
        Some(incumbent) if incumbent.fitness >= cand.fitness => false,
        _ => {
            map.cells.insert(cell, cand.clone());
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitution::{MoralRule, Provenance};

    pub(crate) fn cand(label: &str, rules: usize, fitness: f64) -> Candidate {
        let rules = (1..=rules).map(|i| MoralRule::new(&format!("r{i}"), "Rest.", "", i as u32)).collect();
        Candidate {
            constitution: Constitution::new(label, Provenance::Mutated, rules),
            fitness,
            metrics: (0.0, 0.0, 0.0),
            run_count: 2,
            feedback: Feedback::default(),
            lineage: Lineage::default(),
        }
    }

    #[test]
    fn descriptor_binning() {
        assert_eq!(feature_descriptor(7, 0.577, 8, 0.6), (6, 7));
        assert_eq!(feature_descriptor(1, 0.0, 8, 0.6), (0, 0));
        assert_eq!(feature_descriptor(12, 0.3, 8, 0.6), (7, 4));
        assert_eq!(feature_descriptor(0, 0.6, 8, 0.6), (0, 7));
    }

    #[test]
    fn insert_rules() {
        let mut map = EliteMap::new(8, 0.6);
        assert!(try_insert(&mut map, &cand("a", 3, 0.30)));
        assert!(!try_insert(&mut map, &cand("b", 3, 0.30)));
        assert_eq!(map.cells[&(2, 4)].label(), "a");
        assert!(try_insert(&mut map, &cand("c", 3, 0.31)));
        assert_eq!(map.cells[&(2, 4)].label(), "c");
        assert_eq!(map.len(), 1);
        assert!(map.is_consistent());
    }
}
