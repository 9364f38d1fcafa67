//! Multi-island MAP-Elites search over constitutions.

mod archive;
mod evaluator;
mod evolve;
mod island;
mod mutate;

use serde::{Deserialize, Serialize};

use crate::scoring::Coefficients;

pub use archive::{feature_descriptor, try_insert, Candidate, EliteMap, Feedback, Lineage};
pub use evaluator::{EvalRun, Evaluation, Evaluator, ScriptedEvaluator};
pub use evolve::{evolve, should_stop, EvolutionEvent, EvolutionResult, IslandStep, IterationRecord};
pub use island::{
    draw_mode, migrate, select_parent, select_parent_with, EmptyIsland, Island, MigrationMove, MigrationReport,
    SelectionMode, FITNESS_FLOOR,
};
pub use mutate::{LlmMutator, MockMutator, Mutation, MutationOp, Mutator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub max_iterations: u32,
    pub num_islands: usize,
    pub population_size: usize,
    pub migration_interval: u32,
    pub migration_rate: f64,
    pub elite_ratio: f64,
    pub exploitation_ratio: f64,
    pub exploration_ratio: f64,
    /// Episodes per fitness evaluation (K).
    pub eval_runs: usize,
    pub early_stopping_patience: usize,
    pub convergence_threshold: f64,
    /// Bins per archive axis.
    pub feature_bins: usize,
    /// Score mapped to the top of the score axis.
    pub score_max: f64,
    pub coefficients: Coefficients,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            num_islands: 3,
            population_size: 10,
            migration_interval: 5,
            migration_rate: 0.2,
            elite_ratio: 0.3,
            exploitation_ratio: 0.6,
            exploration_ratio: 0.1,
            eval_runs: 2,
            early_stopping_patience: 10,
            convergence_threshold: 0.05,
            feature_bins: 8,
            score_max: 0.6,
            coefficients: Coefficients::default(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid evolution config: {field}: {reason}")]
pub struct EvolutionConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolutionConfigError> {
        let err = |field, reason: &str| Err(EvolutionConfigError { field, reason: reason.into() });
        let ratios = [self.elite_ratio, self.exploitation_ratio, self.exploration_ratio];
        if ratios.iter().any(|r| !(*r >= 0.0)) {
            return err("selection", "ratios must be non-negative");
        }
        if (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return err("selection", "elite, exploitation and exploration ratios must sum to 1");
        }
        if !(self.migration_rate > 0.0 && self.migration_rate < 1.0) {
            return err("migration_rate", "must be in (0, 1)");
        }
        if self.num_islands == 0 {
            return err("num_islands", "must be at least 1");
        }
        if self.population_size == 0 {
            return err("population_size", "must be at least 1");
        }
        if self.migration_interval == 0 {
            return err("migration_interval", "must be at least 1");
        }
        if self.eval_runs == 0 {
            return err("eval_runs", "must be at least 1");
        }
        if self.feature_bins == 0 {
            return err("feature_bins", "must be at least 1");
        }
        if !(self.score_max > 0.0) {
            return err("score_max", "must be positive");
        }
        if self.early_stopping_patience == 0 {
            return err("early_stopping_patience", "must be at least 1");
        }
        if !(self.convergence_threshold >= 0.0) {
            return err("convergence_threshold", "must be non-negative");
        }
        self.coefficients.validate().map_err(|e| EvolutionConfigError { field: "coefficients", reason: e.to_string() })
    }

    /// Candidates copied per island per migration event.
    pub fn migrants(&self) -> usize {
        ((self.migration_rate * self.population_size as f64) - 1e-9).ceil().max(1.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_migrate_two() {
        let c = EvolutionConfig::default();
        c.validate().unwrap();
        assert_eq!(c.migrants(), 2);
    }

    #[test]
    fn bad_ratios_rejected() {
        let c = EvolutionConfig { exploration_ratio: 0.2, ..Default::default() };
        assert_eq!(c.validate().unwrap_err().field, "selection");
        let c = EvolutionConfig { migration_rate: 1.0, ..Default::default() };
        assert_eq!(c.validate().unwrap_err().field, "migration_rate");
        let c = EvolutionConfig { num_islands: 0, ..Default::default() };
        assert_eq!(c.validate().unwrap_err().field, "num_islands");
    }
}
