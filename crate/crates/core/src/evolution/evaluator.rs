use std::collections::BTreeMap;

use super::archive::Feedback;
use crate::constitution::Constitution;
use crate::policy::scripted_policies;
use crate::scoring::{trajectory_metrics, BehaviorProfile, Category, Coefficients, StabilityScore};
use crate::world::{run_episode, EpisodeOptions, TrajectoryLog, WorldConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRun {
    pub seed: u64,
    pub score: StabilityScore,
    pub behavior: BehaviorProfile,
    pub log: Option<TrajectoryLog>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub runs: Vec<EvalRun>,
}

impl Evaluation {
    fn mean(&self, f: impl Fn(&EvalRun) -> f64) -> f64 {
        if self.runs.is_empty() {
            return 0.0;
        }
        self.runs.iter().map(f).sum::<f64>() / self.runs.len() as f64
    }

    /// Mean of per-run S.
    pub fn fitness(&self) -> f64 {
        self.mean(|r| r.score.s)
    }

    pub fn metrics(&self) -> (f64, f64, f64) {
        (self.mean(|r| r.score.p), self.mean(|r| r.score.v), self.mean(|r| r.score.c))
    }

    pub fn feedback(&self) -> Feedback {
        let (p, v, c) = self.metrics();
        let fractions: BTreeMap<Category, f64> =
            Category::ALL.iter().map(|&cat| (cat, self.mean(|r| r.behavior.fraction(cat)))).collect();
        Feedback { score: self.fitness(), productivity: p, survival: v, conflict: c, fractions }
    }
}

/// Scores a constitution over one episode per seed.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, constitution: &Constitution, seeds: &[u64]) -> Result<Evaluation, String>;
}

/// Runs every agent under the constitution's scripted profile.
#[derive(Debug, Clone)]
pub struct ScriptedEvaluator {
    pub world: WorldConfig,
    pub coefficients: Coefficients,
    /// Keep each episode's log in the evaluation.
    pub keep_logs: bool,
}

impl ScriptedEvaluator {
    pub fn new(world: WorldConfig, coefficients: Coefficients) -> Self {
        Self { world, coefficients, keep_logs: false }
    }
}

impl Evaluator for ScriptedEvaluator {
    fn evaluate(&self, constitution: &Constitution, seeds: &[u64]) -> Result<Evaluation, String> {
        let mut runs = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let (mut policies, _) = scripted_policies(constitution, self.world.n_agents, seed);
            let options = EpisodeOptions { label: constitution.label.clone(), parallel_decisions: false };
            let log = run_episode(&self.world, seed, &mut policies, &options).map_err(|e| e.to_string())?;
            let metrics = trajectory_metrics(&log).map_err(|e| e.to_string())?;
            let score = metrics.score(&self.coefficients).map_err(|e| e.to_string())?;
            runs.push(EvalRun { seed, score, behavior: metrics.behavior, log: self.keep_logs.then_some(log) });
        }
        Ok(Evaluation { runs })
    }
}
