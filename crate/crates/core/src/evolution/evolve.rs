use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::archive::{Candidate, Feedback, Lineage};
use super::evaluator::{Evaluation, Evaluator};
use super::island::{migrate, select_parent, Island, MigrationReport, SelectionMode};
use super::mutate::Mutator;
use super::{EvolutionConfig, EvolutionConfigError};
use crate::constitution::Constitution;
use crate::rng::{derive_seed, stream, tags};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandStep {
    pub island: usize,
    pub parent: String,
    pub selection: SelectionMode,
    pub child: String,
    pub mutation: String,
    pub fallback: bool,
    pub eval_error: Option<String>,
    pub seeds: Vec<u64>,
    pub fitness: f64,
    pub metrics: (f64, f64, f64),
    pub rules: usize,
    pub cell: (usize, usize),
    pub archived: bool,
    pub evicted: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    pub steps: Vec<IslandStep>,
    /// Best child fitness this iteration.
    pub iteration_best: f64,
    /// Running best over every candidate scored so far, the initial one included.
    pub best_fitness: f64,
    pub best_label: String,
    pub migration: Option<MigrationReport>,
}

pub enum EvolutionEvent<'a> {
    /// A candidate finished evaluation; iteration 0 is the initial constitution.
    Evaluated {
        iteration: u32,
        island: usize,
        candidate: &'a Candidate,
        evaluation: Option<&'a Evaluation>,
    },
    Iteration(&'a IterationRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub initial: Candidate,
    pub best: Candidate,
    pub history: Vec<IterationRecord>,
    pub islands: Vec<Island>,
    pub stopped_early: bool,
}

impl EvolutionResult {
    pub fn best_curve(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.best_fitness).collect()
    }
}

/// True once at least `patience` iterations have run and the running best
/// rose by less than `threshold` over the last `patience` of them.
pub fn should_stop(best_curve: &[f64], patience: usize, threshold: f64) -> bool {
    let n = best_curve.len();
    if patience == 0 || n < patience {
        return false;
    }
    let baseline = if n > patience { best_curve[n - 1 - patience] } else { best_curve[0] };
    best_curve[n - 1] - baseline < threshold
}

fn eval_seeds(root: u64, iteration: u32, island: usize, runs: usize) -> Vec<u64> {
    (0..runs).map(|k| derive_seed(root, tags::EVAL, &[iteration as u64, island as u64, k as u64])).collect()
}

fn score(
    constitution: Constitution,
    evaluator: &dyn Evaluator,
    seeds: &[u64],
    lineage: Lineage,
) -> (Candidate, Option<Evaluation>, Option<String>) {
    match evaluator.evaluate(&constitution, seeds) {
        Ok(ev) => {
            let cand = Candidate {
                fitness: ev.fitness(),
                metrics: ev.metrics(),
                run_count: ev.runs.len(),
                feedback: ev.feedback(),
                constitution,
                lineage,
            };
            (cand, Some(ev), None)
        }
        Err(e) => {
            let cand = Candidate {
                constitution,
                fitness: 0.0,
                metrics: (0.0, 0.0, 0.0),
                run_count: 0,
                feedback: Feedback::default(),
                lineage: Lineage { eval_failed: true, ..lineage },
            };
            (cand, None, Some(e))
        }
    }
}

/// Multi-island search from `initial`. Islands step in parallel; each step
/// draws only from streams derived from `(seed, iteration, island)`, so the
/// result does not depend on scheduling.
pub fn evolve(
    config: &EvolutionConfig,
    initial: &Constitution,
    evaluator: &dyn Evaluator,
    mutator: &dyn Mutator,
    on_event: &mut dyn FnMut(EvolutionEvent<'_>),
) -> Result<EvolutionResult, EvolutionConfigError> {
    config.validate()?;
    let ratios = (config.elite_ratio, config.exploitation_ratio, config.exploration_ratio);
    let seeds = eval_seeds(config.seed, 0, 0, config.eval_runs);
    let (initial_cand, initial_eval, _) = score(initial.clone(), evaluator, &seeds, Lineage::default());
    on_event(EvolutionEvent::Evaluated {
        iteration: 0,
        island: 0,
        candidate: &initial_cand,
        evaluation: initial_eval.as_ref(),
    });

    let mut islands: Vec<Island> = (0..config.num_islands)
        .map(|id| {
            let mut isl = Island::new(id, config.population_size, config.feature_bins, config.score_max);
            isl.admit(Candidate {
                lineage: Lineage { island: id, ..initial_cand.lineage.clone() },
                ..initial_cand.clone()
            });
            isl
        })
        .collect();
    let mut best = initial_cand.clone();
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut stopped_early = false;

    for iteration in 1..=config.max_iterations {
        let outcomes: Vec<(IslandStep, Candidate, Option<Evaluation>)> = islands
            .par_iter_mut()
            .map(|island| {
                let id = island.id;
                let mut select_rng = stream(config.seed, tags::ISLAND, &[iteration as u64, id as u64]);
                let (mode, parent) = match select_parent(island, ratios, &mut select_rng) {
                    Ok(p) => p,
                    Err(_) => (SelectionMode::Elite, initial_cand.clone()),
                };
                let mut mutate_rng = stream(config.seed, tags::MUTATE, &[iteration as u64, id as u64]);
                let mutation = mutator.mutate(&parent, &mut mutate_rng);
                let mut child = mutation.constitution;
                child.label = format!("{}-{iteration:02}-{id}", initial.label);
                child.parent = Some(parent.label().to_string());
                let lineage = Lineage {
                    parent: Some(parent.label().to_string()),
                    island: id,
                    iteration,
                    mutation: mutation.description.clone(),
                    fallback: mutation.fallback,
                    eval_failed: false,
                };
                let seeds = eval_seeds(config.seed, iteration, id, config.eval_runs);
                let (cand, evaluation, eval_error) = score(child, evaluator, &seeds, lineage);
                let cell = island.archive.descriptor(&cand);
                let (archived, evicted) = island.admit(cand.clone());
                let step = IslandStep {
                    island: id,
                    parent: parent.label().to_string(),
                    selection: mode,
                    child: cand.label().to_string(),
                    mutation: mutation.description,
                    fallback: mutation.fallback,
                    eval_error,
                    seeds,
                    fitness: cand.fitness,
                    metrics: cand.metrics,
                    rules: cand.constitution.complexity(),
                    cell,
                    archived,
                    evicted,
                };
                (step, cand, evaluation)
            })
            .collect();

        let mut steps = Vec::with_capacity(outcomes.len());
        let mut iteration_best = 0.0f64;
        for (step, cand, evaluation) in &outcomes {
            on_event(EvolutionEvent::Evaluated {
                iteration,
                island: step.island,
                candidate: cand,
                evaluation: evaluation.as_ref(),
            });
            iteration_best = iteration_best.max(cand.fitness);
            if cand.fitness > best.fitness {
                best = cand.clone();
            }
            steps.push(step.clone());
        }

        let migration = (iteration % config.migration_interval == 0 && config.num_islands > 1)
            .then(|| migrate(&mut islands, config.migrants()));

        let record = IterationRecord {
            iteration,
            steps,
            iteration_best,
            best_fitness: best.fitness,
            best_label: best.label().to_string(),
            migration,
        };
        on_event(EvolutionEvent::Iteration(&record));
        history.push(record);

        let curve: Vec<f64> = history.iter().map(|r| r.best_fitness).collect();
        if iteration < config.max_iterations
            && should_stop(&curve, config.early_stopping_patience, config.convergence_threshold)
        {
            stopped_early = true;
            break;
        }
    }

    Ok(EvolutionResult { initial: initial_cand, best, history, islands, stopped_early })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitution::{baseline, BaselineName};
    use crate::evolution::evaluator::EvalRun;
    use crate::evolution::mutate::MockMutator;
    use crate::scoring::{stability_score, BehaviorProfile, Coefficients};

    #[test]
    fn stop_rule() {
        assert!(should_stop(&[0.2; 10], 10, 0.05));
        assert!(!should_stop(&[0.2; 9], 10, 0.05));
        let mut h = vec![0.2; 12];
        for x in h.iter_mut().skip(9) {
            *x = 0.26;
        }
        assert!(!should_stop(&h, 10, 0.05));
        // Early gain then plateau stops well before 30.
        let curve: Vec<f64> = (1..=30).map(|i| if i < 2 { 0.1 } else { 0.5 }).collect();
        let stop_at = (1..=30).find(|&n| should_stop(&curve[..n], 10, 0.05)).unwrap();
        assert!(stop_at < 30);
    }

    /// Fitness = rule count / 20, so the search is rewarded for adding rules.
    struct RuleCount;

    impl Evaluator for RuleCount {
        fn evaluate(&self, c: &Constitution, seeds: &[u64]) -> Result<Evaluation, String> {
            if c.rules.len() == 1 {
                return Err("single-rule constitutions crash this evaluator".into());
            }
            let s =
                stability_score((c.rules.len() as f64 / 12.0).min(1.0), 0.0, 0.0, &Coefficients::default()).unwrap();
            let profile = BehaviorProfile {
                fractions: Default::default(),
                counts: Default::default(),
                total_actions: 0,
                per_agent: Default::default(),
                gathers_per_agent: 0.0,
                deposits_per_agent: 0.0,
                deposit_latency: None,
                windows: vec![],
            };
            Ok(Evaluation {
                runs: seeds
                    .iter()
                    .map(|&seed| EvalRun { seed, score: s.clone(), behavior: profile.clone(), log: None })
                    .collect(),
            })
        }
    }

    #[test]
    fn elitist_reproducible_and_bounded() {
        let config = EvolutionConfig { max_iterations: 12, early_stopping_patience: 100, ..Default::default() };
        let run =
            || evolve(&config, &baseline(BaselineName::Hhh), &RuleCount, &MockMutator::default(), &mut |_| {}).unwrap();
        let a = run();
        let b = run();
        assert_eq!(a, b);
        assert_eq!(a.history.len(), 12);
        let curve = a.best_curve();
        assert!(curve.windows(2).all(|w| w[1] >= w[0]));
        for isl in &a.islands {
            assert!(isl.population.len() <= config.population_size);
            assert!(isl.archive.is_consistent());
        }
        for r in a.history.iter().filter(|r| r.iteration % 5 == 0) {
            let m = r.migration.as_ref().unwrap();
            for i in 0..3 {
                assert_eq!(m.sent_by(i), 2);
            }
        }
    }

    #[test]
    fn evaluator_failure_scores_zero_and_continues() {
        let config = EvolutionConfig { max_iterations: 15, early_stopping_patience: 100, ..Default::default() };
        let one = Constitution::new(
            "one",
            crate::constitution::Provenance::Baseline,
            vec![
                crate::constitution::MoralRule::new("a", "Rest.", "", 1),
                crate::constitution::MoralRule::new("b", "Rest.", "", 2),
            ],
        );
        let r = evolve(&config, &one, &RuleCount, &MockMutator::default(), &mut |_| {}).unwrap();
        let failed: Vec<&IslandStep> =
            r.history.iter().flat_map(|h| &h.steps).filter(|s| s.eval_error.is_some()).collect();
        assert!(!failed.is_empty());
        assert!(failed.iter().all(|s| s.fitness == 0.0));
        assert_eq!(r.history.len(), 15);
    }
}
