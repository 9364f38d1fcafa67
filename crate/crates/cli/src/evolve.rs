use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;
use society_core::constitution::serialize;
use society_core::evolution::{
    evolve, Candidate, EvolutionEvent, EvolutionResult, LlmMutator, MockMutator, Mutator, ScriptedEvaluator,
};
use society_core::policy::chat::{ChatTransport, HttpChatClient};

use crate::config::{Mode, MutatorKind, RunConfig};
use crate::rundir::RunDir;

#[derive(Debug)]
pub struct EvolveOutcome {
    pub dir: PathBuf,
    pub result: EvolutionResult,
}

pub fn eval_log_name(iteration: u32, island: usize, run: usize) -> String {
    format!("logs/iter_{iteration:02}_island_{island}_run_{run}.jsonl")
}

pub fn run_evolve(cfg: &RunConfig, progress: &mut dyn Write) -> Result<EvolveOutcome> {
    let transport: Option<Arc<dyn ChatTransport>> = match cfg.mutator {
        MutatorKind::Llm => Some(Arc::new(HttpChatClient::new(cfg.endpoint()).context("llm endpoint")?)),
        MutatorKind::Mock => None,
    };
    run_evolve_with(cfg, transport, progress)
}

/// As [`run_evolve`], with the mutator's chat transport supplied by the caller.
pub fn run_evolve_with(
    cfg: &RunConfig,
    transport: Option<Arc<dyn ChatTransport>>,
    progress: &mut dyn Write,
) -> Result<EvolveOutcome> {
    cfg.validate(Mode::Evolve)?;
    let initial = cfg.load_constitution()?;
    let config = cfg.evolution_config();
    let mutator: Box<dyn Mutator> = match (cfg.mutator, transport) {
        (MutatorKind::Mock, _) => Box::new(MockMutator::default()),
        (MutatorKind::Llm, None) => bail!("llm mutator configured but no chat transport available"),
        (MutatorKind::Llm, Some(t)) => {
            let m = LlmMutator::new(t, cfg.endpoint());
            if !cfg.allow_fallback {
                let probe = Candidate::unscored(initial.clone());
                m.try_mutate(&probe).map_err(|e| {
                    anyhow!("mutator endpoint {} unusable and fallback is disabled: {e}", cfg.endpoint().base_url)
                })?;
            }
            Box::new(m)
        }
    };
    let evaluator = ScriptedEvaluator { keep_logs: true, ..ScriptedEvaluator::new(cfg.world.clone(), cfg.scoring) };

    let dir = RunDir::create(&cfg.output_dir)?;
    dir.write("config.yaml", &cfg.snapshot())?;
    dir.write("initial.toml", &serialize(&initial))?;
    dir.reset("history.jsonl")?;

    let mut failure: Option<anyhow::Error> = None;
    let mut on_event = |event: EvolutionEvent<'_>| {
        if failure.is_some() {
            return;
        }
        let mut step = || -> Result<()> {
            match event {
                EvolutionEvent::Evaluated { iteration, island, evaluation: Some(ev), .. } => {
                    for (k, run) in ev.runs.iter().enumerate() {
                        if let Some(log) = &run.log {
                            dir.write(&eval_log_name(iteration, island, k), &log.to_jsonl())?;
                        }
                    }
                }
                EvolutionEvent::Evaluated { .. } => {}
                EvolutionEvent::Iteration(record) => {
                    dir.append_line("history.jsonl", &serde_json::to_string(record)?)?;
                    writeln!(
                        progress,
                        "iter {:>2}  best {:.4}  iteration best {:.4}  ({})",
                        record.iteration, record.best_fitness, record.iteration_best, record.best_label
                    )?;
                }
            }
            Ok(())
        };
        if let Err(e) = step() {
            failure = Some(e);
        }
    };
    let result = evolve(&config, &initial, &evaluator, mutator.as_ref(), &mut on_event)?;
    if let Some(e) = failure {
        return Err(e);
    }

    dir.write("archive.json", &serde_json::to_string_pretty(&result.islands)?)?;
    dir.write("best.toml", &serialize(&result.best.constitution))?;
    let mut curve = String::from("iteration\tbest_fitness\titeration_best\n");
    curve.push_str(&format!("0\t{:.6}\t{:.6}\n", result.initial.fitness, result.initial.fitness));
    for r in &result.history {
        curve.push_str(&format!("{}\t{:.6}\t{:.6}\n", r.iteration, r.best_fitness, r.iteration_best));
    }
    dir.write("curve.tsv", &curve)?;
    let summary = json!({
        "initial": { "label": result.initial.label(), "fitness": result.initial.fitness, "metrics": result.initial.metrics },
        "best": { "label": result.best.label(), "fitness": result.best.fitness, "metrics": result.best.metrics,
                  "rules": result.best.constitution.complexity(), "lineage": result.best.lineage },
        "iterations": result.history.len(),
        "stopped_early": result.stopped_early,
        "fallbacks": result.history.iter().flat_map(|r| &r.steps).filter(|s| s.fallback).count(),
        "evaluation_failures": result.history.iter().flat_map(|r| &r.steps).filter(|s| s.eval_error.is_some()).count(),
    });
    dir.write("summary.json", &serde_json::to_string_pretty(&summary)?)?;
    writeln!(
        progress,
        "best {} fitness {:.4} (initial {:.4}){}",
        result.best.label(),
        result.best.fitness,
        result.initial.fitness,
        if result.stopped_early { ", stopped early" } else { "" }
    )?;
    Ok(EvolveOutcome { dir: dir.path().to_path_buf(), result })
}
