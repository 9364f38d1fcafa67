use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use society_core::constitution::serialize;
use society_core::policy::chat::{ChatTransport, HttpChatClient};
use society_core::policy::{scripted_policies, LlmPolicy, Policy};
use society_core::scoring::{trajectory_metrics, ConstitutionSummary, ScoreReport, TrajectoryMetrics};
use society_core::world::{run_episode, EpisodeOptions};

use crate::config::{Mode, PolicyKind, RunConfig};
use crate::rundir::RunDir;

#[derive(Debug)]
pub struct SimulateOutcome {
    pub dir: PathBuf,
    pub seeds: Vec<u64>,
    pub log_paths: Vec<PathBuf>,
    pub metrics: Vec<TrajectoryMetrics>,
    pub report: ScoreReport,
    pub warnings: Vec<String>,
}

pub fn log_name(run: usize) -> String {
    format!("run_{run:03}.jsonl")
}

/// Runs `cfg.runs` episodes with seeds `seed + 0 .. seed + runs - 1`.
pub fn run_simulate(cfg: &RunConfig) -> Result<SimulateOutcome> {
    let transport: Option<Arc<dyn ChatTransport>> = if cfg.uses_llm_policy() {
        Some(Arc::new(HttpChatClient::new(cfg.endpoint()).context("llm endpoint")?))
    } else {
        None
    };
    run_simulate_with(cfg, transport)
}

/// As [`run_simulate`], with the chat transport for language-model agents supplied by the caller.
pub fn run_simulate_with(cfg: &RunConfig, transport: Option<Arc<dyn ChatTransport>>) -> Result<SimulateOutcome> {
    cfg.validate(Mode::Simulate)?;
    let constitution = cfg.load_constitution()?;
    let dir = RunDir::create(&cfg.output_dir)?;
    dir.write("config.yaml", &cfg.snapshot())?;
    dir.write("constitution.toml", &serialize(&constitution))?;

    let llm = cfg.uses_llm_policy();
    let transport = match (llm, transport) {
        (true, Some(t)) => Some(t),
        (true, None) => anyhow::bail!("language-model agents configured but no chat transport available"),
        (false, _) => None,
    };

    let mut seeds = Vec::new();
    let mut log_paths = Vec::new();
    let mut metrics = Vec::new();
    let mut warnings = Vec::new();
    for run in 0..cfg.runs {
        let seed = cfg.seed().wrapping_add(run as u64);
        let (mut policies, derive_warnings) = scripted_policies(&constitution, cfg.world.n_agents, seed);
        if run == 0 {
            warnings.extend(derive_warnings);
        }
        if let Some(t) = &transport {
            for id in 1..=cfg.world.n_agents {
                if cfg.policy_for(id) == PolicyKind::Llm {
                    let p = LlmPolicy::new(t.clone(), cfg.endpoint(), constitution.clone());
                    policies.insert(id, Box::new(p) as Box<dyn Policy>);
                }
            }
        }
        let options = EpisodeOptions { label: constitution.label.clone(), parallel_decisions: llm };
        let log = run_episode(&cfg.world, seed, &mut policies, &options)?;
        let faults: usize = log.turns.iter().map(|t| t.faults.len()).sum();
        if faults > 0 {
            warnings.push(format!("run {run}: {faults} policy faults replaced by REST"));
        }
        log_paths.push(dir.write(&format!("logs/{}", log_name(run)), &log.to_jsonl())?);
        metrics.push(trajectory_metrics(&log)?);
        seeds.push(seed);
    }

    let scores = metrics.iter().map(|m| m.score(&cfg.scoring)).collect::<Result<Vec<_>, _>>()?;
    let behaviors = metrics.iter().map(|m| m.behavior.clone()).collect();
    let report = ScoreReport { rows: vec![ConstitutionSummary::new(&constitution.label, scores, behaviors)?] };
    dir.write("summary.json", &report.to_json())?;
    dir.write("summary.txt", &report.to_text())?;
    Ok(SimulateOutcome { dir: dir.path().to_path_buf(), seeds, log_paths, metrics, report, warnings })
}
