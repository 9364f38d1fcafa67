//! Run configuration.
//!
//! One YAML file drives every verb. The evolution sections use the layout
//! `general / islands / migration / selection / feature_map / evaluation / llm`,
//! so a bare evolution listing in that shape is already a valid config.
//! Endpoint credentials are read from the environment only.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use society_core::constitution::{self, baseline, BaselineName, Constitution};
use society_core::evolution::EvolutionConfig;
use society_core::policy::chat::ChatEndpointConfig;
use society_core::scoring::Coefficients;
use society_core::world::{AgentId, WorldConfig};

pub const CONFIG_FORMAT: &str = "society-run/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Evolve,
    Analyze,
    Replay,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Scripted,
    Llm,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MutatorKind {
    #[default]
    Mock,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct General {
    pub max_iterations: u32,
    pub random_seed: u64,
    pub early_stopping_patience: usize,
    pub convergence_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Islands {
    pub num_islands: usize,
    pub population_size: usize,
    pub topology: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Migration {
    pub interval: u32,
    pub rate: f64,
    pub selection: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Selection {
    pub elite_ratio: f64,
    pub exploitation_ratio: f64,
    pub exploration_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureMap {
    pub dimensions: Vec<String>,
    pub bins: usize,
    /// Score mapped to the top bin of the score axis.
    pub score_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Evaluation {
    pub num_runs: usize,
    /// Upper bound on any single chat request made while evaluating.
    pub timeout_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub format: String,
    pub mode: Option<Mode>,
    /// Baseline name or path to a constitution file.
    pub constitution: String,
    /// Episodes per simulate run.
    pub runs: usize,
    pub output_dir: PathBuf,
    /// Policy for every agent not listed in `agent_policies`.
    pub policy: PolicyKind,
    pub agent_policies: BTreeMap<AgentId, PolicyKind>,
    pub mutator: MutatorKind,
    /// Let the language-model mutator fall back to the mock operators.
    pub allow_fallback: bool,
    pub world: WorldConfig,
    pub scoring: Coefficients,
    pub general: General,
    pub islands: Islands,
    pub migration: Migration,
    pub selection: Selection,
    pub feature_map: FeatureMap,
    pub evaluation: Evaluation,
    pub llm: ChatEndpointConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let evo = EvolutionConfig::default();
        Self {
            format: CONFIG_FORMAT.into(),
            mode: None,
            constitution: BaselineName::CStar.as_str().into(),
            runs: 10,
            output_dir: PathBuf::from("runs"),
            policy: PolicyKind::Scripted,
            agent_policies: BTreeMap::new(),
            mutator: MutatorKind::Mock,
            allow_fallback: true,
            world: WorldConfig::default(),
            scoring: Coefficients::default(),
            general: General {
                max_iterations: evo.max_iterations,
                random_seed: evo.seed,
                early_stopping_patience: evo.early_stopping_patience,
                convergence_threshold: evo.convergence_threshold,
            },
            islands: Islands {
                num_islands: evo.num_islands,
                population_size: evo.population_size,
                topology: "ring".into(),
            },
            migration: Migration {
                interval: evo.migration_interval,
                rate: evo.migration_rate,
                selection: "best".into(),
            },
            selection: Selection {
                elite_ratio: evo.elite_ratio,
                exploitation_ratio: evo.exploitation_ratio,
                exploration_ratio: evo.exploration_ratio,
            },
            feature_map: FeatureMap {
                dimensions: vec!["complexity".into(), "combined_score".into()],
                bins: evo.feature_bins,
                score_max: evo.score_max,
            },
            evaluation: Evaluation { num_runs: evo.eval_runs, timeout_seconds: 300.0 },
            llm: ChatEndpointConfig::default(),
        }
    }
}

macro_rules! section_defaults {
    ($($ty:ident => $field:ident),*) => {$(
        impl Default for $ty {
            fn default() -> Self {
                RunConfig::default().$field
            }
        }
    )*};
}

section_defaults!(
    General => general,
    Islands => islands,
    Migration => migration,
    Selection => selection,
    FeatureMap => feature_map,
    Evaluation => evaluation
);

impl RunConfig {
    pub fn from_yaml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_yaml::from_str(text).context("invalid run config")?;
        if cfg.format != CONFIG_FORMAT {
            bail!("unsupported config format {:?} (expected {CONFIG_FORMAT:?})", cfg.format);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_yaml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("config serializes")
    }

    /// The copy stored inside a run directory; `output_dir` points at that directory itself.
    pub fn snapshot(&self) -> String {
        RunConfig { output_dir: PathBuf::from("."), ..self.clone() }.to_yaml()
    }

    pub fn seed(&self) -> u64 {
        self.general.random_seed
    }

    pub fn policy_for(&self, agent: AgentId) -> PolicyKind {
        self.agent_policies.get(&agent).copied().unwrap_or(self.policy)
    }

    pub fn uses_llm_policy(&self) -> bool {
        (1..=self.world.n_agents).any(|id| self.policy_for(id) == PolicyKind::Llm)
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            max_iterations: self.general.max_iterations,
            num_islands: self.islands.num_islands,
            population_size: self.islands.population_size,
            migration_interval: self.migration.interval,
            migration_rate: self.migration.rate,
            elite_ratio: self.selection.elite_ratio,
            exploitation_ratio: self.selection.exploitation_ratio,
            exploration_ratio: self.selection.exploration_ratio,
            eval_runs: self.evaluation.num_runs,
            early_stopping_patience: self.general.early_stopping_patience,
            convergence_threshold: self.general.convergence_threshold,
            feature_bins: self.feature_map.bins,
            score_max: self.feature_map.score_max,
            coefficients: self.scoring,
            seed: self.general.random_seed,
        }
    }

    /// Endpoint settings with the environment override applied and the
    /// evaluation timeout as an upper bound.
    pub fn endpoint(&self) -> ChatEndpointConfig {
        let mut e = self.llm.clone().with_env();
        e.timeout_secs = e.timeout_secs.min(self.evaluation.timeout_seconds);
        e
    }

    pub fn validate(&self, mode: Mode) -> Result<()> {
        self.world.validate().context("world")?;
        self.scoring.validate().context("scoring")?;
        for &id in self.agent_policies.keys() {
            ensure!((1..=self.world.n_agents).contains(&id), "agent_policies: no agent {id}");
        }
        match mode {
            Mode::Simulate => {
                ensure!(self.runs >= 1, "runs must be at least 1");
                if self.uses_llm_policy() {
                    self.endpoint().validate().context("llm")?;
                }
            }
            Mode::Evolve => {
                self.evolution_config().validate()?;
                ensure!(self.islands.topology == "ring", "islands.topology: only \"ring\" is supported");
                ensure!(self.migration.selection == "best", "migration.selection: only \"best\" is supported");
                ensure!(
                    self.feature_map.dimensions == ["complexity", "combined_score"],
                    "feature_map.dimensions must be [complexity, combined_score]"
                );
                ensure!(!self.uses_llm_policy(), "evolve evaluates candidates with scripted policies only");
                if self.mutator == MutatorKind::Llm {
                    self.endpoint().validate().context("llm")?;
                }
            }
            Mode::Analyze | Mode::Replay => {}
        }
        Ok(())
    }

    /// Resolves `constitution` as a baseline name first, then as a file path.
    pub fn load_constitution(&self) -> Result<Constitution> {
        load_constitution(&self.constitution)
    }
}

pub fn load_constitution(source: &str) -> Result<Constitution> {
    if let Ok(name) = source.parse::<BaselineName>() {
        return Ok(baseline(name));
    }
    let path = Path::new(source);
    if !path.exists() {
        bail!("constitution {source:?} is neither a baseline name nor an existing file");
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    constitution::parse(&text).with_context(|| format!("invalid constitution file {}", path.display()))
}
