use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use society_cli::{run_analyze, run_evolve, run_replay, run_simulate, MutatorKind, PolicyKind, RunConfig};

#[derive(Parser)]
#[command(name = "society", version, about = "Grid-world society simulation and constitution evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// YAML run config; built-in defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Base seed (overrides general.random_seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Baseline name (zero_sum, hhh, llm_generated, c_star) or constitution file.
    #[arg(long)]
    constitution: Option<String>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.general.random_seed = s;
        }
        if let Some(o) = &self.output {
            cfg.output_dir = o.clone();
        }
        if let Some(c) = &self.constitution {
            cfg.constitution = c.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run N seeded episodes of one constitution.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of episodes.
        #[arg(long, short = 'n')]
        runs: Option<usize>,
        /// Policy for every agent.
        #[arg(long, value_enum)]
        policy: Option<PolicyKind>,
    },
    /// Evolve a constitution with the island search.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        iterations: Option<u32>,
        #[arg(long, value_enum)]
        mutator: Option<MutatorKind>,
    },
    /// Score, compare and test trajectory logs or run directories.
    Analyze {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Config whose scoring coefficients are used.
        #[arg(long, short)]
        config: Option<PathBuf>,
        /// Confidence level for intervals.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Also write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Re-execute a log and verify every recorded state hash.
    Replay { log: PathBuf },
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { common, runs, policy } => {
            let mut cfg = common.load()?;
            if let Some(n) = runs {
                cfg.runs = n;
            }
            if let Some(p) = policy {
                cfg.policy = p;
                cfg.agent_policies.clear();
            }
            let out = run_simulate(&cfg)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", out.report.to_text());
            println!("\n{} logs written to {}", out.log_paths.len(), out.dir.join("logs").display());
        }
        Command::Evolve { common, iterations, mutator } => {
            let mut cfg = common.load()?;
            if let Some(n) = iterations {
                cfg.general.max_iterations = n;
            }
            if let Some(m) = mutator {
                cfg.mutator = m;
            }
            let out = run_evolve(&cfg, &mut std::io::stdout())?;
            println!("run directory: {}", out.dir.display());
        }
        Command::Analyze { inputs, config, level, json } => {
            let coefficients = match config {
                Some(p) => RunConfig::load(&p)?.scoring,
                None => Default::default(),
            };
            let out = run_analyze(&inputs, &coefficients, level)?;
            print!("{}", out.to_text());
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&out)?;
                std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
            }
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Replay { log } => {
            let out = run_replay(&log)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(d) = &out.divergence {
                eprintln!("diverged at turn {}: {} (expected {}, got {})", d.turn, d.detail, d.expected, d.actual);
                return Ok(ExitCode::from(2));
            }
            println!("verified {} turns", out.verified_turns);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
