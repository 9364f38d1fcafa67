//! Run harness for the society workbench: configuration loading, the
//! simulate / evolve / analyze / replay verbs and run-directory output.

pub mod analyze;
pub mod config;
pub mod evolve;
pub mod replay;
mod rundir;
pub mod simulate;

pub use analyze::{run_analyze, AnalyzeOutcome};
pub use config::{load_constitution, Mode, MutatorKind, PolicyKind, RunConfig, CONFIG_FORMAT};
pub use evolve::{run_evolve, run_evolve_with, EvolveOutcome};
pub use replay::{run_replay, ReplayOutcome};
pub use rundir::RunDir;
pub use simulate::{run_simulate, run_simulate_with, SimulateOutcome};
