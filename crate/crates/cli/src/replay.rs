use std::path::Path;

use anyhow::{Context, Result};
use society_core::world::{replay, Divergence, ParsedLog};

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub verified_turns: u32,
    pub divergence: Option<Divergence>,
    pub warnings: Vec<String>,
}

impl ReplayOutcome {
    pub fn verified(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Re-executes a log from its header and recorded actions, checking every state hash.
pub fn run_replay(path: &Path) -> Result<ReplayOutcome> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let parsed = ParsedLog::parse(&text, false).with_context(|| format!("in {}", path.display()))?;
    let mut warnings = Vec::new();
    if parsed.footer.is_none() {
        warnings.push("log has no footer record; final state not checked".to_string());
    }
    let report = replay(&parsed)?;
    warnings.extend(report.warnings);
    Ok(ReplayOutcome { verified_turns: report.verified_turns, divergence: report.divergence, warnings })
}
