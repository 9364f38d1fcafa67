use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use society_core::scoring::{trajectory_metrics, Coefficients, ConstitutionSummary, ScoreReport};
use society_core::stats::{AnalysisReport, SampleSet};
use society_core::world::{replay, ParsedLog, TrajectoryLog};
use walkdir::WalkDir;

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeOutcome {
    pub logs_read: usize,
    pub scores: ScoreReport,
    pub analysis: AnalysisReport,
    pub warnings: Vec<String>,
}

impl AnalyzeOutcome {
    pub fn to_text(&self) -> String {
        let mut out = self.scores.to_text();
        out.push('\n');
        out.push_str(&self.analysis.to_text());
        if !self.warnings.is_empty() {
            out.push_str(&format!("\n{} warnings:\n", self.warnings.len()));
            for w in &self.warnings {
                out.push_str(&format!("  {w}\n"));
            }
        }
        out
    }
}

/// Trajectory log files under `inputs`; directories are searched recursively.
fn collect(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            for entry in WalkDir::new(input).sort_by_file_name() {
                let entry = entry.with_context(|| format!("cannot list {}", input.display()))?;
                let p = entry.path();
                if entry.file_type().is_file()
                    && p.extension().is_some_and(|e| e == "jsonl")
                    && p.file_name().is_some_and(|n| n != "history.jsonl")
                {
                    files.push(p.to_path_buf());
                }
            }
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            bail!("no such log or directory: {}", input.display());
        }
    }
    Ok(files)
}

/// Reads and replays one log. `Ok(None)` means it was skipped; the reasons are in `warnings`.
fn load(path: &Path, warnings: &mut Vec<String>) -> Result<Option<TrajectoryLog>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let shown = path.display();
    let parsed = match ParsedLog::parse(&text, true) {
        Ok(p) => p,
        Err(e) => {
            warnings.push(format!("{shown}: skipped: {e}"));
            return Ok(None);
        }
    };
    warnings.extend(parsed.warnings.iter().map(|w| format!("{shown}: {w}")));
    if parsed.footer.is_none() {
        warnings.push(format!("{shown}: skipped: no footer record"));
        return Ok(None);
    }
    let report = match replay(&parsed) {
        Ok(r) => r,
        Err(e) => {
            warnings.push(format!("{shown}: skipped: {e}"));
            return Ok(None);
        }
    };
    if let Some(d) = report.divergence {
        warnings.push(format!("{shown}: skipped: replay diverged at turn {} ({})", d.turn, d.detail));
        return Ok(None);
    }
    Ok(report.log)
}

/// Scores every readable log, groups them by label (split further by config
/// hash when one label spans several configs), and runs the statistics.
pub fn run_analyze(inputs: &[PathBuf], coefficients: &Coefficients, level: f64) -> Result<AnalyzeOutcome> {
    let files = collect(inputs)?;
    let mut warnings = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<TrajectoryLog>> = BTreeMap::new();
    for path in &files {
        if let Some(log) = load(path, &mut warnings)? {
            groups.entry((log.header.label.clone(), log.header.config_hash())).or_default().push(log);
        }
    }
    let logs_read: usize = groups.values().map(Vec::len).sum();
    if logs_read == 0 {
        bail!("no readable trajectory logs among {} file(s)", files.len());
    }

    let mut per_label: BTreeMap<&str, usize> = BTreeMap::new();
    for (label, _) in groups.keys() {
        *per_label.entry(label).or_default() += 1;
    }
    for (label, n) in &per_label {
        if *n > 1 {
            warnings.push(format!("label {label:?} spans {n} world configs; grouped by config hash"));
        }
    }

    let mut rows = Vec::new();
    let mut sets = Vec::new();
    let mut metrics = BTreeMap::new();
    for ((label, hash), logs) in &groups {
        let name = if per_label[label.as_str()] > 1 { format!("{label}@{}", &hash[..8]) } else { label.clone() };
        let mut scores = Vec::new();
        let mut behaviors = Vec::new();
        for log in logs {
            let m = trajectory_metrics(log)?;
            scores.push(m.score(coefficients)?);
            behaviors.push(m.behavior);
        }
        let summary = ConstitutionSummary::new(&name, scores, behaviors)?;
        sets.push(SampleSet::new(name.clone(), summary.runs.iter().map(|s| s.s).collect())?);
        metrics.insert(name, (summary.mean.p, summary.mean.v, summary.mean.c));
        rows.push(summary);
    }
    let analysis = AnalysisReport::build(&sets, None, Some(&metrics), level)?;
    Ok(AnalyzeOutcome { logs_read, scores: ScoreReport { rows }, analysis, warnings })
}
