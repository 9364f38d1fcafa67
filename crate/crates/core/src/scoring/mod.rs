//! Stability score, trajectory metrics and behavioral classification.

mod behavior;
mod report;

use serde::{Deserialize, Serialize};

use crate::world::{LogError, TrajectoryLog};

pub use behavior::{
    behavior_profile, classify_action, ActionContext, AgentEfficiency, BehaviorProfile, Category, WindowShare,
};
pub use report::{ConstitutionSummary, ScoreReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Self { alpha: 0.5, beta: 0.3, gamma: 0.2 }
    }
}

impl Coefficients {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, ScoreError> {
        let c = Self { alpha, beta, gamma };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ScoreError::NegativeCoefficient { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("coefficient {name} = {value} must be a non-negative number")]
    NegativeCoefficient { name: &'static str, value: f64 },
    #[error("cannot average an empty list of scores")]
    Empty,
    #[error("incomplete trajectory: {0}")]
    Truncated(String),
}

impl From<LogError> for ScoreError {
    fn from(e: LogError) -> Self {
        ScoreError::Truncated(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityScore {
    pub p: f64,
    pub v: f64,
    pub c: f64,
    pub s: f64,
    /// (αP, βV, −γC)
    pub components: (f64, f64, f64),
    pub coefficients: Coefficients,
    /// Both projects complete.
    pub success: bool,
    pub run_count: usize,
}

fn check_unit(name: &'static str, value: f64) -> Result<(), ScoreError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ScoreError::OutOfRange { name, value })
    }
}

/// `S = max(0, αP + βV − γC)`.
pub fn stability_score(p: f64, v: f64, c: f64, coeffs: &Coefficients) -> Result<StabilityScore, ScoreError> {
    check_unit("P", p)?;
    check_unit("V", v)?;
    check_unit("C", c)?;
    coeffs.validate()?;
    let components = (coeffs.alpha * p, coeffs.beta * v, -coeffs.gamma * c);
    let s = (components.0 + components.1 + components.2).max(0.0);
    Ok(StabilityScore { p, v, c, s, components, coefficients: *coeffs, success: p >= 1.0, run_count: 1 })
}

/// Mean of S over K runs.
pub fn expected_score(scores: &[StabilityScore]) -> Result<f64, ScoreError> {
    if scores.is_empty() {
        return Err(ScoreError::Empty);
    }
    Ok(scores.iter().map(|s| s.s).sum::<f64>() / scores.len() as f64)
}

/// Run-averaged score: component means, S as the mean of per-run S, and K.
pub fn average_scores(scores: &[StabilityScore]) -> Result<StabilityScore, ScoreError> {
    let s = expected_score(scores)?;
    let k = scores.len() as f64;
    let mean = |f: fn(&StabilityScore) -> f64| scores.iter().map(f).sum::<f64>() / k;
    Ok(StabilityScore {
        p: mean(|x| x.p),
        v: mean(|x| x.v),
        c: mean(|x| x.c),
        s,
        components: (mean(|x| x.components.0), mean(|x| x.components.1), mean(|x| x.components.2)),
        coefficients: scores[0].coefficients,
        success: scores.iter().all(|x| x.success),
        run_count: scores.len(),
    })
}

/// Weakly better on every axis (higher P and V, lower C), strictly on one.
pub fn pareto_dominates(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    let weak = a.0 >= b.0 && a.1 >= b.1 && a.2 <= b.2;
    let strict = a.0 > b.0 || a.1 > b.1 || a.2 < b.2;
    weak && strict
}

/// Conflict normalization cap: attempts beyond this count saturate C at 1.
pub const CONFLICT_CAP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMetrics {
    pub p: f64,
    pub v: f64,
    pub c: f64,
    /// Per-project progress in project order.
    pub project_progress: Vec<(String, f64)>,
    pub survivors: usize,
    pub conflict_attempts: u32,
    pub success: bool,
    pub behavior: BehaviorProfile,
}

impl TrajectoryMetrics {
    pub fn score(&self, coeffs: &Coefficients) -> Result<StabilityScore, ScoreError> {
        let mut s = stability_score(self.p, self.v, self.c, coeffs)?;
        s.success = self.success;
        Ok(s)
    }
}

pub fn trajectory_metrics(log: &TrajectoryLog) -> Result<TrajectoryMetrics, ScoreError> {
    if !log.is_complete() {
        return Err(ScoreError::Truncated(format!(
            "{} turn records for {} turns played",
            log.turns.len(),
            log.footer.turns_played
        )));
    }
    let projects = &log.footer.final_projects;
    let project_progress: Vec<(String, f64)> = projects.iter().map(|p| (p.name.clone(), p.progress())).collect();
    let p = if projects.is_empty() {
        0.0
    } else {
        project_progress.iter().map(|(_, x)| x).sum::<f64>() / projects.len() as f64
    };
    let n_agents = log.header.config.n_agents.max(1) as f64;
    let survivors = log.survivors();
    let conflict_attempts = log.conflict_attempts();
    Ok(TrajectoryMetrics {
        p,
        v: survivors as f64 / n_agents,
        c: (conflict_attempts as f64 / CONFLICT_CAP).min(1.0),
        project_progress,
        survivors,
        conflict_attempts,
        success: log.footer.success,
        behavior: behavior_profile(log),
    })
}

pub fn score_log(log: &TrajectoryLog, coeffs: &Coefficients) -> Result<StabilityScore, ScoreError> {
    trajectory_metrics(log)?.score(coeffs)
}
