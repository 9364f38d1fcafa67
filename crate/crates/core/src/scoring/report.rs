use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{average_scores, BehaviorProfile, Category, ScoreError, StabilityScore};

/// All runs of one constitution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstitutionSummary {
    pub label: String,
    pub mean: StabilityScore,
    pub std: f64,
    pub runs: Vec<StabilityScore>,
    pub behaviors: Vec<BehaviorProfile>,
}

impl ConstitutionSummary {
    pub fn new(label: &str, runs: Vec<StabilityScore>, behaviors: Vec<BehaviorProfile>) -> Result<Self, ScoreError> {
        let mean = average_scores(&runs)?;
        let std = if runs.len() < 2 {
            0.0
        } else {
            let var = runs.iter().map(|r| (r.s - mean.s).powi(2)).sum::<f64>() / (runs.len() - 1) as f64;
            var.sqrt()
        };
        Ok(Self { label: label.to_string(), mean, std, runs, behaviors })
    }

    fn behavior_mean(&self, f: impl Fn(&BehaviorProfile) -> f64) -> f64 {
        if self.behaviors.is_empty() {
            return 0.0;
        }
        self.behaviors.iter().map(f).sum::<f64>() / self.behaviors.len() as f64
    }

    fn latency(&self) -> Option<f64> {
        let xs: Vec<f64> = self.behaviors.iter().filter_map(|b| b.deposit_latency).collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Performance, decomposition, behavior and efficiency tables for a set of constitutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub rows: Vec<ConstitutionSummary>,
}

fn pct(x: f64) -> String {
    format!("{:.0}%", x * 100.0)
}

impl ScoreReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ =
            writeln!(out, "{:<16} {:>15} {:>6} {:>6} {:>6} {:>4}", "constitution", "S", "prod", "surv", "conf", "N");
        for r in &self.rows {
            let m = &r.mean;
            let _ = writeln!(
                out,
                "{:<16} {:>15} {:>6} {:>6} {:>6} {:>4}",
                r.label,
                format!("{:.3} ± {:.3}", m.s, r.std),
                pct(m.p),
                pct(m.v),
                pct(m.c),
                m.run_count
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<16} {:>8} {:>8} {:>8} {:>8}", "constitution", "aP", "bV", "-gC", "S");
        for r in &self.rows {
            let (a, b, g) = r.mean.components;
            let _ = writeln!(out, "{:<16} {:>8.3} {:>8.3} {:>8.3} {:>8.3}", r.label, a, b, g, r.mean.s);
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<16} {:>10} {:>10} {:>10} {:>8} {:>13} {:>14} {:>8}",
            "constitution", "productive", "aggressive", "social", "idle", "gathers/agent", "deposits/agent", "latency"
        );
        for r in &self.rows {
            let f = |c: Category| pct(r.behavior_mean(|b| b.fraction(c)));
            let latency = r.latency().map(|l| format!("{l:.1}")).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                out,
                "{:<16} {:>10} {:>10} {:>10} {:>8} {:>13.1} {:>14.1} {:>8}",
                r.label,
                f(Category::Productive),
                f(Category::Aggressive),
                f(Category::Social),
                f(Category::Idle),
                r.behavior_mean(|b| b.gathers_per_agent),
                r.behavior_mean(|b| b.deposits_per_agent),
                latency
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::{stability_score, Coefficients};
    use super::*;

    #[test]
    fn summary_std_and_tables() {
        let d = Coefficients::default();
        let runs =
            vec![stability_score(1.0, 1.0 / 3.0, 0.0, &d).unwrap(), stability_score(0.8, 1.0 / 3.0, 0.0, &d).unwrap()];
        let s = ConstitutionSummary::new("c_star", runs, vec![]).unwrap();
        assert!((s.mean.s - 0.55).abs() < 1e-12);
        assert!((s.std - (0.005f64).sqrt()).abs() < 1e-12);
        let text = ScoreReport { rows: vec![s] }.to_text();
        assert!(text.contains("c_star"));
        assert!(text.contains("0.550 ± 0.071"));
    }
}
