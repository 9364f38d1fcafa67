use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    cohens_d, default_triples, mann_whitney_u, mean_std_ci, sensitivity_grid, welch_t, CohensD, MannWhitney, SampleSet,
    SensitivityGrid, StatsError, WelchResult,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTests {
    pub a: String,
    pub b: String,
    pub welch: Option<WelchResult>,
    pub cohens_d: Option<CohensD>,
    pub mann_whitney: MannWhitney,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub level: f64,
    pub summaries: Vec<SetSummary>,
    pub pairwise: Vec<PairwiseTests>,
    pub sensitivity: Option<SensitivityGrid>,
}

impl AnalysisReport {
    /// Summaries for every set, tests of `reference` (default: highest mean)
    /// against each other set, and the default sensitivity grid when metric
    /// triples are supplied.
    pub fn build(
        sets: &[SampleSet],
        reference: Option<&str>,
        metrics: Option<&BTreeMap<String, (f64, f64, f64)>>,
        level: f64,
    ) -> Result<AnalysisReport, StatsError> {
        let mut summaries = Vec::new();
        for s in sets {
            let ci = mean_std_ci(s, level)?;
            summaries.push(SetSummary {
                label: s.label.clone(),
                n: s.n(),
                mean: ci.mean,
                std: ci.std,
                min: s.min(),
                max: s.max(),
                ci: ci.ci,
            });
        }
        let reference = match reference {
            Some(label) => sets.iter().find(|s| s.label == label),
            None => sets.iter().max_by(|a, b| a.mean().total_cmp(&b.mean())),
        };
        let mut pairwise = Vec::new();
        if let Some(r) = reference {
            for other in sets.iter().filter(|s| s.label != r.label) {
                pairwise.push(PairwiseTests {
                    a: r.label.clone(),
                    b: other.label.clone(),
                    welch: welch_t(r, other).ok(),
                    cohens_d: cohens_d(r, other).ok(),
                    mann_whitney: mann_whitney_u(r, other),
                });
            }
        }
        let sensitivity = match metrics {
            Some(m) if !m.is_empty() => sensitivity_grid(m, &default_triples(), &[]).ok(),
            _ => None,
        };
        Ok(AnalysisReport { level, summaries, pairwise, sensitivity })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let pct = (self.level * 100.0).round();
        let _ = writeln!(
            out,
            "{:<16} {:>3} {:>7} {:>7} {:>7} {:>7}  {}% CI",
            "constitution", "N", "mean", "std", "min", "max", pct
        );
        for s in &self.summaries {
            let ci = match s.ci {
                Some((lo, hi)) => format!("[{lo:.3}, {hi:.3}]"),
                None => "n/a".into(),
            };
            let _ = writeln!(
                out,
                "{:<16} {:>3} {:>7.3} {:>7.3} {:>7.3} {:>7.3}  {}",
                s.label, s.n, s.mean, s.std, s.min, s.max, ci
            );
        }
        for p in &self.pairwise {
            let _ = writeln!(out, "\n{} vs {}", p.a, p.b);
            match &p.welch {
                Some(w) if w.degenerate => {
                    let _ = writeln!(out, "  Welch t: {} (zero variance in both sets)", w.t);
                }
                Some(w) => {
                    let _ = writeln!(
                        out,
                        "  Welch t = {:.3}, df = {:.2}, p = {:.2e}",
                        w.t,
                        w.df,
                        w.p_value.unwrap_or(f64::NAN)
                    );
                }
                None => {
                    let _ = writeln!(out, "  Welch t: needs n >= 2 in both sets");
                }
            }
            if let Some(d) = &p.cohens_d {
                let _ = writeln!(out, "  Cohen's d = {:.3} (pooled std {:.4})", d.d, d.pooled_std);
            }
            let mw = &p.mann_whitney;
            let _ = writeln!(
                out,
                "  Mann-Whitney U = {} ({:?}), significant at 0.01: {}",
                mw.u,
                mw.method,
                if mw.significant { "yes" } else { "no" }
            );
        }
        if let Some(grid) = &self.sensitivity {
            let _ = writeln!(out, "\nsensitivity: reference order {}", grid.reference.join(" > "));
            let _ = writeln!(out, "{:>5} {:>5} {:>5}  preserved", "alpha", "beta", "gamma");
            for row in &grid.rows {
                let c = row.coefficients;
                let _ = writeln!(
                    out,
                    "{:>5.2} {:>5.2} {:>5.2}  {}",
                    c.alpha,
                    c.beta,
                    c.gamma,
                    if row.preserved { "yes" } else { "no" }
                );
            }
            let _ = writeln!(out, "preserved in {}/{} triples", grid.preserved_count(), grid.rows.len());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_picks_best_mean_as_reference() {
        let a = SampleSet::new("low", vec![0.1, 0.2, 0.15]).unwrap();
        let b = SampleSet::new("high", vec![0.5, 0.6, 0.55]).unwrap();
        let r = AnalysisReport::build(&[a, b], None, None, 0.95).unwrap();
        assert_eq!(r.pairwise.len(), 1);
        assert_eq!(r.pairwise[0].a, "high");
        let text = r.to_text();
        assert!(text.contains("high vs low"));
        assert!(text.contains("95% CI"));
    }
}
