//! Descriptive statistics, two-sample tests and coefficient sensitivity.

mod mann_whitney;
mod report;
mod sensitivity;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

pub use mann_whitney::{mann_whitney_u, mw_critical_value, MannWhitney, MwMethod};
pub use report::{AnalysisReport, PairwiseTests};
pub use sensitivity::{default_triples, sensitivity_grid, GridRow, SensitivityGrid};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("sample set '{0}' is empty")]
    Empty(String),
    #[error("sample set '{0}' contains a non-finite value")]
    NonFinite(String),
    #[error("need at least {need} samples, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("confidence level must be in (0, 1), got {0}")]
    BadLevel(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub label: String,
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self, StatsError> {
        let label = label.into();
        if values.is_empty() {
            return Err(StatsError::Empty(label));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(label));
        }
        Ok(Self { label, values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    /// Sample standard deviation (n − 1 denominator); 0 for a single value.
    pub fn std(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Student-t quantile `t` with `P(T ≤ t) = p`.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("df > 0").inverse_cdf(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStdCi {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub level: f64,
    /// Critical value `t_{(1−level)/2, n−1}`; absent when n < 2.
    pub t_crit: Option<f64>,
    pub ci: Option<(f64, f64)>,
}

/// Confidence interval from summary statistics.
pub fn ci_from_summary(mean: f64, std: f64, n: usize, level: f64) -> Result<MeanStdCi, StatsError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::BadLevel(level));
    }
    if n < 2 {
        return Ok(MeanStdCi { n, mean, std, level, t_crit: None, ci: None });
    }
    let t = t_quantile(1.0 - (1.0 - level) / 2.0, (n - 1) as f64);
    let half = t * std / (n as f64).sqrt();
    Ok(MeanStdCi { n, mean, std, level, t_crit: Some(t), ci: Some((mean - half, mean + half)) })
}

pub fn mean_std_ci(s: &SampleSet, level: f64) -> Result<MeanStdCi, StatsError> {
    ci_from_summary(s.mean(), s.std(), s.n(), level)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value; absent when both variances are zero.
    pub p_value: Option<f64>,
    /// Both variances are zero, so t is infinite (or zero for equal means).
    pub degenerate: bool,
}

/// Summary statistics of one sample: (mean, std, n).
pub type Summary = (f64, f64, usize);

pub fn welch_from_summary(a: Summary, b: Summary) -> Result<WelchResult, StatsError> {
    let (ma, sa, na) = a;
    let (mb, sb, nb) = b;
    if na < 2 || nb < 2 {
        return Err(StatsError::TooFew { need: 2, got: na.min(nb) });
    }
    let va = sa * sa / na as f64;
    let vb = sb * sb / nb as f64;
    let se2 = va + vb;
    let diff = ma - mb;
    if se2 == 0.0 {
        let t = if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY };
        return Ok(WelchResult { t, df: f64::NAN, p_value: None, degenerate: true });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1) as f64 + vb * vb / (nb - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(WelchResult { t, df, p_value: Some(p.clamp(0.0, 1.0)), degenerate: false })
}

pub fn welch_t(a: &SampleSet, b: &SampleSet) -> Result<WelchResult, StatsError> {
    welch_from_summary((a.mean(), a.std(), a.n()), (b.mean(), b.std(), b.n()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohensD {
    pub d: f64,
    /// √((s_a² + s_b²) / 2)
    pub pooled_std: f64,
    /// Pooled std is zero.
    pub degenerate: bool,
}

/// Cohen's d with the equal-n pooled deviation `√((s_a² + s_b²) / 2)`.
pub fn cohens_d_from_summary(a: Summary, b: Summary) -> Result<CohensD, StatsError> {
    if a.2 < 2 || b.2 < 2 {
        return Err(StatsError::TooFew { need: 2, got: a.2.min(b.2) });
    }
    let pooled = ((a.1 * a.1 + b.1 * b.1) / 2.0).sqrt();
    let diff = a.0 - b.0;
    if pooled == 0.0 {
        let d = if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY };
        return Ok(CohensD { d, pooled_std: 0.0, degenerate: true });
    }
    Ok(CohensD { d: diff / pooled, pooled_std: pooled, degenerate: false })
}

pub fn cohens_d(a: &SampleSet, b: &SampleSet) -> Result<CohensD, StatsError> {
    cohens_d_from_summary((a.mean(), a.std(), a.n()), (b.mean(), b.std(), b.n()))
}
