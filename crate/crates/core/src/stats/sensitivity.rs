use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scoring::{stability_score, Coefficients, ScoreError};

/// α ∈ {0.4, 0.5, 0.6} × β ∈ {0.2, 0.3, 0.4} × γ ∈ {0.1, 0.2, 0.3}.
pub fn default_triples() -> Vec<Coefficients> {
    let mut out = Vec::with_capacity(27);
    for alpha in [0.4, 0.5, 0.6] {
        for beta in [0.2, 0.3, 0.4] {
            for gamma in [0.1, 0.2, 0.3] {
                out.push(Coefficients { alpha, beta, gamma });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub coefficients: Coefficients,
    pub scores: BTreeMap<String, f64>,
    /// Labels from best to worst; ties keep label order.
    pub ranking: Vec<String>,
    /// Reference order holds with strict inequalities.
    pub preserved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityGrid {
    pub reference: Vec<String>,
    pub rows: Vec<GridRow>,
    pub preserved_everywhere: bool,
}

impl SensitivityGrid {
    pub fn preserved_count(&self) -> usize {
        self.rows.iter().filter(|r| r.preserved).count()
    }
}

/// Scores every label under every coefficient triple. `reference` is the
/// expected best-to-worst order; when empty, the ranking under default
/// coefficients is used.
pub fn sensitivity_grid(
    metrics: &BTreeMap<String, (f64, f64, f64)>,
    triples: &[Coefficients],
    reference: &[String],
) -> Result<SensitivityGrid, ScoreError> {
    let rank = |coeffs: &Coefficients| -> Result<(BTreeMap<String, f64>, Vec<String>), ScoreError> {
        let mut scores = BTreeMap::new();
        for (label, &(p, v, c)) in metrics {
            scores.insert(label.clone(), stability_score(p, v, c, coeffs)?.s);
        }
        let mut ranking: Vec<String> = scores.keys().cloned().collect();
        ranking.sort_by(|a, b| scores[b].total_cmp(&scores[a]));
        Ok((scores, ranking))
    };
    let reference = if reference.is_empty() { rank(&Coefficients::default())?.1 } else { reference.to_vec() };
    let mut rows = Vec::with_capacity(triples.len());
    for coeffs in triples {
        let (scores, ranking) = rank(coeffs)?;
        let preserved = reference.iter().all(|l| scores.contains_key(l))
            && reference.windows(2).all(|w| scores[&w[0]] > scores[&w[1]]);
        rows.push(GridRow { coefficients: *coeffs, scores, ranking, preserved });
    }
    let preserved_everywhere = !rows.is_empty() && rows.iter().all(|r| r.preserved);
    Ok(SensitivityGrid { reference, rows, preserved_everywhere })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_27_distinct_triples() {
        let t = default_triples();
        assert_eq!(t.len(), 27);
        assert!(t.contains(&Coefficients::default()));
    }

    #[test]
    fn single_default_triple_matches_stability_score() {
        let metrics: BTreeMap<String, (f64, f64, f64)> =
            [("a".to_string(), (0.7, 0.5, 0.3)), ("b".to_string(), (0.2, 0.1, 0.0))].into();
        let grid = sensitivity_grid(&metrics, &[Coefficients::default()], &[]).unwrap();
        let expected = stability_score(0.7, 0.5, 0.3, &Coefficients::default()).unwrap().s;
        assert_eq!(grid.rows[0].scores["a"], expected);
        assert_eq!(grid.reference, vec!["a".to_string(), "b".to_string()]);
        assert!(grid.preserved_everywhere);
    }

    #[test]
    fn ties_break_preservation() {
        let metrics: BTreeMap<String, (f64, f64, f64)> =
            [("a".to_string(), (0.0, 0.0, 1.0)), ("b".to_string(), (0.0, 0.0, 0.5))].into();
        let grid = sensitivity_grid(&metrics, &default_triples(), &["a".into(), "b".into()]).unwrap();
        assert_eq!(grid.preserved_count(), 0);
    }
}
