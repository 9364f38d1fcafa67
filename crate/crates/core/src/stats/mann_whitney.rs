use serde::{Deserialize, Serialize};

use super::SampleSet;

/// Largest size for which significance uses the exact null distribution.
pub const EXACT_MAX_N: usize = 20;
pub const ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// Pairs where a beats b, ties counted one half.
    pub u_a: f64,
    pub u_b: f64,
    /// min(u_a, u_b)
    pub u: f64,
    /// Two-sided significance at 0.01.
    pub significant: bool,
    pub method: MwMethod,
    pub critical_value: Option<u64>,
}

/// Counts of arrangements with each U value for sizes (m, n): `counts[u]`.
fn null_distribution(m: usize, n: usize) -> Vec<f64> {
    // f(i, j, u) = f(i−1, j, u−j) + f(i, j−1, u)
    let max_u = m * n;
    let mut table: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n + 1]; m + 1];
    for i in 0..=m {
        for j in 0..=n {
            let mut row = vec![0.0; i * j + 1];
            if i == 0 || j == 0 {
                row[0] = 1.0;
            } else {
                for (u, slot) in row.iter_mut().enumerate() {
                    let from_a = if u >= j { table[i - 1][j].get(u - j).copied().unwrap_or(0.0) } else { 0.0 };
                    let from_b = table[i][j - 1].get(u).copied().unwrap_or(0.0);
                    *slot = from_a + from_b;
                }
            }
            table[i][j] = row;
        }
    }
    let mut out = std::mem::take(&mut table[m][n]);
    out.resize(max_u + 1, 0.0);
    out
}

/// Largest c with `P(U ≤ c) ≤ alpha / 2` under the null, from the exact
/// distribution. `None` when even U = 0 is too likely.
pub fn mw_critical_value(m: usize, n: usize, alpha: f64) -> Option<u64> {
    if m == 0 || n == 0 {
        return None;
    }
    let counts = null_distribution(m, n);
    let total: f64 = counts.iter().sum();
    let mut cumulative = 0.0;
    let mut best = None;
    for (u, c) in counts.iter().enumerate() {
        cumulative += c;
        if cumulative / total <= alpha / 2.0 {
            best = Some(u as u64);
        } else {
            break;
        }
    }
    best
}

fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = rank;
        }
        tie_sizes.push(j - i + 1);
        i = j + 1;
    }
    (ranks, tie_sizes)
}

pub fn mann_whitney_u(a: &SampleSet, b: &SampleSet) -> MannWhitney {
    let (na, nb) = (a.n(), b.n());
    let pooled: Vec<f64> = a.values.iter().chain(&b.values).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u_a = rank_sum_a - (na * (na + 1)) as f64 / 2.0;
    let u_b = (na * nb) as f64 - u_a;
    let u = u_a.min(u_b);

    if na <= EXACT_MAX_N && nb <= EXACT_MAX_N {
        let critical_value = mw_critical_value(na, nb, ALPHA);
        let significant = critical_value.is_some_and(|c| u <= c as f64);
        return MannWhitney { u_a, u_b, u, significant, method: MwMethod::Exact, critical_value };
    }
    let n = (na + nb) as f64;
    let mean = (na * nb) as f64 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / (n * (n - 1.0));
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term);
    let z = if var > 0.0 { (u - mean).abs() / var.sqrt() } else { 0.0 };
    // Two-sided 0.01 normal critical value.
    let significant = z >= 2.5758293035489;
    MannWhitney { u_a, u_b, u, significant, method: MwMethod::Normal, critical_value: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[f64]) -> SampleSet {
        SampleSet::new("x", v.to_vec()).unwrap()
    }

    /// Brute-force U: count pairs, ties as one half.
    fn pair_count(a: &[f64], b: &[f64]) -> f64 {
        let mut u = 0.0;
        for x in a {
            for y in b {
                if x > y {
                    u += 1.0;
                } else if x == y {
                    u += 0.5;
                }
            }
        }
        u
    }

    #[test]
    fn hand_cases() {
        let r = mann_whitney_u(&set(&[1.0, 2.0]), &set(&[3.0, 4.0]));
        assert_eq!(r.u_a, 0.0);
        assert_eq!(r.u_b, 4.0);
        let same = [0.5; 6];
        let r = mann_whitney_u(&set(&same), &set(&same));
        assert_eq!(r.u_a, 18.0);
        assert!(!r.significant);
    }

    #[test]
    fn rank_sum_matches_pair_count() {
        let a = [0.3, 0.1, 0.7, 0.7, 0.2, 0.9];
        let b = [0.7, 0.4, 0.1, 0.8];
        let r = mann_whitney_u(&set(&a), &set(&b));
        assert_eq!(r.u_a, pair_count(&a, &b));
        assert_eq!(r.u_a + r.u_b, 24.0);
    }

    #[test]
    fn exact_critical_values() {
        // Published two-sided 0.01 table entries.
        assert_eq!(mw_critical_value(10, 10, 0.01), Some(16));
        assert_eq!(mw_critical_value(5, 5, 0.01), Some(0));
        assert_eq!(mw_critical_value(8, 8, 0.01), Some(7));
        assert_eq!(mw_critical_value(20, 20, 0.01), Some(105));
        assert_eq!(mw_critical_value(3, 3, 0.01), None);
    }

    #[test]
    fn null_distribution_is_symmetric_and_complete() {
        let d = null_distribution(4, 6);
        assert_eq!(d.iter().sum::<f64>(), 210.0);
        for u in 0..d.len() {
            assert_eq!(d[u], d[d.len() - 1 - u]);
        }
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..30).map(|i| i as f64 + 100.0).collect();
        let r = mann_whitney_u(&set(&a), &set(&b));
        assert_eq!(r.method, MwMethod::Normal);
        assert_eq!(r.u, 0.0);
        assert!(r.significant);
    }
}
