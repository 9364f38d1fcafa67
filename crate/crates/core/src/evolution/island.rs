use rand::Rng;
use serde::{Deserialize, Serialize};

use super::archive::{try_insert, Candidate, EliteMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Elite,
    Exploitation,
    Exploration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Island {
    pub id: usize,
    pub capacity: usize,
    pub population: Vec<Candidate>,
    pub archive: EliteMap,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("island {0} has no candidates")]
pub struct EmptyIsland(pub usize);

/// Lower bound on selection weight so zero-fitness candidates stay drawable.
pub const FITNESS_FLOOR: f64 = 1e-6;

impl Island {
    pub fn new(id: usize, capacity: usize, bins: usize, score_max: f64) -> Self {
        Self { id, capacity, population: Vec::new(), archive: EliteMap::new(bins, score_max) }
    }

    /// Adds to the population and archive, then evicts the least fit
    /// (latest arrival among equals) while over capacity. Returns the evicted labels.
    pub fn admit(&mut self, cand: Candidate) -> (bool, Vec<String>) {
        let archived = try_insert(&mut self.archive, &cand);
        self.population.push(cand);
        let mut evicted = Vec::new();
        while self.population.len() > self.capacity {
            let worst = self
                .population
                .iter()
                .enumerate()
                .min_by(|(i, a), (j, b)| a.fitness.total_cmp(&b.fitness).then(j.cmp(i)))
                .map(|(i, _)| i)
                .expect("population non-empty");
            evicted.push(self.population.remove(worst).constitution.label);
        }
        (archived, evicted)
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.population.iter().chain(self.archive.cells.values()).max_by(|a, b| a.fitness.total_cmp(&b.fitness))
    }

    /// Population sorted by fitness, best first; ties keep arrival order.
    pub fn ranked(&self) -> Vec<&Candidate> {
        let mut v: Vec<&Candidate> = self.population.iter().collect();
        v.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
        v
    }
}

/// Draws the mode with probabilities (elite, exploitation, exploration).
pub fn draw_mode(ratios: (f64, f64, f64), rng: &mut impl Rng) -> SelectionMode {
    let u: f64 = rng.random();
    if u < ratios.0 {
        SelectionMode::Elite
    } else if u < ratios.0 + ratios.1 {
        SelectionMode::Exploitation
    } else {
        SelectionMode::Exploration
    }
}

pub fn select_parent(
    island: &Island,
    ratios: (f64, f64, f64),
    rng: &mut impl Rng,
) -> Result<(SelectionMode, Candidate), EmptyIsland> {
    let mode = draw_mode(ratios, rng);
    select_parent_with(island, mode, ratios.0, rng).map(|c| (mode, c))
}

/// Elite: uniform over the top `elite_ratio` of archive cells by fitness.
/// Exploitation: fitness-proportional over the population. Exploration:
/// uniform over archive cells. A mode whose pool is empty uses the other pool.
pub fn select_parent_with(
    island: &Island,
    mode: SelectionMode,
    elite_ratio: f64,
    rng: &mut impl Rng,
) -> Result<Candidate, EmptyIsland> {
    let archive: Vec<&Candidate> = island.archive.cells.values().collect();
    let population: Vec<&Candidate> = island.population.iter().collect();
    if archive.is_empty() && population.is_empty() {
        return Err(EmptyIsland(island.id));
    }
    let uniform = |pool: &[&Candidate], rng: &mut dyn rand::RngCore| pool[rng.random_range(0..pool.len())].clone();
    let chosen = match mode {
        SelectionMode::Elite if !archive.is_empty() => {
            let mut ranked = archive.clone();
            ranked.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
            let k = ((elite_ratio * ranked.len() as f64).ceil() as usize).clamp(1, ranked.len());
            uniform(&ranked[..k], rng)
        }
        SelectionMode::Exploration if !archive.is_empty() => uniform(&archive, rng),
        _ => {
            let pool = if population.is_empty() { &archive } else { &population };
            let weights: Vec<f64> = pool.iter().map(|c| c.fitness.max(FITNESS_FLOOR)).collect();
            let total: f64 = weights.iter().sum();
            let mut x = rng.random::<f64>() * total;
            let mut pick = pool.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if x < *w {
                    pick = i;
                    break;
                }
                x -= w;
            }
            pool[pick].clone()
        }
    };
    Ok(chosen)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationMove {
    pub from: usize,
    pub to: usize,
    pub label: String,
    pub fitness: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MigrationReport {
    pub moves: Vec<MigrationMove>,
    /// (island, label) pairs evicted to respect the population bound.
    pub evicted: Vec<(usize, String)>,
}

impl MigrationReport {
    pub fn sent_by(&self, island: usize) -> usize {
        self.moves.iter().filter(|m| m.from == island).count()
    }
}

/// Copies the top `count` of every island to its ring neighbour. Sources are
/// snapshotted first so a migrant never travels two hops in one event.
pub fn migrate(islands: &mut [Island], count: usize) -> MigrationReport {
    let n = islands.len();
    let mut report = MigrationReport::default();
    if n < 2 {
        return report;
    }
    let outgoing: Vec<Vec<Candidate>> =
        islands.iter().map(|isl| isl.ranked().into_iter().take(count).cloned().collect()).collect();
    for (from, migrants) in outgoing.into_iter().enumerate() {
        let to = (from + 1) % n;
        for cand in migrants {
            report.moves.push(MigrationMove {
                from,
                to,
                label: cand.constitution.label.clone(),
                fitness: cand.fitness,
            });
            let (_, evicted) = islands[to].admit(cand);
            report.evicted.extend(evicted.into_iter().map(|l| (to, l)));
        }
    }
    report
}
