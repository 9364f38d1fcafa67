use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::world::{Action, AgentId, Observation, Pos, Resource, TrajectoryLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Productive,
    Aggressive,
    Social,
    Idle,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Productive, Category::Aggressive, Category::Social, Category::Idle];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Productive => "productive",
            Category::Aggressive => "aggressive",
            Category::Social => "social",
            Category::Idle => "idle",
        }
    }
}

/// What the classifier knows about the acting agent at decision time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActionContext {
    pub position: Pos,
    /// Tiles the agent has seen stocking a resource its team still needs.
    pub known_needed_tiles: Vec<Pos>,
    /// The engine rejected the action (invalid target, empty tile, ...).
    pub failed: bool,
}

fn distance_to_nearest(from: Pos, tiles: &[Pos]) -> Option<u32> {
    tiles.iter().map(|t| from.manhattan(*t)).min()
}

pub fn classify_action(action: &Action, ctx: &ActionContext) -> Category {
    if ctx.failed {
        return Category::Idle;
    }
    match action {
        Action::Gather { .. } | Action::Deposit { .. } => Category::Productive,
        Action::Move { direction } => {
            let before = distance_to_nearest(ctx.position, &ctx.known_needed_tiles);
            let after = distance_to_nearest(ctx.position.step(*direction), &ctx.known_needed_tiles);
            match (before, after) {
                (Some(b), Some(a)) if a < b => Category::Productive,
                _ => Category::Idle,
            }
        }
        Action::Attack { .. } | Action::Steal { .. } => Category::Aggressive,
        Action::Broadcast { .. } | Action::PrivateMsg { .. } | Action::Give { .. } => Category::Social,
        Action::Rest => Category::Idle,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentEfficiency {
    pub gathers: u32,
    pub deposits: u32,
    pub deposited_units: u32,
    pub categories: BTreeMap<Category, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowShare {
    pub from_turn: u32,
    pub to_turn: u32,
    pub actions: u32,
    pub productive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorProfile {
    /// Share of all agent actions per category; sums to 1.
    pub fractions: BTreeMap<Category, f64>,
    pub counts: BTreeMap<Category, u32>,
    pub total_actions: u32,
    pub per_agent: BTreeMap<AgentId, AgentEfficiency>,
    pub gathers_per_agent: f64,
    pub deposits_per_agent: f64,
    /// Mean turns from gathering a unit to depositing it; `None` when nothing was deposited from gathers.
    pub deposit_latency: Option<f64>,
    pub windows: Vec<WindowShare>,
}

impl BehaviorProfile {
    pub fn fraction(&self, category: Category) -> f64 {
        self.fractions.get(&category).copied().unwrap_or(0.0)
    }
}

/// Last-known state of tiles seen by one agent.
#[derive(Default)]
struct Knowledge {
    stocks: BTreeMap<Pos, (Option<Resource>, u32)>,
}

impl Knowledge {
    fn update(&mut self, obs: &Observation) {
        for tile in &obs.visible_tiles {
            self.stocks.insert(tile.position, (tile.kind.resource(), tile.stock));
        }
    }

    fn needed_tiles(&self, obs: &Observation) -> Vec<Pos> {
        let needed: BTreeSet<Resource> = obs.team_progress.needed().collect();
        self.stocks
            .iter()
            .filter(|(_, (r, stock))| *stock > 0 && r.is_some_and(|r| needed.contains(&r)))
            .map(|(&p, _)| p)
            .collect()
    }
}

fn windows_for(horizon: u32) -> Vec<(u32, u32)> {
    let mut w = vec![(1, 10.min(horizon))];
    if horizon > 10 {
        w.push((11, 20.min(horizon)));
    }
    if horizon > 20 {
        w.push((21, horizon));
    }
    w
}

/// Classifies every action in the log. Agents' knowledge is rebuilt from
/// their own observations, so a MOVE only counts as productive toward tiles
/// the agent had actually seen.
pub fn behavior_profile(log: &TrajectoryLog) -> BehaviorProfile {
    let mut knowledge: BTreeMap<AgentId, Knowledge> = BTreeMap::new();
    let mut counts: BTreeMap<Category, u32> = Category::ALL.iter().map(|&c| (c, 0)).collect();
    let mut per_agent: BTreeMap<AgentId, AgentEfficiency> = BTreeMap::new();
    let mut pending: BTreeMap<(AgentId, Resource), VecDeque<u32>> = BTreeMap::new();
    let mut latencies: Vec<f64> = Vec::new();
    let windows = windows_for(log.header.config.horizon);
    let mut window_counts = vec![(0u32, 0u32); windows.len()];

    for record in &log.turns {
        for (&agent, action) in &record.actions {
            let outcome = record.events.outcomes.get(&agent);
            let failed = outcome.is_some_and(|o| o.failed());
            let ctx = match record.observations.get(&agent) {
                Some(obs) => {
                    let k = knowledge.entry(agent).or_default();
                    k.update(obs);
                    ActionContext { position: obs.position, known_needed_tiles: k.needed_tiles(obs), failed }
                }
                None => ActionContext { failed, ..Default::default() },
            };
            let category = classify_action(action, &ctx);
            *counts.entry(category).or_default() += 1;
            let eff = per_agent.entry(agent).or_default();
            *eff.categories.entry(category).or_default() += 1;
            if let Some(i) = windows.iter().position(|&(a, b)| (a..=b).contains(&record.turn)) {
                window_counts[i].0 += 1;
                if category == Category::Productive {
                    window_counts[i].1 += 1;
                }
            }

            let succeeded = outcome.is_none_or(|o| o.succeeded());
            if !succeeded {
                continue;
            }
            match action {
                Action::Gather { resource } => {
                    eff.gathers += 1;
                    let units = outcome.and_then(|o| o.units).unwrap_or(1);
                    let queue = pending.entry((agent, *resource)).or_default();
                    queue.extend(std::iter::repeat_n(record.turn, units as usize));
                }
                Action::Deposit { resource, .. } => {
                    eff.deposits += 1;
                    let units = outcome.and_then(|o| o.units).unwrap_or(0);
                    eff.deposited_units += units;
                    let queue = pending.entry((agent, *resource)).or_default();
                    for _ in 0..units {
                        match queue.pop_front() {
                            Some(t) => latencies.push((record.turn - t) as f64),
                            None => break,
                        }
                    }
                }
                _ => {}
            }
        }
    }

    let total: u32 = counts.values().sum();
    let fractions = if total == 0 {
        Category::ALL.iter().map(|&c| (c, if c == Category::Idle { 1.0 } else { 0.0 })).collect()
    } else {
        counts.iter().map(|(&c, &n)| (c, n as f64 / total as f64)).collect()
    };
    let n_agents = log.header.config.n_agents.max(1) as f64;
    BehaviorProfile {
        fractions,
        counts,
        total_actions: total,
        gathers_per_agent: per_agent.values().map(|e| e.gathers as f64).sum::<f64>() / n_agents,
        deposits_per_agent: per_agent.values().map(|e| e.deposits as f64).sum::<f64>() / n_agents,
        per_agent,
        deposit_latency: (!latencies.is_empty()).then(|| latencies.iter().sum::<f64>() / latencies.len() as f64),
        windows: windows
            .iter()
            .zip(&window_counts)
            .map(|(&(from_turn, to_turn), &(n, prod))| WindowShare {
                from_turn,
                to_turn,
                actions: n,
                productive: if n == 0 { 0.0 } else { prod as f64 / n as f64 },
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Direction;

    fn ctx(x: i32, y: i32, tiles: &[(i32, i32)]) -> ActionContext {
        ActionContext {
            position: Pos { x, y },
            known_needed_tiles: tiles.iter().map(|&(x, y)| Pos { x, y }).collect(),
            failed: false,
        }
    }

    #[test]
    fn fixed_categories() {
        let c = ctx(0, 0, &[]);
        let deposit = Action::Deposit { project: "shelter".into(), resource: Resource::Wood };
        assert_eq!(classify_action(&deposit, &c), Category::Productive);
        assert_eq!(classify_action(&Action::Broadcast { message: "hi".into() }, &c), Category::Social);
        assert_eq!(classify_action(&Action::Steal { target: 4 }, &c), Category::Aggressive);
        assert_eq!(classify_action(&Action::Rest, &c), Category::Idle);
        let failed = ActionContext { failed: true, ..c };
        assert_eq!(classify_action(&deposit, &failed), Category::Idle);
    }

    #[test]
    fn move_toward_and_away_on_toy_map() {
        // Three known tiles; the nearest to (2,2) is (2,0) at distance 2.
        let c = ctx(2, 2, &[(2, 0), (5, 5), (0, 5)]);
        let mv = |d| Action::Move { direction: d };
        assert_eq!(classify_action(&mv(Direction::N), &c), Category::Productive);
        assert_eq!(classify_action(&mv(Direction::E), &c), Category::Idle);
        assert_eq!(classify_action(&mv(Direction::W), &c), Category::Idle);
        // South reaches (2,3): nearest is now (0,5) or (2,0), both at 3.
        assert_eq!(classify_action(&mv(Direction::S), &c), Category::Idle);
        assert_eq!(classify_action(&mv(Direction::N), &ctx(2, 2, &[])), Category::Idle);
    }
}
