use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::types::{AgentId, Resource};
use super::WorldError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamSpec {
    pub name: String,
    pub members: Vec<AgentId>,
    /// Units of each resource the team's project needs.
    pub requirements: BTreeMap<Resource, u32>,
}

/// How many tiles of a resource are placed and how much each one stocks.
/// Both ranges are inclusive and drawn uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceSpawn {
    pub resource: Resource,
    pub tiles: (u32, u32),
    pub stock: (u32, u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub grid_width: u32,
    pub grid_height: u32,
    pub horizon: u32,
    pub n_agents: u32,
    pub teams: Vec<TeamSpec>,
    pub overseer_interval: u32,
    pub respawn_enabled: bool,
    /// Per depleted-tile, per-turn probability of regaining one unit.
    pub respawn_prob: f64,
    /// `None` means unlimited.
    pub carry_capacity: Option<u32>,
    pub attack_success_prob: f64,
    pub steal_success_prob: f64,
    pub resources: Vec<ResourceSpawn>,
    pub base_seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            grid_width: 6,
            grid_height: 6,
            horizon: 40,
            n_agents: 6,
            teams: vec![
                TeamSpec {
                    name: "shelter".into(),
                    members: vec![1, 2, 3],
                    requirements: BTreeMap::from([(Resource::Wood, 150)]),
                },
                TeamSpec {
                    name: "market".into(),
                    members: vec![4, 5, 6],
                    requirements: BTreeMap::from([(Resource::Stone, 120), (Resource::Gems, 30)]),
                },
            ],
            overseer_interval: 10,
            respawn_enabled: false,
            respawn_prob: 0.05,
            carry_capacity: None,
            attack_success_prob: 0.25,
            steal_success_prob: 0.40,
            resources: vec![
                ResourceSpawn { resource: Resource::Wood, tiles: (4, 6), stock: (3, 7) },
                ResourceSpawn { resource: Resource::Stone, tiles: (4, 6), stock: (3, 7) },
                ResourceSpawn { resource: Resource::Gems, tiles: (2, 3), stock: (1, 3) },
            ],
            base_seed: 42,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> WorldError {
    WorldError::InvalidConfig { field: field.to_string(), reason: reason.into() }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        if self.grid_width < 2 {
            return Err(invalid("grid_width", "must be at least 2"));
        }
        if self.grid_height < 2 {
            return Err(invalid("grid_height", "must be at least 2"));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be positive"));
        }
        if self.overseer_interval == 0 {
            return Err(invalid("overseer_interval", "must be positive"));
        }
        for (field, p) in [
            ("attack_success_prob", self.attack_success_prob),
            ("steal_success_prob", self.steal_success_prob),
            ("respawn_prob", self.respawn_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(field, format!("{p} is not in [0, 1]")));
            }
        }
        if self.carry_capacity == Some(0) {
            return Err(invalid("carry_capacity", "must be at least 1 when set"));
        }
        if self.teams.is_empty() {
            return Err(invalid("teams", "at least one team is required"));
        }
        let mut seen = BTreeSet::new();
        let mut names = BTreeSet::new();
        for team in &self.teams {
            if team.name.is_empty() || !names.insert(team.name.as_str()) {
                return Err(invalid("teams", format!("team name {:?} is empty or duplicated", team.name)));
            }
            if team.requirements.is_empty() || team.requirements.values().any(|&v| v == 0) {
                return Err(invalid("teams", format!("team {} needs positive requirements", team.name)));
            }
            for &member in &team.members {
                if !seen.insert(member) {
                    return Err(invalid("teams", format!("agent {member} belongs to more than one team")));
                }
            }
        }
        let expected: BTreeSet<AgentId> = (1..=self.n_agents).collect();
        if seen != expected {
            return Err(invalid("teams", format!("team members must be exactly agents 1..={}", self.n_agents)));
        }
        let mut resource_tiles = 0;
        for spawn in &self.resources {
            if spawn.tiles.0 > spawn.tiles.1 || spawn.stock.0 > spawn.stock.1 {
                return Err(invalid("resources", format!("empty range for {}", spawn.resource)));
            }
            resource_tiles += spawn.tiles.1;
        }
        // Two project sites plus every resource tile, and a free plain tile per agent.
        let cells = self.grid_width * self.grid_height;
        if resource_tiles + self.teams.len() as u32 + self.n_agents > cells {
            return Err(invalid("resources", "grid too small for resource tiles, sites and agents"));
        }
        Ok(())
    }

    pub fn team_of(&self, agent: AgentId) -> Option<&TeamSpec> {
        self.teams.iter().find(|t| t.members.contains(&agent))
    }

    pub fn team(&self, name: &str) -> Option<&TeamSpec> {
        self.teams.iter().find(|t| t.name == name)
    }

    /// Turns at which the Overseer acts within the horizon.
    pub fn overseer_turns(&self) -> Vec<u32> {
        (1..=self.horizon / self.overseer_interval).map(|k| k * self.overseer_interval).collect()
    }

    pub fn is_overseer_turn(&self, turn: u32) -> bool {
        turn > 0 && turn.is_multiple_of(self.overseer_interval)
    }
}
