use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::world::{Action, AgentId, Message, MessageKind, Observation, Pos, TileKind, NOTICE_ATTACKED};

pub const MEMORY_CAP: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemoryEntry {
    Decision { turn: u32, action: Action },
    Received(Message),
}

/// Last-known contents of a tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sighting {
    pub kind: TileKind,
    pub stock: u32,
    pub turn: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicyMemory {
    history: VecDeque<MemoryEntry>,
    pub sightings: BTreeMap<Pos, Sighting>,
    /// Last seen position of other agents: (position, team, turn).
    pub agents_seen: BTreeMap<AgentId, (Pos, String, u32)>,
    /// Attackers reported in the most recent observation.
    pub attacked_by: Vec<AgentId>,
}

impl PolicyMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn history(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.history.iter()
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn push(&mut self, entry: MemoryEntry) {
        self.history.push_back(entry);
        while self.history.len() > MEMORY_CAP {
            self.history.pop_front();
        }
    }

    /// Folds an observation into memory: tile sightings, agent sightings,
    /// delivered messages and attack notices from the previous turn.
    pub fn observe(&mut self, obs: &Observation) {
        for tile in &obs.visible_tiles {
            self.sightings
                .insert(tile.position, Sighting { kind: tile.kind, stock: tile.stock, turn: obs.current_turn });
            for agent in &tile.agents {
                self.agents_seen.insert(agent.agent_id, (tile.position, agent.team.clone(), obs.current_turn));
            }
        }
        for dead in &obs.eliminated_agents {
            self.agents_seen.remove(dead);
        }
        self.attacked_by = obs
            .recent_messages
            .iter()
            .filter(|m| m.kind == MessageKind::Notice && m.text == NOTICE_ATTACKED && m.turn + 1 == obs.current_turn)
            .map(|m| m.from)
            .collect();
        for msg in &obs.recent_messages {
            self.push(MemoryEntry::Received(msg.clone()));
        }
    }

    pub fn record_decision(&mut self, turn: u32, action: &Action) {
        self.push(MemoryEntry::Decision { turn, action: action.clone() });
    }

    /// True if this exact broadcast text was sent or received within memory.
    pub fn has_broadcast(&self, text: &str) -> bool {
        self.history.iter().any(|e| match e {
            MemoryEntry::Decision { action: Action::Broadcast { message }, .. } => message == text,
            MemoryEntry::Received(m) => m.kind == MessageKind::Broadcast && m.text == text,
            _ => false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_is_capped() {
        let mut memory = PolicyMemory::new();
        for turn in 1..=30 {
            memory.record_decision(turn, &Action::Rest);
        }
        assert_eq!(memory.len(), MEMORY_CAP);
        assert!(matches!(memory.history().next(), Some(MemoryEntry::Decision { turn: 6, .. })));
    }
}
