use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub type AgentId = u32;
pub type Inventory = BTreeMap<Resource, u32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resource {
    Wood,
    Stone,
    Gems,
}

impl Resource {
    pub const ALL: [Resource; 3] = [Resource::Wood, Resource::Stone, Resource::Gems];

    pub fn as_str(self) -> &'static str {
        match self {
            Resource::Wood => "wood",
            Resource::Stone => "stone",
            Resource::Gems => "gems",
        }
    }

    pub fn parse(s: &str) -> Option<Resource> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wood" => Some(Resource::Wood),
            "stone" => Some(Resource::Stone),
            "gems" | "gem" => Some(Resource::Gems),
            _ => None,
        }
    }

    pub fn tile_kind(self) -> TileKind {
        match self {
            Resource::Wood => TileKind::WoodGrove,
            Resource::Stone => TileKind::StoneQuarry,
            Resource::Gems => TileKind::GemMine,
        }
    }
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn step(self, dir: Direction) -> Pos {
        let (dx, dy) = dir.delta();
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn chebyshev(self, other: Pos) -> u32 {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Compass direction; north decreases `y`, east increases `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    N,
    E,
    S,
    W,
}

impl Direction {
    /// Fixed tie-break order used by navigation.
    pub const ORDER: [Direction; 4] = [Direction::N, Direction::E, Direction::S, Direction::W];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::N => (0, -1),
            Direction::E => (1, 0),
            Direction::S => (0, 1),
            Direction::W => (-1, 0),
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s.trim().to_ascii_uppercase().as_str() {
            "N" | "NORTH" => Some(Direction::N),
            "E" | "EAST" => Some(Direction::E),
            "S" | "SOUTH" => Some(Direction::S),
            "W" | "WEST" => Some(Direction::W),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TileKind {
    Plain,
    WoodGrove,
    StoneQuarry,
    GemMine,
    ShelterSite,
    MarketSite,
}

impl TileKind {
    pub fn resource(self) -> Option<Resource> {
        match self {
            TileKind::WoodGrove => Some(Resource::Wood),
            TileKind::StoneQuarry => Some(Resource::Stone),
            TileKind::GemMine => Some(Resource::Gems),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub position: Pos,
    pub kind: TileKind,
    /// Units left; always zero on tiles that hold no resource.
    pub stock: u32,
}

impl Tile {
    pub fn resource(&self) -> Option<Resource> {
        self.kind.resource()
    }

    pub fn stock_of(&self, resource: Resource) -> u32 {
        if self.resource() == Some(resource) {
            self.stock
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub agent_id: AgentId,
    pub team: String,
    pub position: Pos,
    pub inventory: Inventory,
    pub alive: bool,
    pub cumulative_deposits: u32,
    pub eliminated_at: Option<u32>,
}

impl AgentState {
    pub fn carried(&self) -> u32 {
        self.inventory.values().sum()
    }

    pub fn holding(&self, resource: Resource) -> u32 {
        self.inventory.get(&resource).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub name: String,
    pub requirements: BTreeMap<Resource, u32>,
    pub deposited: BTreeMap<Resource, u32>,
}

impl Project {
    pub fn new(name: &str, requirements: BTreeMap<Resource, u32>) -> Self {
        let deposited = requirements.keys().map(|&r| (r, 0)).collect();
        Self { name: name.to_string(), requirements, deposited }
    }

    pub fn deposited_of(&self, resource: Resource) -> u32 {
        self.deposited.get(&resource).copied().unwrap_or(0)
    }

    /// Units still missing for `resource`, zero if not required or already met.
    pub fn remaining(&self, resource: Resource) -> u32 {
        self.requirements.get(&resource).map(|&req| req.saturating_sub(self.deposited_of(resource))).unwrap_or(0)
    }

    pub fn needs(&self, resource: Resource) -> bool {
        self.remaining(resource) > 0
    }

    /// Mean over required resources of `min(1, deposited / required)`.
    pub fn progress(&self) -> f64 {
        if self.requirements.is_empty() {
            return 1.0;
        }
        let sum: f64 =
            self.requirements.iter().map(|(&r, &req)| (self.deposited_of(r) as f64 / req as f64).min(1.0)).sum();
        sum / self.requirements.len() as f64
    }

    pub fn complete(&self) -> bool {
        self.requirements.iter().all(|(&r, &req)| self.deposited_of(r) >= req)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionKind {
    Move,
    Gather,
    Deposit,
    Attack,
    Steal,
    Broadcast,
    PrivateMsg,
    Give,
    Rest,
}

impl ActionKind {
    pub const ALL: [ActionKind; 9] = [
        ActionKind::Move,
        ActionKind::Gather,
        ActionKind::Deposit,
        ActionKind::Attack,
        ActionKind::Steal,
        ActionKind::Broadcast,
        ActionKind::PrivateMsg,
        ActionKind::Give,
        ActionKind::Rest,
    ];

    pub fn is_conflict(self) -> bool {
        matches!(self, ActionKind::Attack | ActionKind::Steal)
    }
}

pub const MAX_MESSAGE_LEN: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    Move { direction: Direction },
    Gather { resource: Resource },
    Deposit { project: String, resource: Resource },
    Attack { target: AgentId },
    Steal { target: AgentId },
    Broadcast { message: String },
    PrivateMsg { target: AgentId, message: String },
    Give { target: AgentId, resource: Resource, quantity: u32 },
    Rest,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActionShapeError {
    #[error("message must be non-empty")]
    EmptyMessage,
    #[error("message longer than {MAX_MESSAGE_LEN} characters")]
    MessageTooLong,
    #[error("quantity must be at least 1")]
    ZeroQuantity,
    #[error("project name must be non-empty")]
    EmptyProject,
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Move { .. } => ActionKind::Move,
            Action::Gather { .. } => ActionKind::Gather,
            Action::Deposit { .. } => ActionKind::Deposit,
            Action::Attack { .. } => ActionKind::Attack,
            Action::Steal { .. } => ActionKind::Steal,
            Action::Broadcast { .. } => ActionKind::Broadcast,
            Action::PrivateMsg { .. } => ActionKind::PrivateMsg,
            Action::Give { .. } => ActionKind::Give,
            Action::Rest => ActionKind::Rest,
        }
    }

    /// Checks parameter shape only; whether the action succeeds is decided by the engine.
    pub fn validate(&self) -> Result<(), ActionShapeError> {
        match self {
            Action::Broadcast { message } | Action::PrivateMsg { message, .. } => {
                if message.trim().is_empty() {
                    Err(ActionShapeError::EmptyMessage)
                } else if message.chars().count() > MAX_MESSAGE_LEN {
                    Err(ActionShapeError::MessageTooLong)
                } else {
                    Ok(())
                }
            }
            Action::Give { quantity: 0, .. } => Err(ActionShapeError::ZeroQuantity),
            Action::Deposit { project, .. } if project.trim().is_empty() => Err(ActionShapeError::EmptyProject),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Move { direction } => write!(f, "MOVE({direction:?})"),
            Action::Gather { resource } => write!(f, "GATHER({resource})"),
            Action::Deposit { project, resource } => write!(f, "DEPOSIT({project}, {resource})"),
            Action::Attack { target } => write!(f, "ATTACK({target})"),
            Action::Steal { target } => write!(f, "STEAL({target})"),
            Action::Broadcast { message } => write!(f, "BROADCAST({message:?})"),
            Action::PrivateMsg { target, message } => write!(f, "PRIVATE_MSG({target}, {message:?})"),
            Action::Give { target, resource, quantity } => write!(f, "GIVE({target}, {resource}, {quantity})"),
            Action::Rest => f.write_str("REST"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Broadcast,
    Private,
    /// Engine-generated notice to a victim of an ATTACK or STEAL attempt.
    Notice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub turn: u32,
    pub kind: MessageKind,
    pub from: AgentId,
    /// `None` for broadcasts.
    pub to: Option<AgentId>,
    pub text: String,
}

pub const NOTICE_ATTACKED: &str = "attacked you";
pub const NOTICE_STOLE: &str = "attempted to steal from you";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibleAgent {
    pub agent_id: AgentId,
    pub team: String,
    pub inventory: Inventory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibleTile {
    pub position: Pos,
    pub kind: TileKind,
    pub stock: u32,
    /// Other alive agents standing on the tile.
    pub agents: Vec<VisibleAgent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamProgress {
    pub project: String,
    pub deposited: BTreeMap<Resource, u32>,
    pub required: BTreeMap<Resource, u32>,
}

impl TeamProgress {
    pub fn remaining(&self, resource: Resource) -> u32 {
        self.required
            .get(&resource)
            .map(|&req| req.saturating_sub(self.deposited.get(&resource).copied().unwrap_or(0)))
            .unwrap_or(0)
    }

    pub fn needs(&self, resource: Resource) -> bool {
        self.remaining(resource) > 0
    }

    pub fn needed(&self) -> impl Iterator<Item = Resource> + '_ {
        self.required.keys().copied().filter(|&r| self.needs(r))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub agent_id: AgentId,
    pub position: Pos,
    pub inventory: Inventory,
    pub team: String,
    pub alive: bool,
    pub visible_tiles: Vec<VisibleTile>,
    pub team_progress: TeamProgress,
    pub team_deposits: u32,
    pub recent_messages: Vec<Message>,
    pub current_turn: u32,
    pub turns_until_overseer: u32,
    pub eliminated_agents: Vec<AgentId>,
}

impl Observation {
    pub fn tile_at(&self, pos: Pos) -> Option<&VisibleTile> {
        self.visible_tiles.iter().find(|t| t.position == pos)
    }

    pub fn current_tile(&self) -> Option<&VisibleTile> {
        self.tile_at(self.position)
    }

    pub fn visible_agents(&self) -> impl Iterator<Item = (Pos, &VisibleAgent)> {
        self.visible_tiles.iter().flat_map(|t| t.agents.iter().map(move |a| (t.position, a)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Succeeded,
    /// A valid ATTACK or STEAL whose success roll failed.
    Missed,
    /// Silent failure; the turn is consumed.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    ActorDead,
    OutOfBounds,
    NothingToGather,
    CapacityFull,
    NothingCarried,
    WrongProject,
    NotRequired,
    InvalidTarget,
    TargetDead,
    TargetNotAdjacent,
    TargetEmptyHanded,
    InsufficientQuantity,
    PolicyFault,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub action: Action,
    pub status: OutcomeStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<FailReason>,
    /// Units moved by GATHER/DEPOSIT/STEAL/GIVE when successful.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<Resource>,
}

impl ActionOutcome {
    pub fn succeeded(&self) -> bool {
        self.status == OutcomeStatus::Succeeded
    }

    pub fn failed(&self) -> bool {
        self.status == OutcomeStatus::Failed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum EliminationCause {
    Overseer,
    Attack { attacker: AgentId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Elimination {
    pub agent: AgentId,
    pub cause: EliminationCause,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankEntry {
    pub agent: AgentId,
    pub deposits: u32,
}

/// Result of one Overseer evaluation. `eliminated` is `None` when fewer than
/// two agents were alive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverseerEvent {
    pub turn: u32,
    pub eliminated: Option<AgentId>,
    /// Alive agents in ascending (deposits, agent_id) order.
    pub ranking: Vec<RankEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TurnEvents {
    pub turn: u32,
    pub outcomes: BTreeMap<AgentId, ActionOutcome>,
    pub messages: Vec<Message>,
    pub eliminations: Vec<Elimination>,
    pub conflict_attempts: u32,
}
