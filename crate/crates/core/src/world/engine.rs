use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::WorldConfig;
use super::types::*;
use super::WorldError;
use crate::rng::{self, StreamRng};

/// Complete mutable state of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    pub config: WorldConfig,
    pub seed: u64,
    /// Row-major, `y * width + x`.
    pub tiles: Vec<Tile>,
    /// Indexed by `agent_id - 1`.
    pub agents: Vec<AgentState>,
    pub projects: Vec<Project>,
    /// Turns fully resolved so far.
    pub turn: u32,
    /// Messages delivered during the most recent resolution, per recipient.
    pub inbox: BTreeMap<AgentId, Vec<Message>>,
    /// Agents in elimination order.
    pub eliminated: Vec<AgentId>,
    initial_stock: Vec<u32>,
}

#[derive(Serialize)]
struct StateView<'a> {
    turn: u32,
    stocks: Vec<u32>,
    agents: &'a [AgentState],
    projects: &'a [Project],
    inbox: &'a BTreeMap<AgentId, Vec<Message>>,
    eliminated: &'a [AgentId],
}

impl GridWorld {
    /// Generates the world for `(config, seed)`; identical inputs give identical worlds.
    pub fn init(config: &WorldConfig, seed: u64) -> Result<GridWorld, WorldError> {
        config.validate()?;
        let mut rng = rng::stream(seed, rng::tags::WORLD, &[]);
        let width = config.grid_width as i32;
        let height = config.grid_height as i32;
        let mut tiles: Vec<Tile> = (0..height)
            .flat_map(|y| (0..width).map(move |x| Tile { position: Pos::new(x, y), kind: TileKind::Plain, stock: 0 }))
            .collect();

        let mut free: Vec<usize> = (0..tiles.len()).collect();
        free.shuffle(&mut rng);

        // Project sites are cosmetic: deposits are accepted from any tile.
        for i in 0..config.teams.len() {
            let idx = free.pop().expect("validated grid size");
            tiles[idx].kind = if i % 2 == 0 { TileKind::ShelterSite } else { TileKind::MarketSite };
        }
        for spawn in &config.resources {
            let count = rng.random_range(spawn.tiles.0..=spawn.tiles.1);
            for _ in 0..count {
                let idx = free.pop().expect("validated grid size");
                tiles[idx].kind = spawn.resource.tile_kind();
                tiles[idx].stock = rng.random_range(spawn.stock.0..=spawn.stock.1);
            }
        }

        // `free` now holds exactly the plain tiles, already shuffled.
        let mut agents = Vec::with_capacity(config.n_agents as usize);
        for agent_id in 1..=config.n_agents {
            let idx = free.pop().expect("validated grid size");
            let team = config.team_of(agent_id).expect("validated membership");
            agents.push(AgentState {
                agent_id,
                team: team.name.clone(),
                position: tiles[idx].position,
                inventory: Inventory::new(),
                alive: true,
                cumulative_deposits: 0,
                eliminated_at: None,
            });
        }

        let projects = config.teams.iter().map(|t| Project::new(&t.name, t.requirements.clone())).collect();
        let initial_stock = tiles.iter().map(|t| t.stock).collect();
        Ok(GridWorld {
            config: config.clone(),
            seed,
            tiles,
            agents,
            projects,
            turn: 0,
            inbox: BTreeMap::new(),
            eliminated: Vec::new(),
            initial_stock,
        })
    }

    /// Stream used for action resolution and respawn draws.
    pub fn resolution_rng(&self) -> StreamRng {
        rng::stream(self.seed, rng::tags::RESOLVE, &[])
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as u32) < self.config.grid_width && (p.y as u32) < self.config.grid_height
    }

    pub fn tile(&self, p: Pos) -> Option<&Tile> {
        self.in_bounds(p).then(|| &self.tiles[self.tile_index(p)])
    }

    fn tile_index(&self, p: Pos) -> usize {
        p.y as usize * self.config.grid_width as usize + p.x as usize
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentState> {
        id.checked_sub(1).and_then(|i| self.agents.get(i as usize))
    }

    fn agent_mut(&mut self, id: AgentId) -> &mut AgentState {
        &mut self.agents[id as usize - 1]
    }

    pub fn alive_ids(&self) -> Vec<AgentId> {
        self.agents.iter().filter(|a| a.alive).map(|a| a.agent_id).collect()
    }

    pub fn project(&self, name: &str) -> Option<&Project> {
        self.projects.iter().find(|p| p.name == name)
    }

    pub fn project_of(&self, agent: &AgentState) -> &Project {
        self.project(&agent.team).expect("each team owns a project")
    }

    /// Next turn to be played, 1-based.
    pub fn current_turn(&self) -> u32 {
        self.turn + 1
    }

    pub fn finished(&self) -> bool {
        self.turn >= self.config.horizon
    }

    /// Both projects complete and at least one survivor on every team.
    pub fn success(&self) -> bool {
        self.projects.iter().all(Project::complete)
            && self.config.teams.iter().all(|t| t.members.iter().any(|&m| self.agent(m).is_some_and(|a| a.alive)))
    }

    pub fn observe(&self, agent_id: AgentId) -> Result<Observation, WorldError> {
        let agent = self.agent(agent_id).ok_or(WorldError::UnknownAgent(agent_id))?;
        if !agent.alive {
            return Err(WorldError::DeadAgent(agent_id));
        }
        let mut visible_tiles = Vec::with_capacity(9);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let p = Pos::new(agent.position.x + dx, agent.position.y + dy);
                let Some(tile) = self.tile(p) else { continue };
                let agents = self
                    .agents
                    .iter()
                    .filter(|o| o.alive && o.agent_id != agent_id && o.position == p)
                    .map(|o| VisibleAgent {
                        agent_id: o.agent_id,
                        team: o.team.clone(),
                        inventory: o.inventory.clone(),
                    })
                    .collect();
                visible_tiles.push(VisibleTile { position: p, kind: tile.kind, stock: tile.stock, agents });
            }
        }
        let project = self.project_of(agent);
        let current_turn = self.current_turn();
        let interval = self.config.overseer_interval;
        let next_overseer = current_turn.div_ceil(interval) * interval;
        Ok(Observation {
            agent_id,
            position: agent.position,
            inventory: agent.inventory.clone(),
            team: agent.team.clone(),
            alive: agent.alive,
            visible_tiles,
            team_progress: TeamProgress {
                project: project.name.clone(),
                deposited: project.deposited.clone(),
                required: project.requirements.clone(),
            },
            team_deposits: agent.cumulative_deposits,
            recent_messages: self.inbox.get(&agent_id).cloned().unwrap_or_default(),
            current_turn,
            turns_until_overseer: next_overseer - current_turn,
            eliminated_agents: self.eliminated.clone(),
        })
    }

    /// Resolves one simultaneous batch of actions in the fixed phase order
    /// ATTACK, STEAL, MOVE, GATHER, DEPOSIT, communication (BROADCAST,
    /// PRIVATE_MSG, GIVE), REST. Within a phase agents act in ascending id.
    pub fn resolve_turn(
        &mut self,
        actions: &BTreeMap<AgentId, Action>,
        rng: &mut impl Rng,
    ) -> Result<TurnEvents, WorldError> {
        if self.finished() {
            return Err(WorldError::HorizonReached(self.config.horizon));
        }
        for &id in actions.keys() {
            match self.agent(id) {
                None => return Err(WorldError::UnknownAgent(id)),
                Some(a) if !a.alive => return Err(WorldError::DeadAgent(id)),
                Some(_) => {}
            }
        }
        if let Some(missing) = self.alive_ids().into_iter().find(|id| !actions.contains_key(id)) {
            return Err(WorldError::MissingAction(missing));
        }

        let turn = self.current_turn();
        let mut events = TurnEvents { turn, ..TurnEvents::default() };
        let mut inbox: BTreeMap<AgentId, Vec<Message>> = BTreeMap::new();
        events.conflict_attempts = actions.values().filter(|a| a.kind().is_conflict()).count() as u32;

        const PHASES: [&[ActionKind]; 7] = [
            &[ActionKind::Attack],
            &[ActionKind::Steal],
            &[ActionKind::Move],
            &[ActionKind::Gather],
            &[ActionKind::Deposit],
            &[ActionKind::Broadcast, ActionKind::PrivateMsg, ActionKind::Give],
            &[ActionKind::Rest],
        ];
        for phase in PHASES {
            for (&id, action) in actions.iter().filter(|(_, a)| phase.contains(&a.kind())) {
                let outcome = if !self.agents[id as usize - 1].alive {
                    fail(action, FailReason::ActorDead)
                } else {
                    self.apply(id, action, turn, rng, &mut events, &mut inbox)
                };
                events.outcomes.insert(id, outcome);
            }
        }

        if self.config.respawn_enabled {
            for i in 0..self.tiles.len() {
                if self.tiles[i].stock < self.initial_stock[i] && rng.random::<f64>() < self.config.respawn_prob {
                    self.tiles[i].stock += 1;
                }
            }
        }

        self.inbox = inbox;
        self.turn = turn;
        Ok(events)
    }

    fn apply(
        &mut self,
        id: AgentId,
        action: &Action,
        turn: u32,
        rng: &mut impl Rng,
        events: &mut TurnEvents,
        inbox: &mut BTreeMap<AgentId, Vec<Message>>,
    ) -> ActionOutcome {
        let me = self.agents[id as usize - 1].clone();
        match action {
            Action::Attack { target } => {
                let target = *target;
                if let Err(reason) = self.check_target(&me, target, true) {
                    return fail(action, reason);
                }
                deliver(inbox, events, target, notice(turn, id, target, NOTICE_ATTACKED));
                if rng.random::<f64>() < self.config.attack_success_prob {
                    let victim = self.agent_mut(target);
                    victim.alive = false;
                    victim.eliminated_at = Some(turn);
                    self.eliminated.push(target);
                    events
                        .eliminations
                        .push(Elimination { agent: target, cause: EliminationCause::Attack { attacker: id } });
                    ok(action)
                } else {
                    missed(action)
                }
            }
            Action::Steal { target } => {
                let target = *target;
                if let Err(reason) = self.check_target(&me, target, true) {
                    return fail(action, reason);
                }
                let victim = &self.agents[target as usize - 1];
                let held: Vec<Resource> = victim.inventory.iter().filter(|(_, &n)| n > 0).map(|(&r, _)| r).collect();
                if held.is_empty() {
                    return fail(action, FailReason::TargetEmptyHanded);
                }
                if !self.has_room(&me, 1) {
                    return fail(action, FailReason::CapacityFull);
                }
                deliver(inbox, events, target, notice(turn, id, target, NOTICE_STOLE));
                if rng.random::<f64>() < self.config.steal_success_prob {
                    let resource = held[rng.random_range(0..held.len())];
                    take(&mut self.agent_mut(target).inventory, resource, 1);
                    *self.agent_mut(id).inventory.entry(resource).or_insert(0) += 1;
                    moved(action, resource, 1)
                } else {
                    missed(action)
                }
            }
            Action::Move { direction } => {
                let next = me.position.step(*direction);
                if !self.in_bounds(next) {
                    return fail(action, FailReason::OutOfBounds);
                }
                self.agent_mut(id).position = next;
                ok(action)
            }
            Action::Gather { resource } => {
                let idx = self.tile_index(me.position);
                if self.tiles[idx].stock_of(*resource) == 0 {
                    return fail(action, FailReason::NothingToGather);
                }
                if !self.has_room(&me, 1) {
                    return fail(action, FailReason::CapacityFull);
                }
                self.tiles[idx].stock -= 1;
                *self.agent_mut(id).inventory.entry(*resource).or_insert(0) += 1;
                moved(action, *resource, 1)
            }
            Action::Deposit { project, resource } => {
                if !project.eq_ignore_ascii_case(&me.team) {
                    return fail(action, FailReason::WrongProject);
                }
                let team = me.team.clone();
                let proj = self.projects.iter_mut().find(|p| p.name == team).expect("team project");
                if !proj.requirements.contains_key(resource) {
                    return fail(action, FailReason::NotRequired);
                }
                let units = me.holding(*resource);
                if units == 0 {
                    return fail(action, FailReason::NothingCarried);
                }
                *proj.deposited.entry(*resource).or_insert(0) += units;
                let agent = self.agent_mut(id);
                agent.inventory.remove(resource);
                agent.cumulative_deposits += units;
                moved(action, *resource, units)
            }
            Action::Broadcast { message } => {
                let msg = Message { turn, kind: MessageKind::Broadcast, from: id, to: None, text: message.clone() };
                for other in self.agents.iter().filter(|a| a.alive && a.agent_id != id) {
                    inbox.entry(other.agent_id).or_default().push(msg.clone());
                }
                events.messages.push(msg);
                ok(action)
            }
            Action::PrivateMsg { target, message } => {
                if let Err(reason) = self.check_target(&me, *target, false) {
                    return fail(action, reason);
                }
                let msg =
                    Message { turn, kind: MessageKind::Private, from: id, to: Some(*target), text: message.clone() };
                deliver(inbox, events, *target, msg);
                ok(action)
            }
            Action::Give { target, resource, quantity } => {
                if let Err(reason) = self.check_target(&me, *target, true) {
                    return fail(action, reason);
                }
                if *quantity == 0 || me.holding(*resource) < *quantity {
                    return fail(action, FailReason::InsufficientQuantity);
                }
                let receiver = self.agents[*target as usize - 1].clone();
                if !self.has_room(&receiver, *quantity) {
                    return fail(action, FailReason::CapacityFull);
                }
                take(&mut self.agent_mut(id).inventory, *resource, *quantity);
                *self.agent_mut(*target).inventory.entry(*resource).or_insert(0) += quantity;
                moved(action, *resource, *quantity)
            }
            Action::Rest => ok(action),
        }
    }

    fn check_target(&self, me: &AgentState, target: AgentId, adjacent: bool) -> Result<(), FailReason> {
        if target == me.agent_id {
            return Err(FailReason::InvalidTarget);
        }
        let other = self.agent(target).ok_or(FailReason::InvalidTarget)?;
        if !other.alive {
            return Err(FailReason::TargetDead);
        }
        if adjacent && other.position.chebyshev(me.position) > 1 {
            return Err(FailReason::TargetNotAdjacent);
        }
        Ok(())
    }

    fn has_room(&self, agent: &AgentState, units: u32) -> bool {
        self.config.carry_capacity.is_none_or(|cap| agent.carried() + units <= cap)
    }

    /// Eliminates the alive agent with the fewest cumulative deposits, lowest
    /// id first on ties. Must be called on an Overseer turn, after that turn resolved.
    pub fn apply_overseer(&mut self) -> Result<OverseerEvent, WorldError> {
        let turn = self.turn;
        if !self.config.is_overseer_turn(turn) {
            return Err(WorldError::OffSchedule(turn));
        }
        let mut ranking: Vec<RankEntry> = self
            .agents
            .iter()
            .filter(|a| a.alive)
            .map(|a| RankEntry { agent: a.agent_id, deposits: a.cumulative_deposits })
            .collect();
        ranking.sort_by_key(|r| (r.deposits, r.agent));
        let eliminated = if ranking.len() >= 2 { Some(ranking[0].agent) } else { None };
        if let Some(victim) = eliminated {
            let agent = self.agent_mut(victim);
            agent.alive = false;
            agent.eliminated_at = Some(turn);
            self.eliminated.push(victim);
        }
        Ok(OverseerEvent { turn, eliminated, ranking })
    }

    /// SHA-256 over the canonical JSON of the dynamic state.
    pub fn state_hash(&self) -> String {
        let view = StateView {
            turn: self.turn,
            stocks: self.tiles.iter().map(|t| t.stock).collect(),
            agents: &self.agents,
            projects: &self.projects,
            inbox: &self.inbox,
            eliminated: &self.eliminated,
        };
        let bytes = serde_json::to_vec(&view).expect("state serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Totals per resource: (tile stock, carried, deposited).
    pub fn resource_totals(&self) -> BTreeMap<Resource, (u32, u32, u32)> {
        let mut totals: BTreeMap<Resource, (u32, u32, u32)> = Resource::ALL.iter().map(|&r| (r, (0, 0, 0))).collect();
        for tile in &self.tiles {
            if let Some(r) = tile.resource() {
                totals.get_mut(&r).unwrap().0 += tile.stock;
            }
        }
        for agent in &self.agents {
            for (r, n) in &agent.inventory {
                totals.get_mut(r).unwrap().1 += n;
            }
        }
        for project in &self.projects {
            for (r, n) in &project.deposited {
                totals.get_mut(r).unwrap().2 += n;
            }
        }
        totals
    }
}

fn take(inventory: &mut Inventory, resource: Resource, units: u32) {
    let slot = inventory.get_mut(&resource).expect("checked holding");
    *slot -= units;
    if *slot == 0 {
        inventory.remove(&resource);
    }
}

fn deliver(inbox: &mut BTreeMap<AgentId, Vec<Message>>, events: &mut TurnEvents, to: AgentId, msg: Message) {
    inbox.entry(to).or_default().push(msg.clone());
    events.messages.push(msg);
}

fn notice(turn: u32, from: AgentId, to: AgentId, text: &str) -> Message {
    Message { turn, kind: MessageKind::Notice, from, to: Some(to), text: text.to_string() }
}

fn ok(action: &Action) -> ActionOutcome {
    ActionOutcome {
        action: action.clone(),
        status: OutcomeStatus::Succeeded,
        reason: None,
        units: None,
        resource: None,
    }
}

fn moved(action: &Action, resource: Resource, units: u32) -> ActionOutcome {
    ActionOutcome { units: Some(units), resource: Some(resource), ..ok(action) }
}

fn missed(action: &Action) -> ActionOutcome {
    ActionOutcome { status: OutcomeStatus::Missed, ..ok(action) }
}

pub(crate) fn fail(action: &Action, reason: FailReason) -> ActionOutcome {
    ActionOutcome { status: OutcomeStatus::Failed, reason: Some(reason), ..ok(action) }
}
