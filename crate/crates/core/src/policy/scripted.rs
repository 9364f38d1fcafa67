use rand::Rng;

use super::directive::{AggressionMode, Directive, DirectiveKind};
use super::extract::ScriptedProfile;
use super::memory::PolicyMemory;
use super::{Policy, PolicyFault};
use crate::rng::StreamRng;
use crate::world::{Action, AgentId, Direction, Observation, Pos, Resource};

/// Resources the agent's team still needs, largest remaining deficit first
/// (ties in resource order).
fn needed_by_deficit(obs: &Observation) -> Vec<Resource> {
    let mut needed: Vec<Resource> = obs.team_progress.needed().collect();
    needed.sort_by_key(|&r| std::cmp::Reverse(obs.team_progress.remaining(r)));
    needed
}

/// Lowest-id alive agent of another team standing within reach.
fn adjacent_opponent(obs: &Observation) -> Option<AgentId> {
    obs.visible_agents()
        .filter(|(pos, a)| a.team != obs.team && pos.chebyshev(obs.position) <= 1)
        .map(|(_, a)| a.agent_id)
        .min()
}

/// First direction in N, E, S, W order that strictly shortens the Manhattan distance.
pub(crate) fn step_toward(from: Pos, to: Pos) -> Option<Direction> {
    let d = from.manhattan(to);
    Direction::ORDER.into_iter().find(|&dir| from.step(dir).manhattan(to) < d)
}

fn explore(obs: &Observation, rng: &mut impl Rng) -> Action {
    let open: Vec<Direction> =
        Direction::ORDER.into_iter().filter(|&d| obs.tile_at(obs.position.step(d)).is_some()).collect();
    if open.is_empty() {
        return Action::Rest;
    }
    Action::Move { direction: open[rng.random_range(0..open.len())] }
}

/// Nearest known tile stocking `resource`; ties broken by (y, x).
fn nearest_known(memory: &PolicyMemory, from: Pos, resource: Resource) -> Option<Pos> {
    memory
        .sightings
        .iter()
        .filter(|(_, s)| s.kind.resource() == Some(resource) && s.stock > 0)
        .map(|(&p, _)| p)
        .min_by_key(|p| (p.manhattan(from), p.y, p.x))
}

fn applies(
    directive: Directive,
    profile: &ScriptedProfile,
    obs: &Observation,
    memory: &PolicyMemory,
    rng: &mut impl Rng,
) -> Option<Action> {
    let here = obs.current_tile();
    match directive {
        Directive::DepositFirst => {
            if profile.has(DirectiveKind::Hoard) {
                return None;
            }
            needed_by_deficit(obs)
                .into_iter()
                .find(|r| obs.inventory.get(r).is_some_and(|&n| n > 0))
                .map(|resource| Action::Deposit { project: obs.team_progress.project.clone(), resource })
        }
        Directive::GatherNeeded => {
            let tile = here?;
            let resource = tile.kind.resource()?;
            (tile.stock > 0 && obs.team_progress.needs(resource)).then_some(Action::Gather { resource })
        }
        Directive::SeekLargestDeficit => {
            let target = needed_by_deficit(obs).into_iter().find_map(|r| nearest_known(memory, obs.position, r));
            match target {
                Some(t) if t == obs.position => None,
                Some(t) => step_toward(obs.position, t).map(|direction| Action::Move { direction }),
                None if obs.team_progress.needed().next().is_some() => Some(explore(obs, rng)),
                None => None,
            }
        }
        Directive::BroadcastThreshold(n) => {
            let tile = here?;
            let resource = tile.kind.resource()?;
            if tile.stock < n || !obs.team_progress.needs(resource) {
                return None;
            }
            let message = format!("Found {} {} at {}", tile.stock, resource, tile.position);
            (!memory.has_broadcast(&message)).then_some(Action::Broadcast { message })
        }
        Directive::GiveSurplus => {
            let (resource, held) = obs
                .inventory
                .iter()
                .filter(|(&r, _)| obs.team_progress.needs(r))
                .find(|(_, &n)| n >= 2)
                .map(|(&r, &n)| (r, n))?;
            let mate = obs
                .visible_agents()
                .filter(|(p, a)| a.team == obs.team && p.chebyshev(obs.position) <= 1)
                .map(|(_, a)| a.agent_id)
                .min()?;
            Some(Action::Give { target: mate, resource, quantity: held - 1 })
        }
        Directive::Aggression(AggressionMode::Retaliate) => {
            let visible: Vec<AgentId> =
                obs.visible_agents().filter(|(p, _)| p.chebyshev(obs.position) <= 1).map(|(_, a)| a.agent_id).collect();
            memory
                .attacked_by
                .iter()
                .copied()
                .filter(|a| visible.contains(a))
                .min()
                .map(|target| Action::Attack { target })
        }
        // Always-aggression is handled before the ordered scan; never and hoard emit nothing.
        Directive::Aggression(_) | Directive::Hoard => None,
        Directive::RestBias => Some(Action::Rest),
    }
}

/// Evaluates the profile's directives in order; the first applicable one
/// decides. `aggression(always)` attacks an adjacent opponent before anything
/// else and, when nothing else applies, hunts the last seen opponent.
pub fn scripted_decide(
    profile: &ScriptedProfile,
    obs: &Observation,
    memory: &PolicyMemory,
    rng: &mut impl Rng,
) -> Action {
    let always = profile.aggression() == Some(AggressionMode::Always);
    if always {
        if let Some(target) = adjacent_opponent(obs) {
            return Action::Attack { target };
        }
    }
    for &directive in &profile.directives {
        if let Some(action) = applies(directive, profile, obs, memory, rng) {
            return action;
        }
    }
    if always {
        let prey = memory
            .agents_seen
            .iter()
            .filter(|(_, (_, team, _))| team != &obs.team)
            .max_by_key(|(id, (_, _, turn))| (*turn, std::cmp::Reverse(**id)))
            .map(|(_, (pos, _, _))| *pos);
        return match prey.and_then(|p| step_toward(obs.position, p)) {
            Some(direction) => Action::Move { direction },
            None => explore(obs, rng),
        };
    }
    Action::Rest
}

pub struct ScriptedPolicy {
    pub profile: ScriptedProfile,
    pub memory: PolicyMemory,
    rng: StreamRng,
}

impl ScriptedPolicy {
    pub fn new(profile: ScriptedProfile, rng: StreamRng) -> Self {
        Self { profile, memory: PolicyMemory::new(), rng }
    }
}

impl Policy for ScriptedPolicy {
    fn decide(&mut self, observation: &Observation) -> Result<Action, PolicyFault> {
        self.memory.observe(observation);
        let action = scripted_decide(&self.profile, observation, &self.memory, &mut self.rng);
        self.memory.record_decision(observation.current_turn, &action);
        Ok(action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitution::{baseline, BaselineName};
    use crate::policy::derive_profile;
    use crate::world::{GridWorld, TileKind, WorldConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn profile(name: BaselineName) -> ScriptedProfile {
        derive_profile(&baseline(name)).profile
    }

    fn world_with(agent: AgentId, at: Pos, tile: Option<(TileKind, u32)>) -> GridWorld {
        let mut w = GridWorld::init(&WorldConfig::default(), 1).unwrap();
        for a in w.agents.iter_mut() {
            a.position = Pos::new(5, 5);
        }
        w.agents[agent as usize - 1].position = at;
        if let Some((kind, stock)) = tile {
            let idx = (at.y * 6 + at.x) as usize;
            w.tiles[idx].kind = kind;
            w.tiles[idx].stock = stock;
        }
        w
    }

    fn decide(p: &ScriptedProfile, w: &GridWorld, id: AgentId) -> Action {
        let obs = w.observe(id).unwrap();
        let mut memory = PolicyMemory::new();
        memory.observe(&obs);
        scripted_decide(p, &obs, &memory, &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn c_star_deposits_carried_wood() {
        let mut w = world_with(1, Pos::new(1, 1), Some((TileKind::WoodGrove, 4)));
        w.agents[0].inventory.insert(Resource::Wood, 2);
        assert_eq!(
            decide(&profile(BaselineName::CStar), &w, 1),
            Action::Deposit { project: "shelter".into(), resource: Resource::Wood }
        );
    }

    #[test]
    fn market_gathers_stone_when_empty_handed() {
        let w = world_with(4, Pos::new(2, 2), Some((TileKind::StoneQuarry, 2)));
        assert_eq!(decide(&profile(BaselineName::CStar), &w, 4), Action::Gather { resource: Resource::Stone });
    }

    #[test]
    fn unneeded_resource_is_not_gathered() {
        let w = world_with(1, Pos::new(2, 2), Some((TileKind::GemMine, 3)));
        assert!(!matches!(decide(&profile(BaselineName::CStar), &w, 1), Action::Gather { .. }));
    }

    #[test]
    fn zero_sum_attacks_adjacent_opponent() {
        let mut w = world_with(1, Pos::new(2, 2), Some((TileKind::WoodGrove, 4)));
        w.agents[4].position = Pos::new(3, 2);
        assert_eq!(decide(&profile(BaselineName::ZeroSum), &w, 1), Action::Attack { target: 5 });
        // Teammates are never targets.
        w.agents[4].position = Pos::new(5, 5);
        w.agents[1].position = Pos::new(3, 2);
        assert!(!matches!(decide(&profile(BaselineName::ZeroSum), &w, 1), Action::Attack { .. }));
    }

    #[test]
    fn step_toward_prefers_n_e_s_w() {
        assert_eq!(step_toward(Pos::new(2, 2), Pos::new(4, 0)), Some(Direction::N));
        assert_eq!(step_toward(Pos::new(2, 2), Pos::new(4, 4)), Some(Direction::E));
        assert_eq!(step_toward(Pos::new(2, 2), Pos::new(2, 2)), None);
    }

    #[test]
    fn policy_memory_stays_bounded() {
        let w = world_with(1, Pos::new(0, 0), None);
        let mut policy = ScriptedPolicy::new(profile(BaselineName::CStar), crate::rng::stream(1, "test", &[]));
        let obs = w.observe(1).unwrap();
        for _ in 0..30 {
            policy.decide(&obs).unwrap();
        }
        assert!(policy.memory.len() <= crate::policy::MEMORY_CAP);
    }
}
