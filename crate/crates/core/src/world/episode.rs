use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::WorldConfig;
use super::engine::GridWorld;
use super::log::{LogFooter, LogHeader, TrajectoryLog, TurnRecord};
use super::types::*;
use super::WorldError;
use crate::policy::{Policy, PolicyFault};

#[derive(Debug, Clone, Default)]
pub struct EpisodeOptions {
    /// Free-form label stored in the log header (constitution label, run name).
    pub label: String,
    /// Collect each turn's decisions on scoped threads instead of sequentially.
    pub parallel_decisions: bool,
}

pub type PolicySet = BTreeMap<AgentId, Box<dyn Policy>>;

/// Runs one full episode. Policy faults and malformed actions are replaced by
/// REST and recorded; the engine only aborts on its own contract violations.
pub fn run_episode(
    config: &WorldConfig,
    seed: u64,
    policies: &mut PolicySet,
    options: &EpisodeOptions,
) -> Result<TrajectoryLog, WorldError> {
    let mut world = GridWorld::init(config, seed)?;
    for id in 1..=config.n_agents {
        if !policies.contains_key(&id) {
            return Err(WorldError::MissingPolicy(id));
        }
    }
    let mut rng = world.resolution_rng();
    let header = LogHeader::new(config, seed, &options.label, world.state_hash());
    let mut turns = Vec::with_capacity(config.horizon as usize);

    while !world.finished() && !world.alive_ids().is_empty() {
        let observations: BTreeMap<AgentId, Observation> =
            world.alive_ids().into_iter().map(|id| world.observe(id).map(|o| (id, o))).collect::<Result<_, _>>()?;

        let decisions = collect_decisions(policies, &observations, options.parallel_decisions);
        let mut actions = BTreeMap::new();
        let mut faults = BTreeMap::new();
        for (id, decision) in decisions {
            let checked = decision.and_then(|a| {
                a.validate().map_err(|e| PolicyFault::new(format!("malformed action {a}: {e}")))?;
                Ok(a)
            });
            match checked {
                Ok(action) => {
                    actions.insert(id, action);
                }
                Err(fault) => {
                    actions.insert(id, Action::Rest);
                    faults.insert(id, fault.reason);
                }
            }
        }

        let mut events = world.resolve_turn(&actions, &mut rng)?;
        let overseer = if world.config.is_overseer_turn(world.turn) {
            let event = world.apply_overseer()?;
            if let Some(agent) = event.eliminated {
                events.eliminations.push(Elimination { agent, cause: EliminationCause::Overseer });
            }
            Some(event)
        } else {
            None
        };
        turns.push(TurnRecord {
            turn: events.turn,
            observations_digest: digest(&observations),
            observations,
            actions,
            faults,
            events,
            overseer,
            state_hash: world.state_hash(),
        });
    }

    let footer = LogFooter::from_world(&world, &turns);
    Ok(TrajectoryLog { header, turns, footer })
}

fn collect_decisions(
    policies: &mut PolicySet,
    observations: &BTreeMap<AgentId, Observation>,
    parallel: bool,
) -> Vec<(AgentId, Result<Action, PolicyFault>)> {
    let active = policies.iter_mut().filter_map(|(id, p)| observations.get(id).map(|o| (*id, p, o)));
    if !parallel {
        return active.map(|(id, policy, obs)| (id, policy.decide(obs))).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = active.map(|(id, policy, obs)| (id, scope.spawn(move || policy.decide(obs)))).collect();
        handles
            .into_iter()
            .map(|(id, h)| {
                let decision = h.join().unwrap_or_else(|_| Err(PolicyFault::new("policy panicked")));
                (id, decision)
            })
            .collect()
    })
}

pub(crate) fn digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    hex::encode(Sha256::digest(&bytes))
}
