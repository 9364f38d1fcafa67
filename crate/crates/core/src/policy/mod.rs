//! Agent decision interface and its two implementations: a deterministic
//! directive interpreter and a chat-completion backed language-model policy.

pub mod chat;
mod directive;
mod extract;
pub mod llm;
mod memory;
mod scripted;

pub use directive::{AggressionMode, Directive, DirectiveKind, DirectiveParseError};
pub use extract::{derive_profile, extract, ProfileDerivation, ScriptedProfile};
pub use llm::{llm_decide, LlmPolicy};
pub use memory::{MemoryEntry, PolicyMemory, Sighting, MEMORY_CAP};
pub use scripted::{scripted_decide, ScriptedPolicy};

use crate::world::{Action, Observation};

/// Why a policy could not produce an action. The engine substitutes REST and
/// records the reason in the trajectory.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{reason}")]
pub struct PolicyFault {
    pub reason: String,
}

impl PolicyFault {
    pub fn new(reason: impl Into<String>) -> Self {
        Self { reason: reason.into() }
    }
}

/// One policy instance serves one agent. `decide` may only look at the
/// observation and the policy's own memory, and must update that memory.
pub trait Policy: Send {
    fn decide(&mut self, observation: &Observation) -> Result<Action, PolicyFault>;
}

/// One scripted policy per agent, all following `constitution`. Each agent
/// draws from its own stream derived from `seed`.
pub fn scripted_policies(
    constitution: &crate::constitution::Constitution,
    n_agents: u32,
    seed: u64,
) -> (crate::world::PolicySet, Vec<String>) {
    let derived = derive_profile(constitution);
    let mut set = crate::world::PolicySet::new();
    for id in 1..=n_agents {
        let rng = crate::rng::stream(seed, crate::rng::tags::POLICY, &[id as u64]);
        set.insert(id, Box::new(ScriptedPolicy::new(derived.profile.clone(), rng)) as Box<dyn Policy>);
    }
    (set, derived.warnings)
}
