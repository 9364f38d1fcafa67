//! Seeded grid-world society: state, observation, action resolution, the
//! Overseer, episode loop and trajectory logs.

mod config;
mod engine;
mod episode;
mod log;
mod types;

pub use config::{ResourceSpawn, TeamSpec, WorldConfig};
pub use engine::GridWorld;
pub use episode::{run_episode, EpisodeOptions, PolicySet};
pub use log::{
    replay, Divergence, LogError, LogFooter, LogHeader, ParsedLog, ReplayReport, TrajectoryLog, TurnRecord,
    ENGINE_VERSION, LOG_FORMAT,
};
pub use types::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("invalid world config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("agent {0} is dead")]
    DeadAgent(AgentId),
    #[error("no action submitted for alive agent {0}")]
    MissingAction(AgentId),
    #[error("no policy supplied for agent {0}")]
    MissingPolicy(AgentId),
    #[error("horizon of {0} turns already reached")]
    HorizonReached(u32),
    #[error("turn {0} is not an Overseer turn")]
    OffSchedule(u32),
}
