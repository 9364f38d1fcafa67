//! Grid-world society simulation: world engine, constitutions, agent
//! policies, stability scoring, constitution search and result statistics.

pub mod constitution;
pub mod evolution;
pub mod policy;
pub mod rng;
pub mod scoring;
pub mod stats;
pub mod world;
