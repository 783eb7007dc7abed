//! Hierarchical global-local planning for instruction-following navigation.
//!
//! The planner decomposes an instruction into landmark-anchored sub-goals,
//! selects waypoints step by step, and audits the trajectory before
//! committing to each sub-goal. Decisions are delegated to a [`Navigator`],
//! which can be a scripted oracle or a language-model adapter.

pub mod episode;
pub mod fixtures;
pub mod instruction;
pub mod metrics;
pub mod navigator;
pub mod planner;
pub mod reference;
pub mod scene;
pub mod suite;

pub use episode::Episode;
pub use instruction::{InstructionParser, Lexicon, Plan, SubInstruction};
pub use navigator::{DriftOracle, GreedyOracle, Navigator};
pub use planner::{run_episode, EpisodeResult, Planner, PlannerConfig};
pub use scene::{NodeId, Pose, Scene};
