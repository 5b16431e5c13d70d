//! Simulation, oracle, policy and data-pipeline toolkit for embodied agents
//! that can ask an information source questions before acting.
//!
//! The crate is organised around one augmented decision process ([`mdp`]):
//! an agent emits physical actions, questions, or free-form reasoning, and a
//! single step function routes each kind to the right place. Two environment
//! families plug into it ([`household`] and [`tabletop`]), answers come from
//! an [`oracle`], episodes are driven by the [`harness`], and the remaining
//! modules build policies, fine-tuning corpora and evaluation reports on top.

pub mod fixtures;
pub mod ftdata;
pub mod harness;
pub mod household;
pub mod mdp;
pub mod metrics;
pub mod names;
pub mod oracle;
pub mod policies;
pub mod records;
pub mod scenario;
pub mod seeding;
pub mod tabletop;

pub use harness::{run_episode, EpisodeLimits, EpisodeRecord, Outcome, StepRecord};
pub use mdp::{
    step, AugmentedAction, Context, EnvDynamics, EnvKind, Observation, PhysicalAction, TaskKind,
    TaskSpec, Variant, WorldState,
};
pub use oracle::{NoisyOracle, Oracle, RuleOracle};
