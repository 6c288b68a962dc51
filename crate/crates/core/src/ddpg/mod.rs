//! Deep deterministic policy gradient: replay memory, Ornstein-Uhlenbeck
//! exploration, target networks and the episode loop.

mod agent;
mod noise;
mod replay;
mod toy;
mod train;

pub use agent::{init_rng, select_action, Agent, Losses, Policy};
pub use noise::OuNoise;
pub use replay::{ReplayBuffer, Transition};
pub use toy::MoveToOrigin;
pub use train::{
    evaluate, evaluation_seeds, run_training, CurveRow, Environment, EpsilonSchedule, OuConfig, Snapshot, TrainConfig,
    TrainingOutcome,
};
