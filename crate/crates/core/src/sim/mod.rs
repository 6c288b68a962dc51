//! Planar pseudo-3D stirring simulator.
//!
//! Discs (particles) live in the table plane inside a circular bowl and are
//! pushed by a kinematic spoon. Vertical effects are reduced to a per-particle
//! height driven by squeezing, and a scalar bowl tilt. One call to
//! [`WorldState::step`] is one control step.

mod config;
pub mod contact;
mod trajectory;
mod vec2;
mod world;

pub use config::{SimConfig, Setup, SIM_SCHEMA_VERSION};
pub use trajectory::TrajectoryWriter;
pub use vec2::Vec2;
pub use world::{advance_phase, displacements, BowlState, Particle, StepInfo, WorldState};
