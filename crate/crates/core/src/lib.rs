//! Modular failure prevention for a simulated stirring robot.
//!
//! A planar stirring simulator ([`sim`]) feeds hysteresis risk monitors
//! ([`risk`]). Skills ([`skill`]) are small actor networks ([`nn`]) trained with
//! DDPG ([`ddpg`]), and an arbiter ([`arbiter`]) picks the base skill or the
//! prevention skill of the most important active risk at every step. The
//! [`harness`] module runs the comparison conditions and writes CSV results.

pub mod arbiter;
pub mod ddpg;
pub mod error;
pub mod harness;
pub mod nn;
pub mod risk;
pub mod sim;
pub mod skill;

pub use error::{Error, Result};
