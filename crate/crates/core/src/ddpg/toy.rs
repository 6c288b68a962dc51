use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Environment;
use crate::error::Result;

/// One-dimensional point that should be driven to the origin.
///
/// The state is the position in `[-1, 1]`, the action a displacement bounded
/// by `max_step`, and the reward `-|x|` after the move.
#[derive(Debug, Clone)]
pub struct MoveToOrigin {
    pub position: f64,
    pub max_step: f64,
}

impl Default for MoveToOrigin {
    fn default() -> Self {
        Self { position: 0.0, max_step: 0.1 }
    }
}

impl Environment for MoveToOrigin {
    fn observation_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn action_bound(&self) -> f64 {
        self.max_step
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        self.position = ChaCha8Rng::seed_from_u64(seed).random_range(-1.0..=1.0);
        Ok(vec![self.position])
    }

    fn step(&mut self, action: &[f64]) -> Result<(Vec<f64>, f64)> {
        let a = action[0].clamp(-self.max_step, self.max_step);
        self.position = (self.position + a).clamp(-1.0, 1.0);
        Ok((vec![self.position], -self.position.abs()))
    }
}
