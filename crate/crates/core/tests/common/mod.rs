#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stirguard::ddpg::Policy;
use stirguard::nn::{Activation, DenseNet};
use stirguard::risk::RiskId;
use stirguard::skill::{Frame, SkillKind, SkillSpec};

/// Untrained actor with the observation width of `kind`.
pub fn policy(kind: &SkillKind, seed: u64) -> Policy {
    let dim = match kind {
        SkillKind::Base => 3,
        SkillKind::Prevention(_) => 4,
        SkillKind::Compound => 6,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Policy {
        actor: DenseNet::mlp(&[dim, 8, 2], Activation::Tanh { scale: 1.0 }, 3e-3, &mut rng),
        observation_scale: vec![0.08; dim],
        action_bound: 0.01,
    }
}

pub fn spec(name: &str, kind: SkillKind, seed: u64) -> SkillSpec {
    let frame = if kind == SkillKind::Prevention(RiskId::Slide) { Frame::BowlDrift } else { Frame::Bowl };
    SkillSpec { name: name.into(), policy: policy(&kind, seed), kind, frame }
}

pub fn stir() -> SkillSpec {
    spec("stir", SkillKind::Base, 1)
}

pub fn prevent(risk: RiskId) -> SkillSpec {
    let name = format!("prevent_{risk}");
    spec(&name, SkillKind::Prevention(risk), 2)
}
