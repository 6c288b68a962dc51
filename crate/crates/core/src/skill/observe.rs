use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::{risk_reward, Parameter, RiskId, RiskVector};
use crate::sim::{displacements, Vec2, WorldState};

/// Coordinates in which a skill sees the spoon and emits its action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Spoon relative to the bowl center, table-aligned axes.
    #[default]
    Bowl,
    /// Spoon relative to the bowl center, axes rotated so +x points along the
    /// bowl's displacement from its start. Without this the scalar `d` says
    /// nothing about which way to push.
    BowlDrift,
    /// Spoon in table coordinates.
    Table,
}

impl Frame {
    /// Unit vector of the frame's +x axis in table coordinates.
    fn axis(self, state: &WorldState) -> Vec2 {
        match self {
            Frame::BowlDrift => (state.bowl.center - state.bowl.initial_center).normalized().unwrap_or(Vec2::new(1.0, 0.0)),
            Frame::Bowl | Frame::Table => Vec2::new(1.0, 0.0),
        }
    }

    /// Spoon position expressed in this frame.
    pub fn spoon(self, state: &WorldState) -> Vec2 {
        let rel = match self {
            Frame::Table => return state.spoon,
            Frame::Bowl | Frame::BowlDrift => state.spoon - state.bowl.center,
        };
        let u = self.axis(state);
        Vec2::new(rel.dot(u), rel.dot(u.perp()))
    }

    /// Maps an action given in this frame back to table coordinates.
    pub fn action_to_table(self, state: &WorldState, action: Vec2) -> Vec2 {
        let u = self.axis(state);
        u * action.x + u.perp() * action.y
    }
}

/// `[x, y, phase / phi_max]` with the spoon expressed in `frame`.
pub fn stir_observation(state: &WorldState, frame: Frame) -> [f64; 3] {
    let x = frame.spoon(state);
    [x.x, x.y, f64::from(state.phase) / f64::from(state.config.phi_max)]
}

/// The stir observation extended with the observable the risk is built on.
pub fn prevention_observation(state: &WorldState, frame: Frame, parameter: &Parameter) -> Result<Vec<f64>> {
    let chi = parameter
        .observe(state)
        .ok_or_else(|| Error::MissingObservable(parameter.to_string()))?;
    let mut obs = stir_observation(state, frame).to_vec();
    obs.push(chi);
    Ok(obs)
}

/// Sum of in-bowl particle displacements between two states.
pub fn stir_reward(prev: &WorldState, next: &WorldState) -> f64 {
    displacements(prev, next).into_iter().filter(|&(_, inside)| inside).map(|(d, _)| d).sum()
}

/// `1 - rho` of one risk.
pub fn prevention_reward(risks: &RiskVector, id: &RiskId) -> Result<f64> {
    risks.get(id).map(risk_reward).ok_or_else(|| Error::UnknownRisk(id.clone()))
}

/// The three built-in failures, in the order the compound reward sums them.
pub const COMPOUND_RISKS: [RiskId; 3] = [RiskId::Slide, RiskId::Overturn, RiskId::Spill];

/// Stir reward plus the prevention rewards of slide, overturn and spill.
pub fn compound_reward(prev: &WorldState, next: &WorldState, risks: &RiskVector) -> Result<f64> {
    let mut total = stir_reward(prev, next);
    for id in &COMPOUND_RISKS {
        total += prevention_reward(risks, id)?;
    }
    Ok(total)
}
