//! Scripted perturbations that put the world into a risky state so prevention
//! skills train from where they will be used.

use rand::Rng;

use crate::error::{Error, Result};
use crate::risk::{RiskEstimator, RiskId, RiskState};
use crate::sim::{Setup, Vec2, WorldState};

/// Step budget of the spoon-driven procedures.
pub const PROCEDURE_BUDGET: usize = 200;

fn triggered(estimator: &RiskEstimator, state: &WorldState) -> Result<bool> {
    let chi = estimator
        .parameter()
        .observe(state)
        .ok_or_else(|| Error::MissingObservable(estimator.parameter().to_string()))?;
    Ok(estimator.fresh().update(chi).state() == RiskState::Risky)
}

/// Drives `state` until a fresh `estimator` reads risky.
///
/// * slide: the bowl (with its contents) is displaced to a uniformly random
///   direction at a distance in `(kappa_a, 2 kappa_a]`;
/// * overturn: the spoon moves at full speed in a random direction;
/// * spill: the spoon visits random points inside the bowl.
///
/// Slide and overturn need the unrestricted setup. Failing to trigger within
/// [`PROCEDURE_BUDGET`] steps is a [`Error::Procedure`].
pub fn initial_procedure<R: Rng + ?Sized>(state: &mut WorldState, estimator: &RiskEstimator, rng: &mut R) -> Result<()> {
    let id = estimator.id().clone();
    if matches!(id, RiskId::Slide | RiskId::Overturn) && state.setup != Setup::Unrestricted {
        return Err(Error::Config(format!("the {id} procedure needs the unrestricted setup")));
    }
    let step_norm = state.config.max_action_norm;
    match id {
        RiskId::Slide => {
            let kappa = estimator.kappa_a();
            // (kappa, 2 kappa]: reflect the half-open [0, 1) draw
            let distance = kappa * (2.0 - rng.random_range(0.0..1.0));
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            state.displace_bowl(Vec2::from_angle(angle) * distance);
        }
        RiskId::Overturn => {
            let direction = Vec2::from_angle(rng.random_range(0.0..std::f64::consts::TAU));
            for _ in 0..PROCEDURE_BUDGET {
                if triggered(estimator, state)? {
                    break;
                }
                state.step(direction * step_norm);
            }
        }
        RiskId::Spill => {
            let reach = state.bowl.radius - state.config.spoon_radius;
            let mut target = state.spoon;
            for _ in 0..PROCEDURE_BUDGET {
                if triggered(estimator, state)? {
                    break;
                }
                if (target - state.spoon).norm() < 0.5 * step_norm {
                    let angle = rng.random_range(0.0..std::f64::consts::TAU);
                    let radius = reach * rng.random_range(0.0f64..1.0).sqrt();
                    target = state.bowl.center + Vec2::from_angle(angle) * radius;
                }
                state.step(target - state.spoon);
            }
        }
        RiskId::Custom(_) => {
            return Err(Error::Config(format!("no initial procedure for custom risk `{id}`")));
        }
    }
    if triggered(estimator, state)? {
        Ok(())
    } else {
        Err(Error::Procedure { risk: id, budget: PROCEDURE_BUDGET })
    }
}
