use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{compound_reward, initial_procedure, prevention_observation, prevention_reward, stir_observation, stir_reward};
use super::{Frame, SkillKind};
use crate::ddpg::Environment;
use crate::error::{Error, Result};
use crate::risk::{observe_all, Parameter, RiskEstimator, RiskId, RiskMonitor, RiskVector};
use crate::sim::{SimConfig, Setup, Vec2, WorldState};

/// Typical magnitude of a risk observable, used to scale network inputs.
pub fn parameter_scale(parameter: &Parameter, estimators: &[RiskEstimator]) -> f64 {
    match parameter {
        Parameter::Distance => 0.05,
        Parameter::Tilt => 0.3,
        Parameter::ExcludedVolume => 1.0,
        Parameter::Custom(_) => estimators
            .iter()
            .find(|e| e.parameter() == parameter)
            .map_or(1.0, |e| e.kappa_a().abs().max(1e-9)),
    }
}

/// Observation for a skill kind, given the registered estimators.
pub fn skill_observation(state: &WorldState, kind: &SkillKind, frame: Frame, estimators: &[RiskEstimator]) -> Result<Vec<f64>> {
    match kind {
        SkillKind::Base => Ok(stir_observation(state, frame).to_vec()),
        SkillKind::Prevention(id) => {
            let e = estimators.iter().find(|e| e.id() == id).ok_or_else(|| Error::UnknownRisk(id.clone()))?;
            prevention_observation(state, frame, e.parameter())
        }
        SkillKind::Compound => {
            let mut obs = stir_observation(state, frame).to_vec();
            obs.extend([state.observe_d(), state.observe_theta(), state.observe_v()]);
            Ok(obs)
        }
    }
}

/// Input scaling matching [`skill_observation`].
pub fn skill_observation_scale(config: &SimConfig, kind: &SkillKind, estimators: &[RiskEstimator]) -> Result<Vec<f64>> {
    let reach = config.bowl_radius;
    let mut scale = vec![reach, reach, 1.0];
    match kind {
        SkillKind::Base => {}
        SkillKind::Prevention(id) => {
            let e = estimators.iter().find(|e| e.id() == id).ok_or_else(|| Error::UnknownRisk(id.clone()))?;
            scale.push(parameter_scale(e.parameter(), estimators));
        }
        SkillKind::Compound => scale.extend([0.05, 0.3, 1.0]),
    }
    Ok(scale)
}

/// The stirring world seen through one skill: its observation, its reward and,
/// for prevention skills, its initial procedure.
#[derive(Debug, Clone)]
pub struct SkillEnv {
    config: Arc<SimConfig>,
    setup: Setup,
    kind: SkillKind,
    frame: Frame,
    estimators: Vec<RiskEstimator>,
    monitor: RiskMonitor,
    state: WorldState,
    risks: RiskVector,
}

impl SkillEnv {
    pub fn new(config: SimConfig, setup: Setup, kind: SkillKind, frame: Frame, estimators: Vec<RiskEstimator>) -> Result<Self> {
        let state = WorldState::reset(&config, setup)?;
        if let SkillKind::Prevention(id) = &kind {
            if !estimators.iter().any(|e| e.id() == id) {
                return Err(Error::UnknownRisk(id.clone()));
            }
        }
        if kind == SkillKind::Compound {
            for id in &super::COMPOUND_RISKS {
                if !estimators.iter().any(|e| e.id() == id) {
                    return Err(Error::UnknownRisk(id.clone()));
                }
            }
        }
        let monitor = RiskMonitor::new(estimators.clone())?;
        Ok(Self {
            config: Arc::new(config),
            setup,
            kind,
            frame,
            risks: monitor.vector(),
            estimators,
            monitor,
            state,
        })
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn risks(&self) -> &RiskVector {
        &self.risks
    }

    pub fn kind(&self) -> &SkillKind {
        &self.kind
    }

    fn observation(&self) -> Result<Vec<f64>> {
        skill_observation(&self.state, &self.kind, self.frame, &self.estimators)
    }

    fn risk_of_kind(&self) -> Option<&RiskId> {
        match &self.kind {
            SkillKind::Prevention(id) => Some(id),
            _ => None,
        }
    }
}

impl Environment for SkillEnv {
    fn observation_dim(&self) -> usize {
        match self.kind {
            SkillKind::Base => 3,
            SkillKind::Prevention(_) => 4,
            SkillKind::Compound => 6,
        }
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn action_bound(&self) -> f64 {
        self.config.max_action_norm
    }

    fn observation_scale(&self) -> Vec<f64> {
        skill_observation_scale(&self.config, &self.kind, &self.estimators).expect("kind validated on construction")
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        self.state = WorldState::reset_seeded(&self.config, self.setup, seed)?;
        self.monitor.reset();
        if let Some(id) = self.risk_of_kind().cloned() {
            let estimator = self.monitor.estimator(&id).cloned().ok_or(Error::UnknownRisk(id))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            initial_procedure(&mut self.state, &estimator, &mut rng)?;
        }
        self.risks = self.monitor.update(self.state.step_count, &observe_all(&self.state))?;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<(Vec<f64>, f64)> {
        let local = Vec2::new(action[0], action[1]);
        let table_action = self.frame.action_to_table(&self.state, local);
        let prev = self.state.clone();
        self.state.step(table_action);
        self.risks = self.monitor.update(self.state.step_count, &observe_all(&self.state))?;
        let reward = match &self.kind {
            SkillKind::Base => stir_reward(&prev, &self.state),
            SkillKind::Prevention(id) => prevention_reward(&self.risks, id)?,
            SkillKind::Compound => compound_reward(&prev, &self.state, &self.risks)?,
        };
        Ok((self.observation()?, reward))
    }
}
