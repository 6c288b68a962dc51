//! Rule-based skill selection and the closed control loop.
//!
//! Every step the risk monitors are updated, the highest-priority active risk
//! picks its prevention skill, and with no active risk the base skill runs.
//! Risks absent from the priority table are monitored but never acted on.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::{observe_all, RiskId, RiskMonitor, RiskVector, TransitionKind};
use crate::skill::{stir_reward, SkillLibrary, SkillSpec};
use crate::sim::{Vec2, WorldState};

/// Risks in decreasing importance.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriorityTable(Vec<RiskId>);

impl PriorityTable {
    pub fn new(order: Vec<RiskId>) -> Result<Self> {
        for (i, r) in order.iter().enumerate() {
            if order[..i].contains(r) {
                return Err(Error::Config(format!("risk `{r}` listed twice in the priority table")));
            }
        }
        Ok(Self(order))
    }

    /// Overturn before spill before slide.
    pub fn standard() -> Self {
        Self(vec![RiskId::Overturn, RiskId::Spill, RiskId::Slide])
    }

    pub fn order(&self) -> &[RiskId] {
        &self.0
    }

    pub fn rank(&self, id: &RiskId) -> Option<usize> {
        self.0.iter().position(|r| r == id)
    }

    /// Every entry must have a prevention skill in `library`.
    pub fn check_library(&self, library: &SkillLibrary) -> Result<()> {
        library.base()?;
        match self.0.iter().find(|r| library.prevention(r).is_none()) {
            Some(r) => Err(Error::Unpreventable(r.clone())),
            None => Ok(()),
        }
    }
}

/// Base skill when no prioritized risk is active, otherwise the prevention
/// skill of the most important active one.
pub fn select<'a>(risks: &RiskVector, table: &PriorityTable, library: &'a SkillLibrary) -> Result<&'a SkillSpec> {
    match table.order().iter().find(|r| risks.is_active(r)) {
        None => library.base(),
        Some(r) => library.prevention(r).ok_or_else(|| Error::Unpreventable(r.clone())),
    }
}

/// One control step as seen by the arbiter (values before the action).
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRecord {
    pub step: u64,
    pub d: f64,
    pub theta: f64,
    pub v: f64,
    pub risks: RiskVector,
    pub skill: String,
    pub spoon: Vec2,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelectionTrace {
    pub records: Vec<SelectionRecord>,
}

impl SelectionTrace {
    /// Index of the first record at which `risk` reads safe, if any.
    pub fn first_safe(&self, risk: &RiskId) -> Option<usize> {
        self.records.iter().position(|r| !r.risks.is_active(risk))
    }

    /// `step,d,theta,V,rho_slide,rho_overturn,rho_spill,skill`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "d", "theta", "V", "rho_slide", "rho_overturn", "rho_spill", "skill"])?;
        for r in &self.records {
            let rho = |id: RiskId| r.risks.get(&id).map_or_else(String::new, |v| v.to_string());
            w.write_record([
                r.step.to_string(),
                r.d.to_string(),
                r.theta.to_string(),
                r.v.to_string(),
                rho(RiskId::Slide),
                rho(RiskId::Overturn),
                rho(RiskId::Spill),
                r.skill.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-episode statistics, the material of one results row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeMetrics {
    pub stir_reward: f64,
    /// Number of safe-to-risky transitions of the spill monitor.
    pub spill_count: usize,
    pub mean_d: f64,
    pub mean_theta: f64,
    pub steps: usize,
}

/// An episode stopped by an error; the trace up to the failure is kept.
#[derive(Debug)]
pub struct EpisodeAbort {
    pub error: Error,
    pub trace: SelectionTrace,
}

impl From<EpisodeAbort> for Error {
    fn from(a: EpisodeAbort) -> Self {
        a.error
    }
}

/// Runs the arbiter for `steps` control steps from `state`.
///
/// `monitor` should be fresh (or carry the state the episode starts from).
/// `on_step` sees the world after every step.
pub fn run_episode(
    library: &SkillLibrary,
    table: &PriorityTable,
    monitor: &mut RiskMonitor,
    state: &mut WorldState,
    steps: usize,
    on_step: &mut dyn FnMut(&WorldState, &SelectionRecord),
) -> std::result::Result<(EpisodeMetrics, SelectionTrace), EpisodeAbort> {
    let mut trace = SelectionTrace::default();
    let mut metrics = EpisodeMetrics { stir_reward: 0.0, spill_count: 0, mean_d: 0.0, mean_theta: 0.0, steps: 0 };
    let events_before = monitor.events().len();
    let estimators: Vec<_> = monitor.estimators().to_vec();
    macro_rules! abort {
        ($e:expr) => {
            return Err(EpisodeAbort { error: $e, trace })
        };
    }
    for _ in 0..steps {
        let observables = observe_all(state);
        let risks = match monitor.update(state.step_count, &observables) {
            Ok(v) => v,
            Err(e) => abort!(e),
        };
        let skill = match select(&risks, table, library) {
            Ok(s) => s,
            // halt: the spoon stays where it is
            Err(e) => abort!(e),
        };
        let action = match skill.act(state, &estimators) {
            Ok(a) => a,
            Err(e) => abort!(e),
        };
        let record = SelectionRecord {
            step: state.step_count,
            d: state.observe_d(),
            theta: state.observe_theta(),
            v: state.observe_v(),
            risks,
            skill: skill.name.clone(),
            spoon: state.spoon,
        };
        let prev = state.clone();
        state.step(action);
        metrics.stir_reward += stir_reward(&prev, state);
        metrics.mean_d += state.observe_d();
        metrics.mean_theta += state.observe_theta();
        metrics.steps += 1;
        on_step(state, &record);
        trace.records.push(record);
    }
    if metrics.steps > 0 {
        metrics.mean_d /= metrics.steps as f64;
        metrics.mean_theta /= metrics.steps as f64;
    }
    metrics.spill_count = monitor.events()[events_before..]
        .iter()
        .filter(|e| e.risk == RiskId::Spill && e.transition == TransitionKind::Activate)
        .count();
    Ok((metrics, trace))
}
