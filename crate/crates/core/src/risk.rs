//! Rule-based risk estimation: one two-state hysteresis machine per failure.
//!
//! An estimator reads a single scalar observable and switches
//! `Safe -> Risky` when the value rises strictly above the activation
//! threshold, and `Risky -> Safe` when it falls strictly below the
//! deactivation threshold. Inside the band it holds its state.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::sim::WorldState;

/// Failure identity. The three built-in failures plus any registered at runtime.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RiskId {
    Slide,
    Overturn,
    Spill,
    Custom(String),
}

impl RiskId {
    pub fn as_str(&self) -> &str {
        match self {
            RiskId::Slide => "slide",
            RiskId::Overturn => "overturn",
            RiskId::Spill => "spill",
            RiskId::Custom(name) => name,
        }
    }
}

impl fmt::Display for RiskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "slide" => RiskId::Slide,
            "overturn" => RiskId::Overturn,
            "spill" => RiskId::Spill,
            "" => return Err(Error::Config("empty risk id".into())),
            other => RiskId::Custom(other.to_string()),
        })
    }
}

impl Serialize for RiskId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for RiskId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which observable an estimator reads.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parameter {
    /// Bowl displacement from its initial position (`d`).
    Distance,
    /// Bowl tilt relative to upright (`theta`).
    Tilt,
    /// Maximum excluded volume ratio over particles (`V`).
    ExcludedVolume,
    Custom(String),
}

impl Parameter {
    pub fn as_str(&self) -> &str {
        match self {
            Parameter::Distance => "d",
            Parameter::Tilt => "theta",
            Parameter::ExcludedVolume => "V",
            Parameter::Custom(name) => name,
        }
    }

    /// Reads the parameter from the simulator, if it is one the simulator knows.
    pub fn observe(&self, state: &WorldState) -> Option<f64> {
        match self {
            Parameter::Distance => Some(state.observe_d()),
            Parameter::Tilt => Some(state.observe_theta()),
            Parameter::ExcludedVolume => Some(state.observe_v()),
            Parameter::Custom(_) => None,
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Parameter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "d" => Parameter::Distance,
            "theta" => Parameter::Tilt,
            "V" => Parameter::ExcludedVolume,
            "" => return Err(Error::Config("empty parameter id".into())),
            other => Parameter::Custom(other.to_string()),
        })
    }
}

impl Serialize for Parameter {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Parameter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RiskState {
    Safe,
    Risky,
}

/// One hysteresis risk estimator. Estimators are plain values; `update`
/// returns the next estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEstimator {
    id: RiskId,
    parameter: Parameter,
    kappa_a: f64,
    kappa_d: f64,
    state: RiskState,
}

impl RiskEstimator {
    /// A fresh estimator, initially `Safe`. Requires `kappa_d < kappa_a`.
    pub fn new(id: RiskId, parameter: Parameter, kappa_a: f64, kappa_d: f64) -> Result<Self> {
        if !(kappa_a.is_finite() && kappa_d.is_finite()) {
            return Err(Error::Config(format!("thresholds of `{id}` must be finite")));
        }
        if kappa_d >= kappa_a {
            return Err(Error::Config(format!(
                "risk `{id}`: deactivation threshold {kappa_d} must be below activation threshold {kappa_a}"
            )));
        }
        Ok(Self { id, parameter, kappa_a, kappa_d, state: RiskState::Safe })
    }

    pub fn slide() -> Self {
        Self::new(RiskId::Slide, Parameter::Distance, 0.05, 0.02).expect("valid thresholds")
    }

    pub fn overturn() -> Self {
        Self::new(RiskId::Overturn, Parameter::Tilt, 0.3, 0.1).expect("valid thresholds")
    }

    pub fn spill() -> Self {
        Self::new(RiskId::Spill, Parameter::ExcludedVolume, 0.66, 0.33).expect("valid thresholds")
    }

    /// Slide, overturn and spill with their default thresholds.
    pub fn defaults() -> Vec<Self> {
        vec![Self::slide(), Self::overturn(), Self::spill()]
    }

    pub fn id(&self) -> &RiskId {
        &self.id
    }

    pub fn parameter(&self) -> &Parameter {
        &self.parameter
    }

    pub fn kappa_a(&self) -> f64 {
        self.kappa_a
    }

    pub fn kappa_d(&self) -> f64 {
        self.kappa_d
    }

    pub fn state(&self) -> RiskState {
        self.state
    }

    pub fn with_state(mut self, state: RiskState) -> Self {
        self.state = state;
        self
    }

    /// Same thresholds, state reset to `Safe`.
    pub fn fresh(&self) -> Self {
        self.clone().with_state(RiskState::Safe)
    }

    pub fn update(&self, chi: f64) -> Self {
        let state = match self.state {
            RiskState::Safe if chi > self.kappa_a => RiskState::Risky,
            RiskState::Risky if chi < self.kappa_d => RiskState::Safe,
            s => s,
        };
        Self { state, ..self.clone() }
    }

    /// Binary risk value: 1 when risky.
    pub fn risk_value(&self) -> u8 {
        u8::from(self.state == RiskState::Risky)
    }
}

/// Reward of a failure-prevention objective, `1 - rho`.
///
/// # Panics
/// If `rho` is not 0 or 1.
pub fn risk_reward(rho: u8) -> f64 {
    assert!(rho <= 1, "risk value must be 0 or 1, got {rho}");
    1.0 - f64::from(rho)
}

/// Binary risk value per registered risk, in registration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RiskVector {
    entries: Vec<(RiskId, u8)>,
}

impl RiskVector {
    pub fn from_estimators(estimators: &[RiskEstimator]) -> Self {
        Self { entries: estimators.iter().map(|e| (e.id.clone(), e.risk_value())).collect() }
    }

    pub fn from_pairs(entries: impl IntoIterator<Item = (RiskId, u8)>) -> Self {
        Self { entries: entries.into_iter().collect() }
    }

    pub fn get(&self, id: &RiskId) -> Option<u8> {
        self.entries.iter().find(|(k, _)| k == id).map(|&(_, v)| v)
    }

    pub fn is_active(&self, id: &RiskId) -> bool {
        self.get(id) == Some(1)
    }

    pub fn any_active(&self) -> bool {
        self.entries.iter().any(|&(_, v)| v == 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RiskId, u8)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Observable values keyed by parameter.
pub type Observables = BTreeMap<Parameter, f64>;

/// Reads every simulator-provided parameter.
pub fn observe_all(state: &WorldState) -> Observables {
    [Parameter::Distance, Parameter::Tilt, Parameter::ExcludedVolume]
        .into_iter()
        .map(|p| {
            let v = p.observe(state).expect("built-in parameter");
            (p, v)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    Activate,
    Deactivate,
}

impl TransitionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransitionKind::Activate => "activate",
            TransitionKind::Deactivate => "deactivate",
        }
    }
}

/// One row of the risk-event log.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEvent {
    pub step: u64,
    pub risk: RiskId,
    pub transition: TransitionKind,
    pub chi: f64,
}

/// Updates every estimator from its observable and returns the new
/// estimators with the resulting risk vector.
pub fn update_all(risks: &[RiskEstimator], observables: &Observables) -> Result<(Vec<RiskEstimator>, RiskVector)> {
    let updated = risks
        .iter()
        .map(|r| {
            observables
                .get(&r.parameter)
                .map(|&chi| r.update(chi))
                .ok_or_else(|| Error::MissingObservable(r.parameter.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let vector = RiskVector::from_estimators(&updated);
    Ok((updated, vector))
}

/// A set of estimators tracked over an episode, with an event log.
#[derive(Debug, Clone)]
pub struct RiskMonitor {
    estimators: Vec<RiskEstimator>,
    events: Vec<RiskEvent>,
}

impl RiskMonitor {
    pub fn new(estimators: Vec<RiskEstimator>) -> Result<Self> {
        for (i, e) in estimators.iter().enumerate() {
            if estimators[..i].iter().any(|o| o.id == e.id) {
                return Err(Error::Config(format!("risk `{}` registered twice", e.id)));
            }
        }
        Ok(Self { estimators, events: Vec::new() })
    }

    /// Adds a novel risk at runtime.
    pub fn register(&mut self, id: RiskId, parameter: Parameter, kappa_a: f64, kappa_d: f64) -> Result<()> {
        if self.estimators.iter().any(|e| e.id == id) {
            return Err(Error::Config(format!("risk `{id}` registered twice")));
        }
        self.estimators.push(RiskEstimator::new(id, parameter, kappa_a, kappa_d)?);
        Ok(())
    }

    pub fn estimators(&self) -> &[RiskEstimator] {
        &self.estimators
    }

    pub fn estimator(&self, id: &RiskId) -> Option<&RiskEstimator> {
        self.estimators.iter().find(|e| &e.id == id)
    }

    pub fn vector(&self) -> RiskVector {
        RiskVector::from_estimators(&self.estimators)
    }

    pub fn events(&self) -> &[RiskEvent] {
        &self.events
    }

    /// Updates every estimator and logs state changes against `step`.
    pub fn update(&mut self, step: u64, observables: &Observables) -> Result<RiskVector> {
        let (updated, vector) = update_all(&self.estimators, observables)?;
        for (old, new) in self.estimators.iter().zip(&updated) {
            if old.state != new.state {
                let transition = match new.state {
                    RiskState::Risky => TransitionKind::Activate,
                    RiskState::Safe => TransitionKind::Deactivate,
                };
                self.events.push(RiskEvent {
                    step,
                    risk: new.id.clone(),
                    transition,
                    chi: observables[&new.parameter],
                });
            }
        }
        self.estimators = updated;
        Ok(vector)
    }

    pub fn observe(&mut self, state: &WorldState) -> Result<RiskVector> {
        self.update(state.step_count, &observe_all(state))
    }

    pub fn reset(&mut self) {
        for e in &mut self.estimators {
            e.state = RiskState::Safe;
        }
        self.events.clear();
    }

    /// Writes the event log as `step,risk_id,transition,chi`.
    pub fn write_events<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "risk_id", "transition", "chi"])?;
        for e in &self.events {
            w.write_record([e.step.to_string(), e.risk.to_string(), e.transition.as_str().into(), e.chi.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Serialized form of one estimator in the experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskConfig {
    pub id: RiskId,
    pub parameter: Parameter,
    pub kappa_a: f64,
    pub kappa_d: f64,
}

impl RiskConfig {
    pub fn build(&self) -> Result<RiskEstimator> {
        RiskEstimator::new(self.id.clone(), self.parameter.clone(), self.kappa_a, self.kappa_d)
    }

    pub fn defaults() -> Vec<Self> {
        RiskEstimator::defaults()
            .into_iter()
            .map(|e| RiskConfig { id: e.id, parameter: e.parameter, kappa_a: e.kappa_a, kappa_d: e.kappa_d })
            .collect()
    }
}

/// Maps the highest point of a sensed particle cloud to an excluded-volume
/// estimate: `(max_z - z_bowl) / 2r`, floored at zero.
pub fn spill_volume_from_height(max_z: f64, z_bowl: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Config(format!("particle radius must be > 0, got {r}")));
    }
    Ok(((max_z - z_bowl) / (2.0 * r)).max(0.0))
}
