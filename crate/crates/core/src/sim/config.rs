use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIM_SCHEMA_VERSION: u32 = 1;

/// Whether forces from the spoon may move the bowl.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setup {
    Fixed,
    Unrestricted,
}

impl Setup {
    pub fn suffix(self) -> &'static str {
        match self {
            Setup::Fixed => "F",
            Setup::Unrestricted => "U",
        }
    }
}

/// Simulator parameters. Lengths in meters, angles in radians, forces in the
/// penalty-force units `contact_stiffness * penetration`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub schema_version: u32,
    pub n_particles: usize,
    pub particle_radius: f64,
    pub spoon_radius: f64,
    pub bowl_radius: f64,
    pub rim_height: f64,
    /// Half-width of the square workspace the spoon is clamped to.
    pub eta: f64,
    pub phi_max: u32,
    pub phi_step: u32,
    pub max_action_norm: f64,
    pub contact_stiffness: f64,
    pub static_friction_threshold: f64,
    /// Fraction of the above-threshold penetration converted into bowl motion.
    pub slide_gain: f64,
    pub tilt_gain: f64,
    pub tilt_restoring: f64,
    /// Tilt beyond which gravity no longer restores the bowl.
    pub tip_angle: f64,
    pub pile_packing_coefficient: f64,
    /// Per-step fraction of its offset from the bowl center a particle rolls
    /// back by (curved floor).
    pub floor_curvature: f64,
    /// Fraction of the spoon's push on particles passed to the bowl through
    /// floor friction.
    pub floor_drag: f64,
    /// Height gained per meter a particle is plowed by the spoon.
    pub plow_lift: f64,
    /// Fraction of particle height lost per step (settling).
    pub settle_rate: f64,
    pub relax_iterations: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            schema_version: SIM_SCHEMA_VERSION,
            n_particles: 10,
            particle_radius: 0.01,
            spoon_radius: 0.01,
            bowl_radius: 0.08,
            rim_height: 0.08,
            eta: 0.15,
            phi_max: 50,
            phi_step: 1,
            max_action_norm: 0.01,
            contact_stiffness: 1000.0,
            static_friction_threshold: 0.4,
            slide_gain: 0.6,
            tilt_gain: 0.003,
            tilt_restoring: 0.012,
            tip_angle: 0.6,
            pile_packing_coefficient: 1.0,
            floor_curvature: 0.05,
            floor_drag: 0.5,
            plow_lift: 1.0,
            settle_rate: 0.03,
            relax_iterations: 8,
            seed: 7,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("particle_radius", self.particle_radius),
            ("spoon_radius", self.spoon_radius),
            ("bowl_radius", self.bowl_radius),
            ("rim_height", self.rim_height),
            ("eta", self.eta),
            ("max_action_norm", self.max_action_norm),
            ("contact_stiffness", self.contact_stiffness),
            ("static_friction_threshold", self.static_friction_threshold),
            ("slide_gain", self.slide_gain),
            ("tilt_gain", self.tilt_gain),
            ("tilt_restoring", self.tilt_restoring),
            ("tip_angle", self.tip_angle),
            ("pile_packing_coefficient", self.pile_packing_coefficient),
            ("floor_curvature", self.floor_curvature),
            ("floor_drag", self.floor_drag),
            ("plow_lift", self.plow_lift),
            ("settle_rate", self.settle_rate),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        if self.schema_version != SIM_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported sim schema_version {} (expected {SIM_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.phi_max == 0 {
            return Err(Error::Config("phi_max must be > 0".into()));
        }
        if self.phi_step == 0 {
            return Err(Error::Config("phi_step must be >= 1".into()));
        }
        if self.n_particles == 0 {
            return Err(Error::Config("n_particles must be >= 1".into()));
        }
        if self.spoon_radius >= self.bowl_radius {
            return Err(Error::Config("spoon must fit inside the bowl".into()));
        }
        if self.slide_gain > 1.0 || self.settle_rate >= 1.0 || self.floor_curvature >= 1.0 {
            return Err(Error::Config("slide_gain must be <= 1, settle_rate and floor_curvature < 1".into()));
        }
        if self.tip_angle > std::f64::consts::FRAC_PI_2 {
            return Err(Error::Config("tip_angle must be <= pi/2".into()));
        }
        if self.relax_iterations == 0 {
            return Err(Error::Config("relax_iterations must be >= 1".into()));
        }
        Ok(())
    }

    /// Reads a standalone TOML simulator config.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: SimConfig = toml::from_str(&text).map_err(|e| Error::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }
}
