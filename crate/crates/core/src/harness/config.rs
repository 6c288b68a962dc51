use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arbiter::PriorityTable;
use crate::ddpg::TrainConfig;
use crate::error::{Error, Result};
use crate::risk::{RiskConfig, RiskEstimator, RiskId};
use crate::sim::{Setup, SimConfig};
use crate::skill::{Frame, SkillKind};

pub const EXPERIMENT_SCHEMA_VERSION: u32 = 1;

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_ENV: &str = "STIRGUARD_OUTPUT";

/// Scale of an experiment. Preset values fill every key the config file leaves out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 10 particles, 200 x 200 training, 20 x 300 evaluation, 64/48 networks.
    #[default]
    Desk,
    /// 40 particles, 1500 x 500 training, 20 x 1000 evaluation, 400/300 networks.
    Paper,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!("unknown preset `{other}` (expected desk or paper)"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    pub steps: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { episodes: 20, steps: 300 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindName {
    Base,
    Prevention,
    Compound,
}

/// A skill to train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillConfig {
    pub name: String,
    pub kind: KindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<RiskId>,
    #[serde(default)]
    pub frame: Frame,
    /// Setup the skill is trained in.
    pub setup: Setup,
}

impl SkillConfig {
    pub fn skill_kind(&self) -> Result<SkillKind> {
        match (self.kind, &self.risk) {
            (KindName::Base, None) => Ok(SkillKind::Base),
            (KindName::Compound, None) => Ok(SkillKind::Compound),
            (KindName::Prevention, Some(r)) => Ok(SkillKind::Prevention(r.clone())),
            (KindName::Prevention, None) => Err(Error::Config(format!("skill `{}`: prevention skills need a `risk`", self.name))),
            (_, Some(_)) => Err(Error::Config(format!("skill `{}`: only prevention skills take a `risk`", self.name))),
        }
    }
}

/// One evaluated configuration: a setup, a library and a priority table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionConfig {
    pub id: String,
    pub setup: Setup,
    /// Library members, in registration order.
    pub skills: Vec<String>,
    /// Risks acted on, most important first. Others are only monitored.
    #[serde(default)]
    pub priority: Vec<RiskId>,
}

impl ConditionConfig {
    pub fn priority_table(&self) -> Result<PriorityTable> {
        PriorityTable::new(self.priority.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub preset: Preset,
    pub output_dir: PathBuf,
    /// Master seed. Skill training and evaluation seeds derive from it.
    pub seed: u64,
    pub sim: SimConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    #[serde(rename = "risk")]
    pub risks: Vec<RiskConfig>,
    #[serde(rename = "skill")]
    pub skills: Vec<SkillConfig>,
    #[serde(rename = "condition")]
    pub conditions: Vec<ConditionConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(Preset::Desk)
    }
}

fn skill(name: &str, kind: KindName, risk: Option<RiskId>, frame: Frame, setup: Setup) -> SkillConfig {
    SkillConfig { name: name.into(), kind, risk, frame, setup }
}

fn condition(id: &str, setup: Setup, skills: &[&str], priority: &[RiskId]) -> ConditionConfig {
    ConditionConfig { id: id.into(), setup, skills: skills.iter().map(|s| s.to_string()).collect(), priority: priority.to_vec() }
}

/// The five skills of the stirring study.
pub fn default_skills() -> Vec<SkillConfig> {
    use KindName::*;
    vec![
        skill("stir", Base, None, Frame::Bowl, Setup::Fixed),
        skill("prevent_spill", Prevention, Some(RiskId::Spill), Frame::Bowl, Setup::Fixed),
        skill("prevent_overturn", Prevention, Some(RiskId::Overturn), Frame::Bowl, Setup::Unrestricted),
        skill("prevent_slide", Prevention, Some(RiskId::Slide), Frame::BowlDrift, Setup::Unrestricted),
        skill("compound", Compound, None, Frame::Bowl, Setup::Unrestricted),
    ]
}

/// `pi_b-F`, `pi_b-U`, `L2-F`, `L4-U` and `pi_c-U`.
pub fn default_conditions() -> Vec<ConditionConfig> {
    use RiskId::*;
    vec![
        condition("pi_b-F", Setup::Fixed, &["stir"], &[]),
        condition("pi_b-U", Setup::Unrestricted, &["stir"], &[]),
        condition("L2-F", Setup::Fixed, &["stir", "prevent_spill"], &[Spill]),
        condition(
            "L4-U",
            Setup::Unrestricted,
            &["stir", "prevent_spill", "prevent_overturn", "prevent_slide"],
            &[Overturn, Spill, Slide],
        ),
        condition("pi_c-U", Setup::Unrestricted, &["compound"], &[]),
    ]
}

fn toml_error(origin: &Path, e: impl fmt::Display) -> Error {
    Error::ConfigFile { path: origin.to_path_buf(), message: e.to_string() }
}

/// Tables merge key by key; anything else in `over` replaces `base`.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let (sim, train, eval) = match preset {
            Preset::Desk => (
                SimConfig { n_particles: 10, ..SimConfig::default() },
                TrainConfig {
                    episodes: 200,
                    steps_per_episode: 200,
                    actor_hidden: vec![64, 48],
                    critic_hidden: vec![64, 48],
                    ..TrainConfig::default()
                },
                EvalConfig { episodes: 20, steps: 300 },
            ),
            Preset::Paper => (
                SimConfig { n_particles: 40, ..SimConfig::default() },
                TrainConfig {
                    episodes: 1500,
                    steps_per_episode: 500,
                    actor_hidden: vec![400, 300],
                    critic_hidden: vec![400, 300],
                    ..TrainConfig::default()
                },
                EvalConfig { episodes: 20, steps: 1000 },
            ),
        };
        Self {
            schema_version: EXPERIMENT_SCHEMA_VERSION,
            preset,
            output_dir: PathBuf::from("runs"),
            seed: 1,
            sim,
            train,
            eval,
            risks: RiskConfig::defaults(),
            skills: default_skills(),
            conditions: default_conditions(),
        }
    }

    /// Parses a config file's text. `origin` only labels error messages.
    ///
    /// Keys present in the text win over the preset; the preset fills the rest.
    pub fn from_toml_str(text: &str, origin: &Path, overrides: &Overrides) -> Result<Self> {
        // typed parse first: its errors carry line and column
        let typed: ExperimentConfig = toml::from_str(text).map_err(|e| toml_error(origin, e))?;
        let user: toml::Table = toml::from_str(text).map_err(|e| toml_error(origin, e))?;
        let preset = overrides.preset.unwrap_or(typed.preset);
        let mut merged = toml::Table::try_from(Self::preset(preset)).map_err(|e| toml_error(origin, e))?;
        merge(&mut merged, user);
        merged.insert("preset".into(), toml::Value::String(preset.to_string()));
        let mut config: ExperimentConfig = merged.try_into().map_err(|e| toml_error(origin, e))?;
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_toml_str(&text, path, overrides)
    }

    /// The effective config as TOML. Its SHA-256 is the config hash.
    pub fn snapshot(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn estimators(&self) -> Result<Vec<RiskEstimator>> {
        self.risks.iter().map(RiskConfig::build).collect()
    }

    pub fn skill(&self, name: &str) -> Result<&SkillConfig> {
        self.skills.iter().find(|s| s.name == name).ok_or_else(|| Error::Config(format!("no skill named `{name}` in the config")))
    }

    pub fn condition(&self, id: &str) -> Result<&ConditionConfig> {
        self.conditions
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::Config(format!("no condition named `{id}` in the config")))
    }

    /// `output_dir`, unless the environment overrides it.
    pub fn output_root(&self) -> PathBuf {
        resolve_output_root(&self.output_dir, std::env::var_os(OUTPUT_ENV))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != EXPERIMENT_SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported experiment schema_version {}", self.schema_version)));
        }
        self.sim.validate()?;
        self.train.validate()?;
        if self.eval.episodes == 0 || self.eval.steps == 0 {
            return Err(Error::Config("eval episodes and steps must be >= 1".into()));
        }
        let estimators = self.estimators()?;
        let mut risk_ids = BTreeSet::new();
        for e in &estimators {
            if !risk_ids.insert(e.id().clone()) {
                return Err(Error::Config(format!("risk `{}` configured twice", e.id())));
            }
        }
        let mut names = BTreeSet::new();
        for s in &self.skills {
            if !names.insert(s.name.as_str()) {
                return Err(Error::DuplicateSkill(s.name.clone()));
            }
            if s.name.is_empty() || s.name.contains(['/', '\\']) || s.name.starts_with('.') {
                return Err(Error::Config(format!("skill name `{}` is not usable as a directory name", s.name)));
            }
            match s.skill_kind()? {
                SkillKind::Prevention(r) => {
                    if !risk_ids.contains(&r) {
                        return Err(Error::UnknownRisk(r));
                    }
                    if matches!(r, RiskId::Slide | RiskId::Overturn) && s.setup != Setup::Unrestricted {
                        return Err(Error::Config(format!("skill `{}`: the {r} procedure needs the unrestricted setup", s.name)));
                    }
                }
                SkillKind::Compound => {
                    if let Some(r) = crate::skill::COMPOUND_RISKS.iter().find(|r| !risk_ids.contains(r)) {
                        return Err(Error::UnknownRisk(r.clone()));
                    }
                }
                SkillKind::Base => {}
            }
        }
        let mut ids = BTreeSet::new();
        for c in &self.conditions {
            if !ids.insert(c.id.as_str()) {
                return Err(Error::Config(format!("condition `{}` configured twice", c.id)));
            }
            if c.id.is_empty() || c.id.contains(['/', '\\']) || c.id.starts_with('.') || c.id == "skills" {
                return Err(Error::Config(format!("condition id `{}` is not usable as a directory name", c.id)));
            }
            let expected = match c.id.rsplit_once('-').map(|(_, s)| s) {
                Some("F") => Some(Setup::Fixed),
                Some("U") => Some(Setup::Unrestricted),
                _ => None,
            };
            if expected.is_some_and(|e| e != c.setup) {
                return Err(Error::Config(format!("condition `{}`: suffix does not match setup `{:?}`", c.id, c.setup)));
            }
            let table = c.priority_table()?;
            let mut has_task_skill = false;
            for name in &c.skills {
                match self.skill(name)?.skill_kind()? {
                    SkillKind::Base | SkillKind::Compound => has_task_skill = true,
                    SkillKind::Prevention(_) => {}
                }
            }
            if !has_task_skill {
                return Err(Error::Config(format!("condition `{}` has no base or compound skill", c.id)));
            }
            for r in table.order() {
                if !risk_ids.contains(r) {
                    return Err(Error::UnknownRisk(r.clone()));
                }
                let covered = c.skills.iter().any(|n| self.skill(n).and_then(|s| s.skill_kind()).is_ok_and(|k| k == SkillKind::Prevention(r.clone())));
                if !covered {
                    return Err(Error::Config(format!("condition `{}`: no prevention skill for prioritized risk `{r}`", c.id)));
                }
            }
        }
        Ok(())
    }
}

pub fn resolve_output_root(configured: &Path, env: Option<std::ffi::OsString>) -> PathBuf {
    match env {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.to_path_buf(),
    }
}
