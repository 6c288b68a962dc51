use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{skill_observation, Frame};
use crate::ddpg::Policy;
use crate::error::{Error, Result};
use crate::nn::{write_atomic, Checkpoint};
use crate::risk::{RiskEstimator, RiskId};
use crate::sim::{Vec2, WorldState};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SkillKind {
    /// Completes the task (stirring).
    Base,
    /// Drives one risk back to safe.
    Prevention(RiskId),
    /// Single policy trained on task plus all risk rewards (baseline).
    Compound,
}

impl fmt::Display for SkillKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkillKind::Base => f.write_str("base"),
            SkillKind::Prevention(id) => write!(f, "prevention({id})"),
            SkillKind::Compound => f.write_str("compound"),
        }
    }
}

/// A named, trained skill.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillSpec {
    pub name: String,
    pub kind: SkillKind,
    pub frame: Frame,
    pub policy: Policy,
}

impl SkillSpec {
    pub fn observe(&self, state: &WorldState, estimators: &[RiskEstimator]) -> Result<Vec<f64>> {
        skill_observation(state, &self.kind, self.frame, estimators)
    }

    /// Noise-free action in table coordinates.
    pub fn act(&self, state: &WorldState, estimators: &[RiskEstimator]) -> Result<Vec2> {
        let obs = self.observe(state, estimators)?;
        let a = self.policy.act(&obs);
        Ok(self.frame.action_to_table(state, Vec2::new(a[0], a[1])))
    }
}

/// Ordered, append-only collection of skills.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkillLibrary {
    skills: Vec<SkillSpec>,
}

impl SkillLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, spec: SkillSpec) -> Result<()> {
        if self.skills.iter().any(|s| s.name == spec.name) {
            return Err(Error::DuplicateSkill(spec.name));
        }
        self.skills.push(spec);
        Ok(())
    }

    /// Consuming form of [`register`](Self::register).
    pub fn with(mut self, spec: SkillSpec) -> Result<Self> {
        self.register(spec)?;
        Ok(self)
    }

    pub fn skills(&self) -> &[SkillSpec] {
        &self.skills
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&SkillSpec> {
        self.skills.iter().find(|s| s.name == name)
    }

    /// First registered base skill. A library without one falls back to its
    /// first compound skill.
    pub fn base(&self) -> Result<&SkillSpec> {
        self.skills
            .iter()
            .find(|s| s.kind == SkillKind::Base)
            .or_else(|| self.skills.iter().find(|s| s.kind == SkillKind::Compound))
            .ok_or(Error::NoBaseSkill)
    }

    pub fn prevention(&self, risk: &RiskId) -> Option<&SkillSpec> {
        self.skills.iter().find(|s| s.kind == SkillKind::Prevention(risk.clone()))
    }
}

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    /// `base`, `prevention` or `compound`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<RiskId>,
    #[serde(default)]
    pub frame: Frame,
    /// Relative paths resolve against the manifest's directory.
    pub checkpoint: PathBuf,
    pub sha256: String,
}

impl ManifestEntry {
    pub fn skill_kind(&self) -> Result<SkillKind> {
        match (self.kind.as_str(), &self.risk) {
            ("base", None) => Ok(SkillKind::Base),
            ("compound", None) => Ok(SkillKind::Compound),
            ("prevention", Some(r)) => Ok(SkillKind::Prevention(r.clone())),
            (k, r) => Err(Error::Config(format!("skill `{}`: invalid kind `{k}` with risk {r:?}", self.name))),
        }
    }
}

/// On-disk description of a library: one entry per skill, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    #[serde(default, rename = "skill")]
    pub skills: Vec<ManifestEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self { schema_version: MANIFEST_SCHEMA_VERSION, skills: Vec::new() }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    Ok(sha256_hex(&bytes))
}

impl Manifest {
    pub fn entry(name: &str, kind: &SkillKind, frame: Frame, checkpoint: PathBuf, sha256: String) -> ManifestEntry {
        let (kind, risk) = match kind {
            SkillKind::Base => ("base", None),
            SkillKind::Prevention(r) => ("prevention", Some(r.clone())),
            SkillKind::Compound => ("compound", None),
        };
        ManifestEntry { name: name.to_string(), kind: kind.into(), risk, frame, checkpoint, sha256 }
    }

    /// Appends an entry; names stay unique.
    pub fn push(&mut self, entry: ManifestEntry) -> Result<()> {
        if self.skills.iter().any(|e| e.name == entry.name) {
            return Err(Error::DuplicateSkill(entry.name));
        }
        self.skills.push(entry);
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let manifest: Manifest = toml::from_str(&text)
            .map_err(|e| Error::ConfigFile { path: path.to_path_buf(), message: e.to_string() })?;
        if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported manifest schema_version {}", manifest.schema_version)));
        }
        Ok(manifest)
    }

    /// Loads every checkpoint, verifying its checksum, and rebuilds the library.
    pub fn build_library(&self, base_dir: &Path) -> Result<SkillLibrary> {
        let mut library = SkillLibrary::new();
        for entry in &self.skills {
            let path = base_dir.join(&entry.checkpoint);
            let bytes = std::fs::read(&path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::MissingArtifact(path.clone()),
                _ => Error::Io(e),
            })?;
            let digest = sha256_hex(&bytes);
            if digest != entry.sha256 {
                return Err(Error::Checkpoint(format!(
                    "{}: checksum {digest} does not match manifest {}",
                    path.display(),
                    entry.sha256
                )));
            }
            let policy = Policy::from_checkpoint(&Checkpoint::from_bytes(&bytes)?)?;
            library.register(SkillSpec { name: entry.name.clone(), kind: entry.skill_kind()?, frame: entry.frame, policy })?;
        }
        Ok(library)
    }
}
