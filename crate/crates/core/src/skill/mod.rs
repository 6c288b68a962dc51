//! Skills of the stirring task: observations, rewards, initial procedures, a
//! training environment per skill, and the skill library.

mod env;
mod library;
mod observe;
mod procedure;

pub use env::{parameter_scale, skill_observation, skill_observation_scale, SkillEnv};
pub use library::{file_sha256, sha256_hex, Manifest, ManifestEntry, SkillKind, SkillLibrary, SkillSpec, MANIFEST_SCHEMA_VERSION};
pub use observe::{
    compound_reward, prevention_observation, prevention_reward, stir_observation, stir_reward, Frame, COMPOUND_RISKS,
};
pub use procedure::{initial_procedure, PROCEDURE_BUDGET};
