//! Experiment orchestration: training every skill, evaluating the study's
//! conditions and writing CSV results.
//!
//! Conditions are pure configuration. A condition names a setup, the skills
//! of its library and a priority table, so new rows need no code.

mod compare;
mod config;
mod output;
mod run;

pub use compare::{compare, ComparisonReport, ExpectedOrdering, Metric, PairOrdering};
pub use config::{
    default_conditions, default_skills, resolve_output_root, ConditionConfig, EvalConfig, ExperimentConfig, KindName,
    Overrides, Preset, SkillConfig, EXPERIMENT_SCHEMA_VERSION, OUTPUT_ENV,
};
pub use output::{
    cell, convex_hull, hull_area, parse_cell, polygon_area, read_csv_with_hash, write_csv_with_hash, Aggregate, HASH_PREFIX,
    NOT_APPLICABLE,
};
pub use run::{
    eval_seed, prevention_efficacy, skill_seed, ConditionMetrics, EfficacyRow, EpisodeRow, EvalReport, Harness, ParticleTrace,
    TraceRow, TrainReport, METRICS_HEADER,
};
