use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ConditionConfig, ExperimentConfig};
use super::output::{cell, hull_area, write_csv_with_hash, Aggregate};
use crate::arbiter::{run_episode, EpisodeMetrics, PriorityTable};
use crate::ddpg::{run_training, CurveRow, Snapshot, TrainingOutcome};
use crate::error::{Error, Result};
use crate::nn::write_atomic;
use crate::risk::{RiskEstimator, RiskId, RiskMonitor};
use crate::sim::{Setup, SimConfig, Vec2, WorldState};
use crate::skill::{initial_procedure, sha256_hex, Manifest, SkillEnv, SkillLibrary};

/// Offset between the master seed's block of evaluation worlds and the next.
const EVAL_SEED_STRIDE: u64 = 1 << 20;
const EVAL_SEED_OFFSET: u64 = 1000;
const EFFICACY_SEED_OFFSET: u64 = 500_000;

/// Training seed of a skill: the master seed mixed with a hash of the name,
/// so it does not depend on the order skills are trained in.
pub fn skill_seed(master: u64, name: &str) -> u64 {
    let digest = sha256_hex(name.as_bytes());
    master ^ u64::from_str_radix(&digest[..16], 16).expect("hex digest")
}

/// World seed of evaluation episode `episode`.
pub fn eval_seed(master: u64, episode: usize) -> u64 {
    master.wrapping_mul(EVAL_SEED_STRIDE).wrapping_add(EVAL_SEED_OFFSET + episode as u64)
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub skill: String,
    pub checkpoint: PathBuf,
    pub curve: PathBuf,
    pub best_eval_return: Option<f64>,
    pub best_episode: Option<usize>,
    pub rows: Vec<CurveRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub seed: u64,
    pub metrics: EpisodeMetrics,
}

/// One results row: mean/std per column, `None` where the setup cannot fail that way.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionMetrics {
    pub condition: String,
    pub setup: Setup,
    pub episodes: usize,
    pub steps: usize,
    pub stir_reward: Aggregate,
    pub spill_count: Aggregate,
    pub slide_d: Option<Aggregate>,
    pub overturn_theta: Option<Aggregate>,
}

pub const METRICS_HEADER: [&str; 12] = [
    "condition",
    "setup",
    "episodes",
    "steps",
    "stir_reward_mean",
    "stir_reward_std",
    "spill_count_mean",
    "spill_count_std",
    "slide_d_mean",
    "slide_d_std",
    "overturn_theta_mean",
    "overturn_theta_std",
];

impl ConditionMetrics {
    pub fn aggregate(condition: &str, setup: Setup, steps: usize, rows: &[EpisodeRow]) -> Result<Self> {
        let column = |f: fn(&EpisodeMetrics) -> f64| -> Result<Aggregate> {
            let values: Vec<f64> = rows.iter().map(|r| f(&r.metrics)).collect();
            Aggregate::of(&values).ok_or_else(|| Error::Config("no episodes to aggregate".into()))
        };
        let movable = setup == Setup::Unrestricted;
        Ok(Self {
            condition: condition.to_string(),
            setup,
            episodes: rows.len(),
            steps,
            stir_reward: column(|m| m.stir_reward)?,
            spill_count: column(|m| m.spill_count as f64)?,
            slide_d: if movable { Some(column(|m| m.mean_d)?) } else { None },
            overturn_theta: if movable { Some(column(|m| m.mean_theta)?) } else { None },
        })
    }

    pub fn record(&self) -> Vec<String> {
        let pair = |a: Option<Aggregate>| [cell(a.map(|a| a.mean)), cell(a.map(|a| a.std))];
        let mut row = vec![
            self.condition.clone(),
            self.setup.suffix().to_string(),
            self.episodes.to_string(),
            self.steps.to_string(),
        ];
        row.extend(pair(Some(self.stir_reward)));
        row.extend(pair(Some(self.spill_count)));
        row.extend(pair(self.slide_d));
        row.extend(pair(self.overturn_theta));
        row
    }
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub dir: PathBuf,
    pub metrics: ConditionMetrics,
    pub episodes: Vec<EpisodeRow>,
}

/// Per-step position of one particle under a condition.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub position: Vec2,
    pub bowl_center: Vec2,
    pub skill: String,
}

#[derive(Debug, Clone)]
pub struct ParticleTrace {
    pub path: PathBuf,
    pub rows: Vec<TraceRow>,
    /// Convex-hull area of the particle's path relative to the bowl center.
    pub hull_area: f64,
}

/// Recovery from a risk's initial procedure under one library.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficacyRow {
    pub risk: RiskId,
    pub episodes: usize,
    pub recovered: usize,
    /// Mean steps until the risk read safe, over recovered episodes.
    pub mean_steps: Option<f64>,
    /// Starts whose initial procedure failed and were resampled.
    pub resampled: usize,
}

impl EfficacyRow {
    pub fn rate(&self) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.recovered as f64 / self.episodes as f64
        }
    }
}

/// Starts `episodes` worlds from each prioritized risk's initial procedure and
/// runs the arbiter until that risk reads safe or `steps` run out.
#[allow(clippy::too_many_arguments)]
pub fn prevention_efficacy(
    sim: &SimConfig,
    estimators: &[RiskEstimator],
    library: &SkillLibrary,
    table: &PriorityTable,
    setup: Setup,
    episodes: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<EfficacyRow>> {
    table.check_library(library)?;
    let mut rows = Vec::new();
    for risk in table.order() {
        let estimator = estimators.iter().find(|e| e.id() == risk).ok_or_else(|| Error::UnknownRisk(risk.clone()))?;
        let mut row = EfficacyRow { risk: risk.clone(), episodes: 0, recovered: 0, mean_steps: None, resampled: 0 };
        let mut total_steps = 0usize;
        let mut attempt = 0u64;
        while row.episodes < episodes {
            if attempt as usize >= 10 * episodes {
                return Err(Error::Procedure { risk: risk.clone(), budget: crate::skill::PROCEDURE_BUDGET });
            }
            let world_seed = seed.wrapping_mul(EVAL_SEED_STRIDE).wrapping_add(EFFICACY_SEED_OFFSET + attempt);
            attempt += 1;
            let mut state = WorldState::reset_seeded(sim, setup, world_seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(world_seed);
            match initial_procedure(&mut state, estimator, &mut rng) {
                Ok(()) => {}
                Err(Error::Procedure { .. }) => {
                    row.resampled += 1;
                    continue;
                }
                Err(e) => return Err(e),
            }
            row.episodes += 1;
            let mut monitor = RiskMonitor::new(estimators.to_vec())?;
            let (_, trace) = run_episode(library, table, &mut monitor, &mut state, steps, &mut |_, _| {})?;
            if let Some(i) = trace.first_safe(risk) {
                row.recovered += 1;
                total_steps += i;
            }
        }
        if row.recovered > 0 {
            row.mean_steps = Some(total_steps as f64 / row.recovered as f64);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// An experiment bound to an output root.
///
/// Layout under the root:
/// * `skills/manifest.toml`, `skills/<name>/<name>.ckpt`, `skills/<name>/curve.csv`
/// * `<condition>/{config.snapshot, library.toml, metrics.csv, episodes.csv, trace_0.csv, events_0.csv}`
#[derive(Debug, Clone)]
pub struct Harness {
    pub config: ExperimentConfig,
    root: PathBuf,
    snapshot: String,
    hash: String,
}

impl Harness {
    pub fn new(config: ExperimentConfig, root: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        let snapshot = config.snapshot()?;
        let hash = sha256_hex(snapshot.as_bytes());
        Ok(Self { config, root: root.into(), snapshot, hash })
    }

    /// Uses `output_dir` or its environment override.
    pub fn from_config(config: ExperimentConfig) -> Result<Self> {
        let root = config.output_root();
        Self::new(config, root)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn skills_dir(&self) -> PathBuf {
        self.root.join("skills")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.skills_dir().join("manifest.toml")
    }

    pub fn condition_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    fn write_snapshot(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("config.snapshot"), self.snapshot.as_bytes())
    }

    /// Trains one skill, keeping the best evaluated agent, and records it in
    /// the shared manifest. Other manifest entries are left as they are.
    pub fn train(&self, name: &str) -> Result<TrainReport> {
        let spec = self.config.skill(name)?;
        let kind = spec.skill_kind()?;
        let estimators = self.config.estimators()?;
        let mut env = SkillEnv::new(self.config.sim.clone(), spec.setup, kind.clone(), spec.frame, estimators)?;
        let mut train = self.config.train.clone();
        train.seed = skill_seed(self.config.seed, name);
        if let crate::skill::SkillKind::Prevention(risk) = &kind {
            log::info!("{name}: every episode starts from the {risk} initial procedure");
        }

        let dir = self.skills_dir().join(name);
        let checkpoint = dir.join(format!("{name}.ckpt"));
        let outcome: TrainingOutcome = run_training(&mut env, &train, &mut |snapshot| match snapshot {
            Snapshot::Evaluation { episode, eval_return, agent, is_best } => {
                log::info!("{name}: episode {episode} eval return {eval_return:.4}{}", if is_best { " (best)" } else { "" });
                if is_best {
                    agent.to_checkpoint(None).save(&checkpoint)?;
                }
                Ok(())
            }
            Snapshot::Failure { episode, agent } => {
                log::error!("{name}: training diverged at episode {episode}; saving the last good agent");
                agent.to_checkpoint(None).save(&dir.join(format!("{name}.last_good.ckpt")))
            }
        })?;

        let bytes = outcome.best_agent.to_checkpoint(None).to_bytes();
        write_atomic(&checkpoint, &bytes)?;
        let curve = dir.join("curve.csv");
        write_csv_with_hash(&curve, &self.hash, |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["episode", "train_return", "eval_return", "actor_loss", "critic_loss", "epsilon"])?;
            for r in &outcome.curve {
                w.write_record([
                    r.episode.to_string(),
                    r.train_return.to_string(),
                    cell(r.eval_return),
                    r.actor_loss.to_string(),
                    r.critic_loss.to_string(),
                    r.epsilon.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
        self.write_snapshot(&dir)?;

        let manifest_path = self.manifest_path();
        let mut manifest = if manifest_path.exists() { Manifest::load(&manifest_path)? } else { Manifest::default() };
        let entry = Manifest::entry(name, &kind, spec.frame, PathBuf::from(name).join(format!("{name}.ckpt")), sha256_hex(&bytes));
        match manifest.skills.iter_mut().find(|e| e.name == name) {
            Some(existing) => *existing = entry,
            None => manifest.push(entry)?,
        }
        manifest.save(&manifest_path)?;

        Ok(TrainReport {
            skill: name.to_string(),
            checkpoint,
            curve,
            best_eval_return: outcome.best_eval_return,
            best_episode: outcome.best_episode,
            rows: outcome.curve,
        })
    }

    /// The condition's library as a manifest whose paths resolve against the
    /// skills directory.
    pub fn condition_manifest(&self, condition: &ConditionConfig) -> Result<Manifest> {
        let skills_dir = self.skills_dir();
        let trained = match Manifest::load(&self.manifest_path()) {
            Ok(m) => m,
            Err(Error::MissingArtifact(_)) => Manifest::default(),
            Err(e) => return Err(e),
        };
        let mut manifest = Manifest::default();
        for name in &condition.skills {
            let entry = trained
                .skills
                .iter()
                .find(|e| &e.name == name)
                .cloned()
                .ok_or_else(|| Error::MissingArtifact(skills_dir.join(name).join(format!("{name}.ckpt"))))?;
            manifest.push(entry)?;
        }
        Ok(manifest)
    }

    pub fn load_library(&self, condition: &ConditionConfig) -> Result<SkillLibrary> {
        let library = self.condition_manifest(condition)?.build_library(&self.skills_dir())?;
        condition.priority_table()?.check_library(&library)?;
        Ok(library)
    }

    /// Runs the condition for the configured episodes and writes its results.
    pub fn eval(&self, id: &str) -> Result<EvalReport> {
        let condition = self.config.condition(id)?.clone();
        let manifest = self.condition_manifest(&condition)?;
        let library = manifest.build_library(&self.skills_dir())?;
        let table = condition.priority_table()?;
        table.check_library(&library)?;
        let estimators = self.config.estimators()?;
        let dir = self.condition_dir(id);
        let steps = self.config.eval.steps;

        let mut rows = Vec::with_capacity(self.config.eval.episodes);
        for episode in 0..self.config.eval.episodes {
            let seed = eval_seed(self.config.seed, episode);
            let mut state = WorldState::reset_seeded(&self.config.sim, condition.setup, seed)?;
            let mut monitor = RiskMonitor::new(estimators.clone())?;
            let (metrics, trace) = match run_episode(&library, &table, &mut monitor, &mut state, steps, &mut |_, _| {}) {
                Ok(done) => done,
                Err(abort) => {
                    write_csv_with_hash(&dir.join(format!("trace_{episode}.csv")), &self.hash, |out| abort.trace.write_csv(out))?;
                    return Err(Error::Episode { episode, source: Box::new(abort.error) });
                }
            };
            if episode == 0 {
                write_csv_with_hash(&dir.join("trace_0.csv"), &self.hash, |out| trace.write_csv(out))?;
                write_csv_with_hash(&dir.join("events_0.csv"), &self.hash, |out| monitor.write_events(out))?;
            }
            rows.push(EpisodeRow { episode, seed, metrics });
        }
        let metrics = ConditionMetrics::aggregate(id, condition.setup, steps, &rows)?;

        let mut library_file = manifest.clone();
        for e in &mut library_file.skills {
            e.checkpoint = Path::new("..").join("skills").join(&e.checkpoint);
        }
        library_file.save(&dir.join("library.toml"))?;
        self.write_snapshot(&dir)?;
        let movable = condition.setup == Setup::Unrestricted;
        write_csv_with_hash(&dir.join("episodes.csv"), &self.hash, |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["episode", "seed", "stir_reward", "spill_count", "slide_d", "overturn_theta"])?;
            for r in &rows {
                let m = &r.metrics;
                w.write_record([
                    r.episode.to_string(),
                    r.seed.to_string(),
                    m.stir_reward.to_string(),
                    m.spill_count.to_string(),
                    cell(movable.then_some(m.mean_d)),
                    cell(movable.then_some(m.mean_theta)),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
        write_csv_with_hash(&dir.join("metrics.csv"), &self.hash, |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(METRICS_HEADER)?;
            w.write_record(metrics.record())?;
            w.flush()?;
            Ok(())
        })?;
        Ok(EvalReport { dir, metrics, episodes: rows })
    }

    /// Follows particle `particle` through evaluation episode 0 of a condition.
    pub fn trace(&self, id: &str, particle: usize) -> Result<ParticleTrace> {
        let condition = self.config.condition(id)?.clone();
        let library = self.load_library(&condition)?;
        let table = condition.priority_table()?;
        let count = self.config.sim.n_particles;
        if particle >= count {
            return Err(Error::ParticleIndex { index: particle, count });
        }
        let mut state = WorldState::reset_seeded(&self.config.sim, condition.setup, eval_seed(self.config.seed, 0))?;
        let mut monitor = RiskMonitor::new(self.config.estimators()?)?;
        let mut rows = Vec::with_capacity(self.config.eval.steps);
        let (_, trace) = run_episode(&library, &table, &mut monitor, &mut state, self.config.eval.steps, &mut |world, record| {
            rows.push(TraceRow {
                step: world.step_count,
                position: world.particles[particle].position,
                bowl_center: world.bowl.center,
                skill: record.skill.clone(),
            })
        })?;
        let relative: Vec<Vec2> = rows.iter().map(|r| r.position - r.bowl_center).collect();
        let dir = self.condition_dir(id);
        let path = dir.join(format!("trace_particle_{particle}.csv"));
        write_csv_with_hash(&path, &self.hash, |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["step", "x", "y", "bowl_x", "bowl_y", "skill"])?;
            for r in &rows {
                w.write_record([
                    r.step.to_string(),
                    r.position.x.to_string(),
                    r.position.y.to_string(),
                    r.bowl_center.x.to_string(),
                    r.bowl_center.y.to_string(),
                    r.skill.clone(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
        write_csv_with_hash(&dir.join("trace_0.csv"), &self.hash, |out| trace.write_csv(out))?;
        Ok(ParticleTrace { path, hull_area: hull_area(&relative), rows })
    }

    /// [`prevention_efficacy`] for a condition; also written to `efficacy.csv`.
    pub fn efficacy(&self, id: &str, episodes: usize, steps: usize) -> Result<Vec<EfficacyRow>> {
        let condition = self.config.condition(id)?.clone();
        let library = self.load_library(&condition)?;
        let rows = prevention_efficacy(
            &self.config.sim,
            &self.config.estimators()?,
            &library,
            &condition.priority_table()?,
            condition.setup,
            episodes,
            steps,
            self.config.seed,
        )?;
        write_csv_with_hash(&self.condition_dir(id).join("efficacy.csv"), &self.hash, |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["risk", "episodes", "recovered", "mean_steps", "resampled"])?;
            for r in &rows {
                w.write_record([
                    r.risk.to_string(),
                    r.episodes.to_string(),
                    r.recovered.to_string(),
                    cell(r.mean_steps),
                    r.resampled.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
        Ok(rows)
    }
}
