use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{init_rng, select_action, Agent, OuNoise, Policy, ReplayBuffer, Transition};
use crate::error::{Error, Result};

/// An episodic task seen through one skill's observation and reward.
pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Per-component action bound.
    fn action_bound(&self) -> f64;
    /// Typical magnitude of each observation component, used as input scaling.
    fn observation_scale(&self) -> Vec<f64> {
        vec![1.0; self.observation_dim()]
    }
    /// Starts an episode (including any initial procedure) from `seed`.
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    /// Applies an action; returns the next observation and the reward.
    fn step(&mut self, action: &[f64]) -> Result<(Vec<f64>, f64)>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub floor: f64,
    /// Fraction of all episodes over which epsilon decays to `floor`.
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: 1.0, floor: 0.05, decay_fraction: 0.8 }
    }
}

impl EpsilonSchedule {
    /// Episode index at which the floor is reached.
    pub fn horizon(&self, episodes: usize) -> usize {
        ((episodes as f64) * self.decay_fraction).round() as usize
    }

    pub fn value(&self, episode: usize, episodes: usize) -> f64 {
        let horizon = self.horizon(episodes);
        if episode >= horizon || horizon == 0 {
            return self.floor;
        }
        self.start + (self.floor - self.start) * (episode as f64 / horizon as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OuConfig {
    pub mu: f64,
    pub sigma: f64,
    pub theta: f64,
    pub dt: f64,
}

impl Default for OuConfig {
    fn default() -> Self {
        Self { mu: 0.0, sigma: 1.0, theta: 0.15, dt: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub tau: f64,
    pub buffer_capacity: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub final_layer_scale: f64,
    pub epsilon: EpsilonSchedule,
    pub noise: OuConfig,
    pub eval_every: usize,
    pub eval_rollouts: usize,
    /// Gradient steps per environment step.
    pub updates_per_step: usize,
    /// Attempts at an episode start whose initial procedure fails.
    pub procedure_retries: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 200,
            steps_per_episode: 200,
            batch_size: 128,
            gamma: 0.99,
            actor_lr: 1e-4,
            critic_lr: 1e-4,
            tau: 0.005,
            buffer_capacity: 100_000,
            actor_hidden: vec![400, 300],
            critic_hidden: vec![400, 300],
            final_layer_scale: 3e-3,
            epsilon: EpsilonSchedule::default(),
            noise: OuConfig::default(),
            eval_every: 10,
            eval_rollouts: 5,
            updates_per_step: 1,
            procedure_retries: 10,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return bad("batch_size must be in 1..=buffer_capacity");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be > 0");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        if self.steps_per_episode == 0 || self.eval_every == 0 || self.eval_rollouts == 0 {
            return bad("steps_per_episode, eval_every and eval_rollouts must be >= 1");
        }
        if self.actor_hidden.contains(&0) || self.critic_hidden.contains(&0) {
            return bad("hidden layer widths must be >= 1");
        }
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.floor) || e.floor > e.start {
            return bad("epsilon must satisfy 0 <= floor <= start <= 1");
        }
        if !(0.0..=1.0).contains(&e.decay_fraction) {
            return bad("epsilon decay_fraction must lie in [0, 1]");
        }
        Ok(())
    }
}

/// One row of the training curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub episode: usize,
    pub train_return: f64,
    /// Mean noise-free return, on evaluation episodes only.
    pub eval_return: Option<f64>,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub epsilon: f64,
}

/// Handed to the snapshot sink during training.
pub enum Snapshot<'a> {
    /// After every evaluation.
    Evaluation { episode: usize, eval_return: f64, agent: &'a Agent, is_best: bool },
    /// Training diverged; `agent` is the last evaluated (good) state.
    Failure { episode: usize, agent: &'a Agent },
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub best: Policy,
    pub best_agent: Agent,
    /// `None` when no evaluation ran.
    pub best_eval_return: Option<f64>,
    pub best_episode: Option<usize>,
    pub final_agent: Agent,
    pub curve: Vec<CurveRow>,
}

/// Noise-free returns of episodes started from fixed seeds. A start whose
/// initial procedure fails is resampled from a seed derived from the original,
/// at most `retries` times.
pub fn evaluate<E: Environment + ?Sized>(policy: &Policy, env: &mut E, steps: usize, seeds: &[u64], retries: usize) -> Result<Vec<f64>> {
    seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut obs = match env.reset(seed) {
                Err(Error::Procedure { .. }) if retries > 0 => reset_with_retries(env, &mut rng, retries - 1)?,
                other => other?,
            };
            let mut total = 0.0;
            for _ in 0..steps {
                let action = policy.act(&obs);
                let (next, reward) = env.step(&action)?;
                total += reward;
                obs = next;
            }
            Ok(total)
        })
        .collect()
}

/// Evaluation seeds: fixed for a given training seed so evaluations are comparable.
pub fn evaluation_seeds(seed: u64, rollouts: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe7a1_5eed);
    (0..rollouts).map(|_| rng.random()).collect()
}

fn reset_with_retries<E: Environment + ?Sized>(env: &mut E, rng: &mut ChaCha8Rng, retries: usize) -> Result<Vec<f64>> {
    let mut attempt = 0;
    loop {
        match env.reset(rng.random()) {
            Err(e @ Error::Procedure { .. }) if attempt < retries => {
                log::debug!("{e}; resampling the episode start");
                attempt += 1;
            }
            other => return other,
        }
    }
}

/// DDPG with per-step updates, linearly decaying exploration and periodic
/// noise-free evaluation. Returns the policy with the highest evaluation return.
pub fn run_training<E: Environment + ?Sized>(
    env: &mut E,
    config: &TrainConfig,
    sink: &mut dyn FnMut(Snapshot<'_>) -> Result<()>,
) -> Result<TrainingOutcome> {
    config.validate()?;
    let scale = env.observation_scale();
    if scale.len() != env.observation_dim() {
        return Err(Error::Config("observation scale length differs from observation_dim".into()));
    }
    let bound = env.action_bound();
    let mut agent = Agent::new(scale, env.action_dim(), bound, config, &mut init_rng(config.seed));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut noise = OuNoise::new(env.action_dim(), config.noise.mu, config.noise.sigma, config.noise.theta, config.noise.dt);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let eval_seeds = evaluation_seeds(config.seed, config.eval_rollouts);

    let mut curve = Vec::with_capacity(config.episodes);
    let mut best: Option<(f64, usize, Agent)> = None;
    let mut last_good = agent.clone();

    for episode in 0..config.episodes {
        let wrap = |e: Error| match e {
            e @ Error::Episode { .. } => e,
            e => Error::Episode { episode, source: Box::new(e) },
        };
        let epsilon = config.epsilon.value(episode, config.episodes);
        noise.reset();
        let mut obs = reset_with_retries(env, &mut rng, config.procedure_retries).map_err(wrap)?;
        let (mut train_return, mut actor_loss, mut critic_loss, mut updates) = (0.0, 0.0, 0.0, 0usize);
        for _ in 0..config.steps_per_episode {
            let greedy = agent.policy.act(&obs);
            let perturbation: Vec<f64> = noise.sample(&mut rng).into_iter().map(|n| n * bound).collect();
            let action = select_action(&greedy, &perturbation, epsilon, bound);
            let (next, reward) = env.step(&action).map_err(wrap)?;
            if !reward.is_finite() {
                return Err(wrap(Error::NonFinite { episode, what: "reward".into() }));
            }
            train_return += reward;
            buffer.push(Transition { state: obs, action, next_state: next.clone(), reward, terminal: false });
            obs = next;
            for _ in 0..config.updates_per_step {
                match agent.train_from(&buffer, config.batch_size, &mut rng) {
                    Ok(Some(l)) => {
                        actor_loss += l.actor;
                        critic_loss += l.critic;
                        updates += 1;
                    }
                    Ok(None) => {}
                    Err(Error::Numeric(what)) => {
                        sink(Snapshot::Failure { episode, agent: &last_good })?;
                        return Err(Error::NonFinite { episode, what });
                    }
                    Err(e) => return Err(wrap(e)),
                }
            }
        }
        let per_update = |x: f64| if updates > 0 { x / updates as f64 } else { 0.0 };

        let eval_return = if (episode + 1) % config.eval_every == 0 {
            let returns = evaluate(&agent.policy, env, config.steps_per_episode, &eval_seeds, config.procedure_retries).map_err(wrap)?;
            let mean = returns.iter().sum::<f64>() / returns.len() as f64;
            let is_best = best.as_ref().is_none_or(|(b, _, _)| mean > *b);
            if is_best {
                best = Some((mean, episode, agent.clone()));
            }
            last_good = agent.clone();
            sink(Snapshot::Evaluation { episode, eval_return: mean, agent: &agent, is_best })?;
            Some(mean)
        } else {
            None
        };
        log::debug!("episode {episode}: return {train_return:.4} eval {eval_return:?} eps {epsilon:.3}");
        curve.push(CurveRow {
            episode,
            train_return,
            eval_return,
            actor_loss: per_update(actor_loss),
            critic_loss: per_update(critic_loss),
            epsilon,
        });
    }

    let (best_eval_return, best_episode, best_agent) = match best {
        Some((r, e, a)) => (Some(r), Some(e), a),
        None => (None, None, agent.clone()),
    };
    Ok(TrainingOutcome {
        best: best_agent.policy.clone(),
        best_agent,
        best_eval_return,
        best_episode,
        final_agent: agent,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_reaches_floor_at_horizon() {
        let s = EpsilonSchedule::default();
        assert_eq!(s.value(0, 200), 1.0);
        assert_eq!(s.horizon(200), 160);
        assert_eq!(s.value(160, 200), 0.05);
        assert!(s.value(159, 200) > 0.05);
        assert_eq!(s.value(199, 200), 0.05);
        let mut prev = f64::INFINITY;
        for e in 0..200 {
            let v = s.value(e, 200);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn validation_rejects_bad_values() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { gamma: 1.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 10, buffer_capacity: 5, ..TrainConfig::default() }.validate().is_err());
    }
}
