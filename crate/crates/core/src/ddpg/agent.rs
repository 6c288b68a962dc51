use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ReplayBuffer, TrainConfig, Transition};
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamConfig, Checkpoint, DenseNet, Optimizer};

/// `clamp(greedy + epsilon * noise)` componentwise into `[-bound, bound]`.
/// `noise` is in action units.
pub fn select_action(greedy: &[f64], noise: &[f64], epsilon: f64, bound: f64) -> Vec<f64> {
    assert_eq!(greedy.len(), noise.len(), "noise dimension must match the action");
    greedy.iter().zip(noise).map(|(&a, &n)| (a + epsilon * n).clamp(-bound, bound)).collect()
}

/// A deterministic policy: an actor with fixed input scaling and action bound.
///
/// Observations are divided by `observation_scale` before entering the
/// network; the `[-1, 1]` network output is multiplied by `action_bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub actor: DenseNet,
    pub observation_scale: Vec<f64>,
    pub action_bound: f64,
}

impl Policy {
    pub fn observation_dim(&self) -> usize {
        self.observation_scale.len()
    }

    pub fn normalize(&self, observation: &[f64]) -> Vec<f64> {
        assert_eq!(observation.len(), self.observation_scale.len(), "observation length mismatch");
        observation.iter().zip(&self.observation_scale).map(|(o, s)| o / s).collect()
    }

    pub fn act(&self, observation: &[f64]) -> Vec<f64> {
        self.actor.predict(&self.normalize(observation)).into_iter().map(|a| a * self.action_bound).collect()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::default();
        ck.meta.insert("action_bound".into(), format!("{:?}", self.action_bound));
        ck.meta.insert(
            "observation_scale".into(),
            self.observation_scale.iter().map(|s| format!("{s:?}")).collect::<Vec<_>>().join(","),
        );
        ck.nets.push(("actor".into(), self.actor.clone()));
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let actor = ck.net("actor").ok_or_else(|| Error::Checkpoint("no actor network".into()))?.clone();
        let bound = ck
            .meta
            .get("action_bound")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Checkpoint("missing action_bound".into()))?;
        let scale = ck
            .meta
            .get("observation_scale")
            .ok_or_else(|| Error::Checkpoint("missing observation_scale".into()))?
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|_| Error::Checkpoint(format!("bad observation scale `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        if scale.len() != actor.input_dim() {
            return Err(Error::Checkpoint("observation scale does not match the actor input".into()));
        }
        Ok(Self { actor, observation_scale: scale, action_bound: bound })
    }
}

/// Losses of one gradient step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Losses {
    pub actor: f64,
    pub critic: f64,
}

/// Actor, critic, their targets and optimizers.
#[derive(Debug, Clone)]
pub struct Agent {
    pub policy: Policy,
    pub critic: DenseNet,
    pub target_actor: DenseNet,
    pub target_critic: DenseNet,
    pub actor_optimizer: Optimizer,
    pub critic_optimizer: Optimizer,
    pub gamma: f64,
    pub tau: f64,
}

impl Agent {
    pub fn new(observation_scale: Vec<f64>, action_dim: usize, action_bound: f64, config: &TrainConfig, rng: &mut ChaCha8Rng) -> Self {
        let obs = observation_scale.len();
        let mut actor_sizes = vec![obs];
        actor_sizes.extend(&config.actor_hidden);
        actor_sizes.push(action_dim);
        let mut critic_sizes = vec![obs + action_dim];
        critic_sizes.extend(&config.critic_hidden);
        critic_sizes.push(1);
        let actor = DenseNet::mlp(&actor_sizes, Activation::Tanh { scale: 1.0 }, config.final_layer_scale, rng);
        let critic = DenseNet::mlp(&critic_sizes, Activation::Identity, config.final_layer_scale, rng);
        Self {
            actor_optimizer: Optimizer::adam(AdamConfig::new(config.actor_lr), &actor),
            critic_optimizer: Optimizer::adam(AdamConfig::new(config.critic_lr), &critic),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            policy: Policy { actor, observation_scale, action_bound },
            critic,
            gamma: config.gamma,
            tau: config.tau,
        }
    }

    pub fn action_dim(&self) -> usize {
        self.policy.actor.output_dim()
    }

    /// Critic estimate for raw observation and action.
    pub fn q_value(&self, observation: &[f64], action: &[f64]) -> f64 {
        let mut input = self.policy.normalize(observation);
        input.extend(action.iter().map(|a| a / self.policy.action_bound));
        self.critic.predict(&input)[0]
    }

    fn batch_matrices(&self, batch: &[&Transition]) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let obs = self.policy.observation_dim();
        let act = self.action_dim();
        let bound = self.policy.action_bound;
        let mut sa = Array2::zeros((batch.len(), obs + act));
        let mut next = Array2::zeros((batch.len(), obs));
        let mut rest = Array2::zeros((batch.len(), 2));
        for (i, t) in batch.iter().enumerate() {
            for (j, (&o, &s)) in t.state.iter().zip(&self.policy.observation_scale).enumerate() {
                sa[[i, j]] = o / s;
            }
            for (j, &a) in t.action.iter().enumerate() {
                sa[[i, obs + j]] = a / bound;
            }
            for (j, (&o, &s)) in t.next_state.iter().zip(&self.policy.observation_scale).enumerate() {
                next[[i, j]] = o / s;
            }
            rest[[i, 0]] = t.reward;
            rest[[i, 1]] = if t.terminal { 0.0 } else { 1.0 };
        }
        (sa, next, rest)
    }

    /// Critic targets `r + gamma (1 - terminal) Q'(s', mu'(s'))` from the target networks.
    pub fn critic_targets(&self, batch: &[&Transition]) -> Vec<f64> {
        let (_, next, rest) = self.batch_matrices(batch);
        self.targets_from(&next, &rest).into_raw_vec_and_offset().0
    }

    fn targets_from(&self, next: &Array2<f64>, rest: &Array2<f64>) -> Array2<f64> {
        let next_action = self.target_actor.predict_batch(next.view());
        let next_input = ndarray::concatenate(Axis(1), &[next.view(), next_action.view()]).expect("same rows");
        let next_q = self.target_critic.predict_batch(next_input.view());
        let mut y = next_q;
        for (i, mut row) in y.rows_mut().into_iter().enumerate() {
            row[0] = rest[[i, 0]] + self.gamma * rest[[i, 1]] * row[0];
        }
        y
    }

    /// One critic regression step, one actor ascent step, then target tracking.
    pub fn train_step(&mut self, batch: &[&Transition]) -> Result<Losses> {
        let n = batch.len() as f64;
        let obs = self.policy.observation_dim();
        let (sa, next, rest) = self.batch_matrices(batch);
        let y = self.targets_from(&next, &rest);

        let (q, tape) = self.critic.forward_batch(sa.view());
        let diff = &q - &y;
        let critic_loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        let (grads, _) = self.critic.backward(&tape, (&diff * (2.0 / n)).view());
        self.critic_optimizer.apply(&mut self.critic, &grads)?;

        let states = sa.slice(s![.., ..obs]);
        let (actions, actor_tape) = self.policy.actor.forward_batch(states);
        let input = ndarray::concatenate(Axis(1), &[states, actions.view()]).expect("same rows");
        let (q_pi, critic_tape) = self.critic.forward_batch(input.view());
        let actor_loss = -q_pi.sum() / n;
        let upstream = Array2::from_elem(q_pi.raw_dim(), -1.0 / n);
        let (_, input_grad) = self.critic.backward(&critic_tape, upstream.view());
        let action_grad = input_grad.slice(s![.., obs..]).to_owned();
        let (actor_grads, _) = self.policy.actor.backward(&actor_tape, action_grad.view());
        self.actor_optimizer.apply(&mut self.policy.actor, &actor_grads)?;

        if !(critic_loss.is_finite() && actor_loss.is_finite()) {
            return Err(Error::Numeric(format!("non-finite loss (actor {actor_loss}, critic {critic_loss})")));
        }
        self.target_critic.soft_update(&self.critic, self.tau);
        self.target_actor.soft_update(&self.policy.actor, self.tau);
        Ok(Losses { actor: actor_loss, critic: critic_loss })
    }

    /// Samples a batch and trains when the buffer holds at least `batch_size` items.
    pub fn train_from<R: Rng + ?Sized>(&mut self, buffer: &ReplayBuffer, batch_size: usize, rng: &mut R) -> Result<Option<Losses>> {
        if buffer.len() < batch_size {
            return Ok(None);
        }
        let batch = buffer.sample(batch_size, rng);
        self.train_step(&batch).map(Some)
    }

    pub fn to_checkpoint(&self, rng: Option<&ChaCha8Rng>) -> Checkpoint {
        let mut ck = self.policy.to_checkpoint();
        ck.meta.insert("gamma".into(), format!("{:?}", self.gamma));
        ck.meta.insert("tau".into(), format!("{:?}", self.tau));
        ck.nets.push(("critic".into(), self.critic.clone()));
        ck.nets.push(("target_actor".into(), self.target_actor.clone()));
        ck.nets.push(("target_critic".into(), self.target_critic.clone()));
        ck.optimizers.push(("actor".into(), self.actor_optimizer.clone()));
        ck.optimizers.push(("critic".into(), self.critic_optimizer.clone()));
        ck.rng = rng.cloned();
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let policy = Policy::from_checkpoint(ck)?;
        let net = |name: &str| ck.net(name).cloned().ok_or_else(|| Error::Checkpoint(format!("no `{name}` network")));
        let opt = |name: &str| {
            ck.optimizer(name).cloned().ok_or_else(|| Error::Checkpoint(format!("no `{name}` optimizer")))
        };
        let meta = |name: &str| -> Result<f64> {
            ck.meta
                .get(name)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Checkpoint(format!("missing `{name}`")))
        };
        Ok(Self {
            critic: net("critic")?,
            target_actor: net("target_actor")?,
            target_critic: net("target_critic")?,
            actor_optimizer: opt("actor")?,
            critic_optimizer: opt("critic")?,
            gamma: meta("gamma")?,
            tau: meta("tau")?,
            policy,
        })
    }
}

/// Generator for a fresh agent from a seed; kept separate so initialization
/// draws never interleave with rollout draws.
pub fn init_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_a9e7)
}
