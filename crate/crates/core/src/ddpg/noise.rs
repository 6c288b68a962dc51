use rand::Rng;
use rand_distr::StandardNormal;

/// Ornstein-Uhlenbeck process, one independent coordinate per action dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct OuNoise {
    pub mu: f64,
    pub sigma: f64,
    pub theta: f64,
    pub dt: f64,
    state: Vec<f64>,
}

impl OuNoise {
    pub fn new(dim: usize, mu: f64, sigma: f64, theta: f64, dt: f64) -> Self {
        Self { mu, sigma, theta, dt, state: vec![mu; dim] }
    }

    pub fn with_state(mut self, state: Vec<f64>) -> Self {
        assert_eq!(state.len(), self.state.len(), "noise state dimension mismatch");
        self.state = state;
        self
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = self.mu);
    }

    /// `x += theta (mu - x) dt + sigma sqrt(dt) xi` and returns the new `x`.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let diffusion = self.sigma * self.dt.sqrt();
        for x in &mut self.state {
            let xi: f64 = rng.sample(StandardNormal);
            *x += self.theta * (self.mu - *x) * self.dt + diffusion * xi;
        }
        self.state.clone()
    }

    /// Closed-form stationary variance `sigma^2 / (2 theta)` of the continuous process.
    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.theta)
    }
}
