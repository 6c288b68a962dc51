use ndarray::{Array1, Array2, Zip};

use super::{DenseNet, Gradients};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64) -> Self {
        Self { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Optimizer together with its per-parameter accumulators.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Sgd { learning_rate: f64 },
    Adam {
        config: AdamConfig,
        step: u64,
        first: Vec<(Array2<f64>, Array1<f64>)>,
        second: Vec<(Array2<f64>, Array1<f64>)>,
    },
}

impl Optimizer {
    pub fn sgd(learning_rate: f64) -> Self {
        assert!(learning_rate > 0.0, "learning rate must be > 0");
        Optimizer::Sgd { learning_rate }
    }

    /// Adam with zeroed moments shaped like `net`.
    pub fn adam(config: AdamConfig, net: &DenseNet) -> Self {
        assert!(config.learning_rate > 0.0, "learning rate must be > 0");
        let zeros: Vec<_> = net
            .layers()
            .iter()
            .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.bias.len())))
            .collect();
        Optimizer::Adam { config, step: 0, first: zeros.clone(), second: zeros }
    }

    pub fn learning_rate(&self) -> f64 {
        match self {
            Optimizer::Sgd { learning_rate } => *learning_rate,
            Optimizer::Adam { config, .. } => config.learning_rate,
        }
    }

    /// Descends along `grads`. A non-finite gradient leaves `net` untouched and
    /// returns a numeric error.
    pub fn apply(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        assert_eq!(grads.layers.len(), net.layers().len(), "gradient shape does not match the network");
        match self {
            Optimizer::Sgd { learning_rate } => {
                let lr = *learning_rate;
                for (layer, (gw, gb)) in net.layers_mut().iter_mut().zip(&grads.layers) {
                    layer.weights.scaled_add(-lr, gw);
                    layer.bias.scaled_add(-lr, gb);
                }
            }
            Optimizer::Adam { config, step, first, second } => {
                *step += 1;
                let c = *config;
                let t = *step as i32;
                let (bias1, bias2) = (1.0 - c.beta1.powi(t), 1.0 - c.beta2.powi(t));
                let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                    *p -= c.learning_rate * (*m / bias1) / ((*v / bias2).sqrt() + c.epsilon);
                };
                for (((layer, (gw, gb)), (mw, mb)), (vw, vb)) in
                    net.layers_mut().iter_mut().zip(&grads.layers).zip(first.iter_mut()).zip(second.iter_mut())
                {
                    Zip::from(&mut layer.weights).and(gw).and(mw).and(vw).for_each(|p, &g, m, v| update(p, g, m, v));
                    Zip::from(&mut layer.bias).and(gb).and(mb).and(vb).for_each(|p, &g, m, v| update(p, g, m, v));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Layer};
    use ndarray::array;

    fn scalar(w: f64) -> DenseNet {
        DenseNet::from_layers(vec![Layer { weights: array![[w]], bias: array![0.0], activation: Activation::Identity }])
    }

    fn grad(gw: f64, gb: f64) -> Gradients {
        Gradients { layers: vec![(array![[gw]], array![gb])] }
    }

    #[test]
    fn sgd_step() {
        let mut net = scalar(0.5);
        Optimizer::sgd(0.1).apply(&mut net, &grad(1.0, 0.0)).unwrap();
        assert!((net.layers()[0].weights[[0, 0]] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut net = scalar(0.5);
        let before = net.clone();
        Optimizer::sgd(0.1).apply(&mut net, &grad(0.0, 0.0)).unwrap();
        let mut adam = Optimizer::adam(AdamConfig::new(1e-3), &net);
        adam.apply(&mut net, &grad(0.0, 0.0)).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn adam_matches_hand_computation() {
        let cfg = AdamConfig::new(0.01);
        let mut net = scalar(1.0);
        let mut opt = Optimizer::adam(cfg, &net);
        let mut p = 1.0f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        for (t, g) in [0.3, -0.2, 0.5].into_iter().enumerate() {
            opt.apply(&mut net, &grad(g, 0.0)).unwrap();
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let m_hat = m / (1.0 - 0.9f64.powi(t as i32 + 1));
            let v_hat = v / (1.0 - 0.999f64.powi(t as i32 + 1));
            p -= 0.01 * m_hat / (v_hat.sqrt() + 1e-8);
            assert!((net.layers()[0].weights[[0, 0]] - p).abs() < 1e-9);
        }
    }

    #[test]
    fn nan_gradient_is_reported() {
        let mut net = scalar(0.5);
        let before = net.clone();
        let err = Optimizer::sgd(0.1).apply(&mut net, &grad(f64::NAN, 0.0)).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert_eq!(net, before);
    }
}
