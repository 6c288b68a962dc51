use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

/// Per-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Identity,
    Relu,
    /// `scale * tanh(z)`: bounded odd squashing for actor outputs.
    Tanh { scale: f64 },
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh { scale } => scale * z.tanh(),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh { scale } => {
                let t = z.tanh();
                scale * (1.0 - t * t)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out x in`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

static NEXT_NET_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_NET_ID.fetch_add(1, Ordering::Relaxed)
}

/// Fully connected feed-forward network in double precision.
#[derive(Debug)]
pub struct DenseNet {
    layers: Vec<Layer>,
    // identity and parameter version, used only to reject stale tapes
    id: u64,
    version: u64,
}

impl Clone for DenseNet {
    fn clone(&self) -> Self {
        Self { layers: self.layers.clone(), id: fresh_id(), version: 0 }
    }
}

impl PartialEq for DenseNet {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Cached inputs and pre-activations of one forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    net_id: u64,
    version: u64,
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

/// Parameter gradients, one `(weights, bias)` pair per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|(w, b)| w.iter().chain(b.iter()).all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, factor: f64) {
        for (w, b) in &mut self.layers {
            *w *= factor;
            *b *= factor;
        }
    }

    /// Flattened view in layer order, weights (row-major) then bias.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|(w, b)| w.iter().chain(b.iter()).copied()).collect()
    }
}

impl DenseNet {
    /// Builds a net from `sizes = [input, hidden.., output]` with one
    /// activation per layer. Weights are uniform in `±1/sqrt(fan_in)`; the last
    /// layer uses `±final_scale`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], activations: &[Activation], final_scale: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "a network needs at least an input and an output size");
        assert_eq!(activations.len(), sizes.len() - 1, "one activation per layer");
        let n = activations.len();
        let layers = sizes
            .windows(2)
            .zip(activations)
            .enumerate()
            .map(|(i, (w, &activation))| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = if i + 1 == n { final_scale } else { 1.0 / (fan_in as f64).sqrt() };
                let weights = Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-bound..=bound));
                let bias = Array1::from_shape_fn(fan_out, |_| rng.random_range(-bound..=bound));
                Layer { weights, bias, activation }
            })
            .collect();
        Self { layers, id: fresh_id(), version: 0 }
    }

    /// Hidden layers use ReLU, the output `output`.
    pub fn mlp<R: Rng + ?Sized>(sizes: &[usize], output: Activation, final_scale: f64, rng: &mut R) -> Self {
        let mut acts = vec![Activation::Relu; sizes.len() - 2];
        acts.push(output);
        Self::new(sizes, &acts, final_scale, rng)
    }

    pub fn from_layers(layers: Vec<Layer>) -> Self {
        for w in layers.windows(2) {
            assert_eq!(w[0].outputs(), w[1].inputs(), "incompatible consecutive layers");
        }
        for l in &layers {
            assert_eq!(l.bias.len(), l.outputs(), "bias length must match layer outputs");
        }
        Self { layers, id: fresh_id(), version: 0 }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable parameter access. Invalidates outstanding tapes.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        self.version += 1;
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Layer::outputs));
        s
    }

    pub fn same_architecture(&self, other: &DenseNet) -> bool {
        self.sizes() == other.sizes()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| a.activation == b.activation)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Batched forward pass over the rows of `input`.
    ///
    /// # Panics
    /// On an input width different from the first layer's.
    pub fn forward_batch(&self, input: ArrayView2<f64>) -> (Array2<f64>, Tape) {
        assert_eq!(input.ncols(), self.input_dim(), "input width does not match the network");
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = input.to_owned();
        for layer in &self.layers {
            let z = x.dot(&layer.weights.t()) + &layer.bias;
            let y = z.mapv(|v| layer.activation.apply(v));
            inputs.push(x);
            pre.push(z);
            x = y;
        }
        (x, Tape { net_id: self.id, version: self.version, inputs, pre_activations: pre })
    }

    /// Batched forward pass without recording a tape.
    pub fn predict_batch(&self, input: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(input.ncols(), self.input_dim(), "input width does not match the network");
        let mut x = input.to_owned();
        for layer in &self.layers {
            let mut z = x.dot(&layer.weights.t()) + &layer.bias;
            z.mapv_inplace(|v| layer.activation.apply(v));
            x = z;
        }
        x
    }

    pub fn forward(&self, input: &[f64]) -> (Vec<f64>, Tape) {
        let row = ArrayView2::from_shape((1, input.len()), input).expect("contiguous slice");
        let (out, tape) = self.forward_batch(row);
        (out.into_raw_vec_and_offset().0, tape)
    }

    pub fn predict(&self, input: &[f64]) -> Vec<f64> {
        let row = ArrayView2::from_shape((1, input.len()), input).expect("contiguous slice");
        self.predict_batch(row).into_raw_vec_and_offset().0
    }

    /// Reverse pass. `output_gradient` is dL/d(output) per batch row; parameter
    /// gradients are summed over the batch.
    ///
    /// # Panics
    /// If `tape` was produced by another network or before a parameter update.
    pub fn backward(&self, tape: &Tape, output_gradient: ArrayView2<f64>) -> (Gradients, Array2<f64>) {
        assert!(
            tape.net_id == self.id && tape.version == self.version,
            "stale tape: it was not produced by the current parameters of this network"
        );
        let mut delta = output_gradient.to_owned();
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let z = &tape.pre_activations[i];
            assert_eq!(delta.dim(), z.dim(), "output gradient shape does not match the forward pass");
            ndarray::Zip::from(&mut delta).and(z).for_each(|d, &z| *d *= layer.activation.derivative(z));
            let grad_w = delta.t().dot(&tape.inputs[i]);
            let grad_b = delta.sum_axis(Axis(0));
            let next = delta.dot(&layer.weights);
            layers.push((grad_w, grad_b));
            delta = next;
        }
        layers.reverse();
        (Gradients { layers }, delta)
    }

    /// `self = tau * source + (1 - tau) * self`, elementwise.
    ///
    /// # Panics
    /// On architecture mismatch or `tau` outside `[0, 1]`.
    pub fn soft_update(&mut self, source: &DenseNet, tau: f64) {
        assert!(self.same_architecture(source), "soft update between different architectures");
        assert!((0.0..=1.0).contains(&tau), "tau must lie in [0, 1], got {tau}");
        for (t, s) in self.layers_mut().iter_mut().zip(&source.layers) {
            ndarray::Zip::from(&mut t.weights).and(&s.weights).for_each(|t, &s| *t = tau * s + (1.0 - tau) * *t);
            ndarray::Zip::from(&mut t.bias).and(&s.bias).for_each(|t, &s| *t = tau * s + (1.0 - tau) * *t);
        }
    }

    /// Parameters in layer order, weights (row-major) then bias.
    pub fn flat_parameters(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied()).collect()
    }

    pub fn set_flat_parameter(&mut self, mut index: usize, value: f64) {
        for l in self.layers_mut() {
            if index < l.weights.len() {
                let cols = l.weights.ncols();
                l.weights[[index / cols, index % cols]] = value;
                return;
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                l.bias[index] = value;
                return;
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Layer-0 pre-activation pattern signs, used to detect ReLU kinks.
    pub fn relu_pattern(&self, input: &[f64]) -> Vec<bool> {
        let (_, tape) = self.forward(input);
        tape.pre_activations
            .iter()
            .zip(&self.layers)
            .filter(|(_, l)| l.activation == Activation::Relu)
            .flat_map(|(z, _)| z.iter().map(|&v| v > 0.0).collect::<Vec<_>>())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_bias() {
        let layer = Layer { weights: Array2::zeros((2, 3)), bias: array![0.5, -1.5], activation: Activation::Identity };
        let net = DenseNet::from_layers(vec![layer]);
        assert_eq!(net.predict(&[3.0, -2.0, 9.0]), vec![0.5, -1.5]);
    }

    #[test]
    fn identity_layer_passes_input() {
        let layer = Layer { weights: Array2::eye(3), bias: Array1::zeros(3), activation: Activation::Identity };
        let net = DenseNet::from_layers(vec![layer]);
        assert_eq!(net.predict(&[0.1, -0.2, 0.3]), vec![0.1, -0.2, 0.3]);
    }

    #[test]
    fn scalar_chain_rule() {
        let layer = Layer { weights: array![[3.0]], bias: array![0.0], activation: Activation::Identity };
        let net = DenseNet::from_layers(vec![layer]);
        let (_, tape) = net.forward(&[2.0]);
        let (g, gx) = net.backward(&tape, array![[1.0]].view());
        assert_eq!(g.layers[0].0[[0, 0]], 2.0);
        assert_eq!(gx[[0, 0]], 3.0);
    }

    #[test]
    fn relu_blocks_negative_units() {
        let layer = Layer { weights: array![[1.0], [-1.0]], bias: array![0.0, 0.0], activation: Activation::Relu };
        let net = DenseNet::from_layers(vec![layer]);
        let (_, tape) = net.forward(&[2.0]);
        let (g, _) = net.backward(&tape, array![[1.0, 1.0]].view());
        assert_eq!(g.layers[0].0[[1, 0]], 0.0);
        assert_eq!(g.layers[0].1[1], 0.0);
        assert_eq!(g.layers[0].0[[0, 0]], 2.0);
    }

    #[test]
    #[should_panic(expected = "stale tape")]
    fn stale_tape_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = DenseNet::mlp(&[2, 3, 1], Activation::Identity, 0.1, &mut rng);
        let (_, tape) = net.forward(&[1.0, 2.0]);
        net.set_flat_parameter(0, 0.0);
        net.backward(&tape, array![[1.0]].view());
    }

    #[test]
    #[should_panic(expected = "stale tape")]
    fn foreign_tape_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = DenseNet::mlp(&[2, 3, 1], Activation::Identity, 0.1, &mut rng);
        let copy = net.clone();
        let (_, tape) = net.forward(&[1.0, 2.0]);
        copy.backward(&tape, array![[1.0]].view());
    }

    #[test]
    fn init_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = DenseNet::mlp(&[16, 40, 30, 2], Activation::Tanh { scale: 1.0 }, 3e-3, &mut rng);
        assert!(net.layers()[0].weights.iter().all(|w| w.abs() <= 0.25));
        assert!(net.layers()[2].weights.iter().all(|w| w.abs() <= 3e-3));
        assert_eq!(net.sizes(), vec![16, 40, 30, 2]);
    }

    #[test]
    fn soft_update_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let src = DenseNet::mlp(&[3, 4, 2], Activation::Identity, 0.5, &mut rng);
        let mut tgt = DenseNet::mlp(&[3, 4, 2], Activation::Identity, 0.5, &mut rng);
        tgt.soft_update(&src, 1.0);
        assert_eq!(tgt, src);

        let zero = |v: f64| {
            DenseNet::from_layers(vec![Layer { weights: array![[v]], bias: array![v], activation: Activation::Identity }])
        };
        let mut t = zero(0.0);
        t.soft_update(&zero(1.0), 0.001);
        assert_eq!(t.flat_parameters(), vec![0.001, 0.001]);
    }
}
