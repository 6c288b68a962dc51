use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stirguard::nn::{check_gradients, Activation, AdamConfig, Checkpoint, DenseNet, Gradients, Layer, Optimizer};

/// Plain nested loops, no ndarray products.
fn naive_forward(net: &DenseNet, input: &[f64]) -> Vec<f64> {
    let mut x = input.to_vec();
    for layer in net.layers() {
        let mut y = vec![0.0; layer.outputs()];
        for (o, y) in y.iter_mut().enumerate() {
            let mut z = layer.bias[o];
            for (i, xi) in x.iter().enumerate() {
                z += layer.weights[[o, i]] * xi;
            }
            *y = match layer.activation {
                Activation::Identity => z,
                Activation::Relu => z.max(0.0),
                Activation::Tanh { scale } => scale * z.tanh(),
            };
        }
        x = y;
    }
    x
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, span: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-span..span)).collect()
}

#[test]
fn forward_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let net = DenseNet::new(&[3, 4, 2], &[Activation::Relu, Activation::Tanh { scale: 1.5 }], 1.0, &mut rng);
        let x = random_vec(&mut rng, 3, 2.0);
        let got = net.predict(&x);
        for (a, b) in got.iter().zip(naive_forward(&net, &x)) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn linear_unit_gradient_is_its_input() {
    let layer = Layer { weights: Array2::from_elem((1, 1), 0.7), bias: ndarray::arr1(&[0.0]), activation: Activation::Identity };
    let net = DenseNet::from_layers(vec![layer]);
    let (_, tape) = net.forward(&[2.0]);
    let (grads, input_grad) = net.backward(&tape, Array2::from_elem((1, 1), 1.0).view());
    assert_eq!(grads.layers[0].0[[0, 0]], 2.0);
    assert_eq!(grads.layers[0].1[0], 1.0);
    assert_eq!(input_grad[[0, 0]], 0.7);
}

#[test]
fn gradients_match_central_differences_on_random_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let shapes: [(&[usize], Activation); 4] = [
        (&[3, 4, 2], Activation::Tanh { scale: 1.0 }),
        (&[5, 8, 6, 3], Activation::Identity),
        // actor and critic at reduced width
        (&[4, 40, 30, 2], Activation::Tanh { scale: 1.0 }),
        (&[6, 40, 30, 1], Activation::Identity),
    ];
    let mut skipped = 0;
    for probe in 0..100 {
        let (sizes, output) = shapes[probe % shapes.len()];
        let net = DenseNet::mlp(sizes, output, 1.0, &mut rng);
        let x = random_vec(&mut rng, sizes[0], 1.5);
        let w = random_vec(&mut rng, *sizes.last().unwrap(), 1.0);
        let report = check_gradients(&net, &x, &w, 1e-5, 1e-6);
        assert!(report.passes(1e-4), "probe {probe} {sizes:?}: {report:?}");
        skipped += report.skipped;
    }
    // kinks are rare at h = 1e-5
    assert!(skipped < 20, "{skipped} components skipped");
}

#[test]
fn rectifier_blocks_gradient_at_negative_preactivation() {
    let layer = Layer { weights: Array2::from_elem((1, 1), 1.0), bias: ndarray::arr1(&[0.0]), activation: Activation::Relu };
    let net = DenseNet::from_layers(vec![layer]);
    let (_, tape) = net.forward(&[-0.5]);
    let (grads, input_grad) = net.backward(&tape, Array2::from_elem((1, 1), 1.0).view());
    assert_eq!(grads.flatten(), vec![0.0, 0.0]);
    assert_eq!(input_grad[[0, 0]], 0.0);
}

#[test]
fn optimizer_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut net = DenseNet::mlp(&[2, 3, 1], Activation::Identity, 1.0, &mut rng);
    let before = net.clone();
    let zero = Gradients { layers: net.layers().iter().map(|l| (Array2::zeros(l.weights.raw_dim()), ndarray::Array1::zeros(l.bias.len()))).collect() };
    Optimizer::sgd(0.1).apply(&mut net, &zero).unwrap();
    assert_eq!(net, before);

    // scalar Adam: m = 0.1 g, v = 0.001 g^2, bias-corrected step is lr * sign(g)
    let layer = Layer { weights: Array2::from_elem((1, 1), 0.5), bias: ndarray::arr1(&[0.0]), activation: Activation::Identity };
    let mut scalar = DenseNet::from_layers(vec![layer]);
    let mut adam = Optimizer::adam(AdamConfig::new(0.01), &scalar);
    let g = Gradients { layers: vec![(Array2::from_elem((1, 1), 4.0), ndarray::arr1(&[0.0]))] };
    adam.apply(&mut scalar, &g).unwrap();
    let expected = 0.5 - 0.01 * 4.0 / (4.0 + 1e-8);
    assert!((scalar.layers()[0].weights[[0, 0]] - expected).abs() < 1e-15);
}

proptest! {
    #[test]
    fn soft_update_matches_elementwise_oracle(seed in 0u64..500, tau in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let source = DenseNet::mlp(&[3, 5, 2], Activation::Identity, 1.0, &mut rng);
        let mut target = DenseNet::mlp(&[3, 5, 2], Activation::Identity, 1.0, &mut rng);
        let (s, t) = (source.flat_parameters(), target.flat_parameters());
        target.soft_update(&source, tau);
        for ((got, s), t) in target.flat_parameters().iter().zip(&s).zip(&t) {
            prop_assert!((got - (tau * s + (1.0 - tau) * t)).abs() <= 1e-15);
        }
    }
}

#[test]
fn soft_update_examples() {
    let scalar = |v: f64| {
        DenseNet::from_layers(vec![Layer { weights: Array2::from_elem((1, 1), v), bias: ndarray::arr1(&[v]), activation: Activation::Identity }])
    };
    let mut target = scalar(0.0);
    target.soft_update(&scalar(1.0), 0.001);
    assert_eq!(target.flat_parameters(), vec![0.001, 0.001]);
    let mut target = scalar(0.3);
    target.soft_update(&scalar(-2.0), 1.0);
    assert_eq!(target, scalar(-2.0));
}

#[test]
fn checkpoint_bytes_survive_a_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ck = Checkpoint::default();
    ck.nets.push(("actor".into(), DenseNet::mlp(&[3, 7, 2], Activation::Tanh { scale: 1.0 }, 3e-3, &mut rng)));
    ck.meta.insert("note".into(), "x".into());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.ckpt");
    ck.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded.to_bytes(), ck.to_bytes());
    assert_eq!(std::fs::read(&path).unwrap(), ck.to_bytes());
}
