//! Finite-difference check of the reverse pass on actor- and critic-shaped nets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stirguard::nn::{check_gradients, Activation, DenseNet};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (name, sizes, output) in [
        ("actor 4-40-30-2", vec![4, 40, 30, 2], Activation::Tanh { scale: 1.0 }),
        ("critic 6-40-30-1", vec![6, 40, 30, 1], Activation::Identity),
    ] {
        let net = DenseNet::mlp(&sizes, output, 1.0, &mut rng);
        let input: Vec<f64> = (0..sizes[0]).map(|i| 0.3 * i as f64 - 0.5).collect();
        let weights = vec![1.0; sizes[sizes.len() - 1]];
        let report = check_gradients(&net, &input, &weights, 1e-5, 1e-6);
        println!(
            "{name}: {} components checked, {} skipped at kinks, max relative error {:.2e}",
            report.checked, report.skipped, report.max_relative_error
        );
    }
}
