//! Central finite differences against the reverse pass.

use ndarray::Array2;

use super::DenseNet;

/// Largest disagreement found by [`check_gradients`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    /// Components compared.
    pub checked: usize,
    /// Components skipped because a rectifier changed sign inside `±h`.
    pub skipped: usize,
    pub max_relative_error: f64,
}

impl GradientCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.checked > 0 && self.max_relative_error <= tolerance
    }
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Compares the gradient of `L = weights . net(input)` with respect to every
/// parameter and every input component against central differences of step
/// `h`. A component is skipped when the rectifier pattern at `+h` or `-h`
/// differs from the unperturbed one, since the difference quotient then
/// straddles a kink.
pub fn check_gradients(net: &DenseNet, input: &[f64], weights: &[f64], h: f64, floor: f64) -> GradientCheck {
    assert_eq!(weights.len(), net.output_dim(), "one loss weight per output");
    let loss = |n: &DenseNet, x: &[f64]| -> f64 { n.predict(x).iter().zip(weights).map(|(y, w)| y * w).sum() };
    let (_, tape) = net.forward(input);
    let upstream = Array2::from_shape_vec((1, weights.len()), weights.to_vec()).expect("row vector");
    let (grads, input_grad) = net.backward(&tape, upstream.view());
    let analytic = grads.flatten();
    let base_pattern = net.relu_pattern(input);

    let mut report = GradientCheck { checked: 0, skipped: 0, max_relative_error: 0.0 };
    let mut record = |a: f64, numeric: Option<f64>| match numeric {
        Some(n) => {
            report.checked += 1;
            report.max_relative_error = report.max_relative_error.max(relative_error(a, n, floor));
        }
        None => report.skipped += 1,
    };

    let params = net.flat_parameters();
    for (i, &p) in params.iter().enumerate() {
        let mut plus = net.clone();
        plus.set_flat_parameter(i, p + h);
        let mut minus = net.clone();
        minus.set_flat_parameter(i, p - h);
        let smooth = plus.relu_pattern(input) == base_pattern && minus.relu_pattern(input) == base_pattern;
        record(analytic[i], smooth.then(|| (loss(&plus, input) - loss(&minus, input)) / (2.0 * h)));
    }
    for j in 0..input.len() {
        let mut plus = input.to_vec();
        plus[j] += h;
        let mut minus = input.to_vec();
        minus[j] -= h;
        let smooth = net.relu_pattern(&plus) == base_pattern && net.relu_pattern(&minus) == base_pattern;
        record(input_grad[[0, j]], smooth.then(|| (loss(net, &plus) - loss(net, &minus)) / (2.0 * h)));
    }
    report
}
