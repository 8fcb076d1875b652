//! Test support: independent numerical oracles and random-case generators.
//!
//! Everything here exists to *check* the production paths from the outside
//! and deliberately avoids them: the finite-difference gradient only calls
//! the loss, never the analytic gradient it is used to verify.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use crate::activation::ActivationKind;
use crate::matrix::Matrix;
use crate::mlp::{Batch, MlpSpec, WeightVector};
use crate::scalar::{cast, Real};

/// Central-difference gradient of a scalar function: component j is
/// `(f(w + h e_j) − f(w − h e_j)) / (2h)`.
pub fn finite_difference_gradient<T, F>(mut f: F, w: &[T], h: f64) -> Vec<T>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let step = cast::<T>(h);
    let mut probe = w.to_vec();
    let mut grad = Vec::with_capacity(w.len());
    for j in 0..w.len() {
        probe[j] = w[j] + step;
        let plus = f(&probe);
        probe[j] = w[j] - step;
        let minus = f(&probe);
        probe[j] = w[j];
        grad.push((plus - minus) / (step + step));
    }
    grad
}

/// Largest per-component relative discrepancy between two gradients.
/// Absolute differences at or below `abs_floor` count as zero; anything
/// larger is measured relative to the bigger component magnitude.
pub fn max_relative_error<T: Real>(a: &[T], b: &[T], abs_floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let diff = crate::scalar::to_f64((x - y).abs());
            if diff <= abs_floor {
                0.0
            } else {
                diff / crate::scalar::to_f64(x.abs().max(y.abs()))
            }
        })
        .fold(0.0, f64::max)
}

/// A random small network, weight vector, and batch for gradient checks.
/// Dimensions stay small (m ≤ 50 for the default bounds) and weights stay
/// moderate so outputs never reach the loss clamp.
pub fn random_mlp_case<T: Real>(
    rng: &mut ChaCha8Rng,
    hidden: ActivationKind,
) -> (MlpSpec, WeightVector<T>, Batch<T>) {
    let n_input = rng.random_range(1..=4usize);
    let n_output = rng.random_range(1..=3usize);
    // Keep (n_input+1)·n_hidden + (n_hidden+1)·n_output ≤ 50.
    let max_hidden = ((50 - n_output) / (n_input + 1 + n_output)).max(1);
    let n_hidden = rng.random_range(1..=max_hidden.min(6));
    let spec = MlpSpec::new(n_input, n_hidden, n_output, hidden);

    let w = WeightVector(
        (0..spec.param_count())
            .map(|_| cast::<T>(rng.random_range(-1.5..1.5)))
            .collect(),
    );

    let n_patterns = rng.random_range(2..=6usize);
    let mut inputs = Matrix::zeros(n_patterns, n_input);
    let mut targets = Matrix::zeros(n_patterns, n_output);
    for p in 0..n_patterns {
        for d in 0..n_input {
            inputs.set(p, d, cast::<T>(rng.random_range(-2.0..2.0)));
        }
        if n_output == 1 {
            targets.set(p, 0, cast::<T>(f64::from(rng.random_range(0..=1u8))));
        } else {
            let hot = rng.random_range(0..n_output);
            targets.set(p, hot, T::one());
        }
    }
    (spec, w, Batch { inputs, targets })
}
