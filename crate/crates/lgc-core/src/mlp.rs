//! Single-hidden-layer MLP: architecture description, flat parameter
//! layout, forward propagation, cross-entropy loss, and analytic gradients.
//!
//! All functions here are pure over immutable inputs and safe to call
//! concurrently from any number of walk workers.

use serde::{Deserialize, Serialize};

use crate::activation::{loss_clamp_epsilon, ActivationKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{cast, Real};

/// Architecture of a single-hidden-layer feed-forward network with biases.
/// The output layer is sigmoid in every benchmark; the hidden activation
/// is the experimental variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub n_input: usize,
    pub n_hidden: usize,
    pub n_output: usize,
    pub hidden_activation: ActivationKind,
    pub output_activation: ActivationKind,
}

impl MlpSpec {
    /// Builds a spec with the sigmoid output layer used by all benchmarks.
    pub fn new(n_input: usize, n_hidden: usize, n_output: usize, hidden: ActivationKind) -> Self {
        MlpSpec {
            n_input,
            n_hidden,
            n_output,
            hidden_activation: hidden,
            output_activation: ActivationKind::Sigmoid,
        }
    }

    /// Total number of weights: `(n_input+1)·n_hidden + (n_hidden+1)·n_output`
    /// (the +1 columns are the biases).
    pub fn param_count(&self) -> usize {
        (self.n_input + 1) * self.n_hidden + (self.n_hidden + 1) * self.n_output
    }

    /// Offset of the output-layer block in the flat weight layout.
    fn output_block_offset(&self) -> usize {
        (self.n_input + 1) * self.n_hidden
    }
}

/// Free-function form of [`MlpSpec::param_count`].
pub fn param_count(spec: &MlpSpec) -> usize {
    spec.param_count()
}

/// Flat parameter vector in the canonical layout: hidden-layer weights
/// row-major with the bias last per neuron, then output-layer weights
/// row-major with the bias last per neuron. This is the walk's state.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T>(pub Vec<T>);

impl<T: Real> WeightVector<T> {
    pub fn zeros(m: usize) -> Self {
        WeightVector(vec![T::zero(); m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|w| w.is_finite())
    }
}

/// A set of input patterns with their encoded targets.
#[derive(Debug, Clone)]
pub struct Batch<T> {
    pub inputs: Matrix<T>,
    pub targets: Matrix<T>,
}

impl<T: Real> Batch<T> {
    pub fn new(inputs: Matrix<T>, targets: Matrix<T>) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} input patterns vs {} target rows",
                inputs.rows(),
                targets.rows()
            )));
        }
        Ok(Batch { inputs, targets })
    }

    pub fn n_patterns(&self) -> usize {
        self.inputs.rows()
    }
}

/// Everything a forward pass produces. Hidden nets and activations are
/// retained for the saturation measures and the kink-adjacency check.
#[derive(Debug, Clone)]
pub struct ForwardPass<T> {
    pub hidden_nets: Matrix<T>,
    pub hidden: Matrix<T>,
    pub outputs: Matrix<T>,
}

fn check_shapes<T: Real>(spec: &MlpSpec, w: &WeightVector<T>, batch: &Batch<T>) -> Result<()> {
    if w.len() != spec.param_count() {
        return Err(Error::ShapeMismatch(format!(
            "weight vector has {} entries, spec needs {}",
            w.len(),
            spec.param_count()
        )));
    }
    if batch.inputs.cols() != spec.n_input {
        return Err(Error::ShapeMismatch(format!(
            "batch has {} input columns, spec has {}",
            batch.inputs.cols(),
            spec.n_input
        )));
    }
    if batch.targets.cols() != spec.n_output {
        return Err(Error::ShapeMismatch(format!(
            "batch has {} target columns, spec has {}",
            batch.targets.cols(),
            spec.n_output
        )));
    }
    Ok(())
}

/// Propagates a batch through the network.
pub fn forward<T: Real>(
    spec: &MlpSpec,
    w: &WeightVector<T>,
    batch: &Batch<T>,
) -> Result<ForwardPass<T>> {
    check_shapes(spec, w, batch)?;
    let n = batch.n_patterns();
    let (nh, no, ni) = (spec.n_hidden, spec.n_output, spec.n_input);
    let wv = w.as_slice();
    let out_off = spec.output_block_offset();

    let mut hidden_nets = Matrix::zeros(n, nh);
    let mut hidden = Matrix::zeros(n, nh);
    let mut outputs = Matrix::zeros(n, no);

    for p in 0..n {
        let x = batch.inputs.row(p);
        for i in 0..nh {
            let row = &wv[i * (ni + 1)..(i + 1) * (ni + 1)];
            let mut net = row[ni]; // bias
            for (d, &xd) in x.iter().enumerate() {
                net += row[d] * xd;
            }
            hidden_nets.set(p, i, net);
            hidden.set(p, i, spec.hidden_activation.apply(net));
        }
        let a = hidden.row(p).to_vec();
        for k in 0..no {
            let row = &wv[out_off + k * (nh + 1)..out_off + (k + 1) * (nh + 1)];
            let mut net = row[nh]; // bias
            for (j, &aj) in a.iter().enumerate() {
                net += row[j] * aj;
            }
            outputs.set(p, k, spec.output_activation.apply(net));
        }
    }

    Ok(ForwardPass {
        hidden_nets,
        hidden,
        outputs,
    })
}

/// Cross-entropy loss, summed over output units and averaged over patterns.
/// Outputs are clamped to `[ε, 1−ε]` (ε = 1e-12 for f64) before the logs;
/// the clamp lives in the loss only, never in recorded activations.
pub fn cross_entropy<T: Real>(outputs: &Matrix<T>, targets: &Matrix<T>) -> Result<T> {
    if outputs.rows() != targets.rows() || outputs.cols() != targets.cols() {
        return Err(Error::ShapeMismatch(format!(
            "outputs {}x{} vs targets {}x{}",
            outputs.rows(),
            outputs.cols(),
            targets.rows(),
            targets.cols()
        )));
    }
    if outputs.rows() == 0 {
        return Err(Error::EmptyInput("cross_entropy over zero patterns"));
    }
    let eps = loss_clamp_epsilon::<T>();
    let lo = eps;
    let hi = T::one() - eps;
    let mut total = T::zero();
    for p in 0..outputs.rows() {
        for (o, t) in outputs.row(p).iter().zip(targets.row(p)) {
            let oc = o.max(lo).min(hi);
            total -= *t * oc.ln() + (T::one() - *t) * (T::one() - oc).ln();
        }
    }
    Ok(total / cast::<T>(outputs.rows() as f64))
}

/// Loss and analytic gradient in one backward pass; the gradient shares the
/// flat layout of [`WeightVector`]. The forward pass is returned so callers
/// can reuse the hidden activations (saturation) without recomputing.
#[allow(clippy::needless_range_loop)]
pub fn loss_and_gradient<T: Real>(
    spec: &MlpSpec,
    w: &WeightVector<T>,
    batch: &Batch<T>,
) -> Result<(T, Vec<T>, ForwardPass<T>)> {
    let pass = forward(spec, w, batch)?;
    let loss = cross_entropy(&pass.outputs, &batch.targets)?;

    let n = batch.n_patterns();
    let (nh, no, ni) = (spec.n_hidden, spec.n_output, spec.n_input);
    let wv = w.as_slice();
    let out_off = spec.output_block_offset();
    let eps = loss_clamp_epsilon::<T>();
    let lo = eps;
    let hi = T::one() - eps;

    let mut grad = vec![T::zero(); spec.param_count()];
    let mut delta_out = vec![T::zero(); no];
    let mut delta_hidden = vec![T::zero(); nh];

    for p in 0..n {
        let x = batch.inputs.row(p);
        // Output delta: gradient of the clamped loss through the sigmoid —
        // exactly (o − t) inside the clamp, zero where the clamp saturates
        // (there the implemented loss is locally constant in o).
        for k in 0..no {
            let o = pass.outputs.get(p, k);
            let t = batch.targets.get(p, k);
            delta_out[k] = if o <= lo || o >= hi { T::zero() } else { o - t };
        }
        for j in 0..nh {
            let mut back = T::zero();
            for k in 0..no {
                back += wv[out_off + k * (nh + 1) + j] * delta_out[k];
            }
            delta_hidden[j] = back
                * spec
                    .hidden_activation
                    .derivative(pass.hidden_nets.get(p, j));
        }
        for (k, &dk) in delta_out.iter().enumerate() {
            let base = out_off + k * (nh + 1);
            for j in 0..nh {
                grad[base + j] += dk * pass.hidden.get(p, j);
            }
            grad[base + nh] += dk;
        }
        for (j, &dj) in delta_hidden.iter().enumerate() {
            let base = j * (ni + 1);
            for (d, &xd) in x.iter().enumerate() {
                grad[base + d] += dj * xd;
            }
            grad[base + ni] += dj;
        }
    }

    let inv_n = T::one() / cast::<T>(n as f64);
    for g in &mut grad {
        *g *= inv_n;
    }
    Ok((loss, grad, pass))
}

/// Analytic gradient of [`cross_entropy`] with respect to every weight.
pub fn gradient<T: Real>(spec: &MlpSpec, w: &WeightVector<T>, batch: &Batch<T>) -> Result<Vec<T>> {
    loss_and_gradient(spec, w, batch).map(|(_, g, _)| g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_batch() -> Batch<f64> {
        let inputs = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let targets = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![1.0], vec![0.0]]).unwrap();
        Batch::new(inputs, targets).unwrap()
    }

    #[test]
    fn param_count_matches_benchmark_architectures() {
        let xor = MlpSpec::new(2, 2, 1, ActivationKind::Tanh);
        let iris = MlpSpec::new(4, 4, 3, ActivationKind::Tanh);
        let heart = MlpSpec::new(32, 10, 1, ActivationKind::Tanh);
        let mnist = MlpSpec::new(784, 10, 10, ActivationKind::Tanh);
        assert_eq!(xor.param_count(), 9);
        assert_eq!(iris.param_count(), 35);
        assert_eq!(heart.param_count(), 341);
        assert_eq!(mnist.param_count(), 7960);
    }

    #[test]
    fn zero_weights_give_half_outputs() {
        let spec = MlpSpec::new(2, 2, 1, ActivationKind::Tanh);
        let w = WeightVector::zeros(spec.param_count());
        let pass = forward(&spec, &w, &xor_batch()).unwrap();
        assert_eq!(pass.outputs.rows(), 4);
        assert_eq!(pass.outputs.cols(), 1);
        for &o in pass.outputs.iter() {
            assert_eq!(o, 0.5);
        }
    }

    #[test]
    fn forward_shapes_follow_spec() {
        let spec = MlpSpec::new(4, 4, 3, ActivationKind::Relu);
        let w: WeightVector<f64> = WeightVector::zeros(spec.param_count());
        let inputs = Matrix::zeros(7, 4);
        let targets = Matrix::zeros(7, 3);
        let pass = forward(&spec, &w, &Batch::new(inputs, targets).unwrap()).unwrap();
        assert_eq!((pass.hidden.rows(), pass.hidden.cols()), (7, 4));
        assert_eq!((pass.outputs.rows(), pass.outputs.cols()), (7, 3));
    }

    #[test]
    fn forward_rejects_bad_shapes() {
        let spec = MlpSpec::new(2, 2, 1, ActivationKind::Tanh);
        let w = WeightVector::zeros(spec.param_count() - 1);
        assert!(matches!(
            forward(&spec, &w, &xor_batch()),
            Err(Error::ShapeMismatch(_))
        ));
        let w: WeightVector<f64> = WeightVector::zeros(spec.param_count());
        let bad = Batch::new(Matrix::zeros(4, 3), Matrix::zeros(4, 1)).unwrap();
        assert!(forward(&spec, &w, &bad).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        let half = Matrix::from_rows(&[vec![0.5_f64]]).unwrap();
        let one = Matrix::from_rows(&[vec![1.0_f64]]).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((cross_entropy(&half, &one).unwrap() - ln2).abs() < 1e-15);

        // Perfect predictions: loss approaches zero.
        let near = Matrix::from_rows(&[vec![1.0 - 1e-9_f64, 1e-9]]).unwrap();
        let tgt = Matrix::from_rows(&[vec![1.0_f64, 0.0]]).unwrap();
        assert!(cross_entropy(&near, &tgt).unwrap() < 1e-8);

        // Mean over patterns of two identical ln 2 terms.
        let outs = Matrix::from_rows(&[vec![0.5_f64], vec![0.5]]).unwrap();
        let tgts = Matrix::from_rows(&[vec![0.0_f64], vec![1.0]]).unwrap();
        assert!((cross_entropy(&outs, &tgts).unwrap() - ln2).abs() < 1e-15);
    }

    #[test]
    fn zero_weights_and_half_targets_zero_the_gradient() {
        let spec = MlpSpec::new(2, 2, 1, ActivationKind::Tanh);
        let w = WeightVector::zeros(spec.param_count());
        let inputs = Matrix::from_rows(&[vec![0.3, -0.7], vec![1.0, 2.0]]).unwrap();
        let targets = Matrix::from_rows(&[vec![0.5], vec![0.5]]).unwrap();
        let g = gradient(&spec, &w, &Batch::new(inputs, targets).unwrap()).unwrap();
        let out_off = spec.output_block_offset();
        for &gk in &g[out_off..] {
            assert_eq!(gk, 0.0);
        }
    }

    #[test]
    fn relu_dead_hidden_layer_zeroes_hidden_gradients() {
        let spec = MlpSpec::new(2, 2, 1, ActivationKind::Relu);
        // Negative biases and weights keep every hidden net below zero for
        // the all-positive inputs.
        let mut w = vec![-1.0_f64; spec.param_count()];
        // Give the output layer something non-trivial.
        w[spec.output_block_offset()] = 0.7;
        let inputs = Matrix::from_rows(&[vec![0.5, 0.25], vec![1.0, 2.0]]).unwrap();
        let targets = Matrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let g = gradient(
            &spec,
            &WeightVector(w),
            &Batch::new(inputs, targets).unwrap(),
        )
        .unwrap();
        for &gj in &g[..spec.output_block_offset()] {
            assert_eq!(gj, 0.0);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let spec = MlpSpec::new(2, 2, 1, ActivationKind::Elu);
        let w = WeightVector((0..9).map(|i| (i as f64) * 0.37 - 1.2).collect());
        let a = forward(&spec, &w, &xor_batch()).unwrap();
        let b = forward(&spec, &w, &xor_batch()).unwrap();
        assert_eq!(a.outputs, b.outputs);
        assert_eq!(a.hidden, b.hidden);
    }
}
