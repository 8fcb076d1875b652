//! Progressive random walks and progressive gradient walks.
//!
//! A progressive gradient walk (PGW) starts at a uniform random point of
//! the initialization hypercube and repeatedly takes a progressive random
//! walk (PRW) step: per-coordinate magnitudes are uniform on [0, ε] and the
//! sign of each coordinate is forced opposite to the loss gradient through
//! a binary mask. Gradient information is thereby combined with
//! stochasticity, steering the sample into low-error regions.

use rand::distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::cloud::StepRecord;
use crate::curvature::CurvatureOutcome;
use crate::data::BatchSource;
use crate::error::{Error, Result};
use crate::mlp::{self, Batch, MlpSpec, WeightVector};
use crate::saturation::{self, SaturationReading};
use crate::scalar::{cast, to_f64, Real};
use crate::seed::{derive_rng, SALT_WALK};

/// Step-size regime: micro steps are 1% of the initialization range width
/// and run for 1000 steps; macro steps are 10% of the width for 100 steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Micro,
    Macro,
}

impl Regime {
    /// Fraction of the initialization range *width* the maximum step takes.
    pub fn step_fraction(self) -> f64 {
        match self {
            Regime::Micro => 0.01,
            Regime::Macro => 0.1,
        }
    }

    pub fn default_steps(self) -> usize {
        match self {
            Regime::Micro => 1000,
            Regime::Macro => 100,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Micro => "micro",
            Regime::Macro => "macro",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "micro" => Ok(Regime::Micro),
            "macro" => Ok(Regime::Macro),
            other => Err(Error::InvalidArgument(format!(
                "unknown regime {other:?} (expected micro|macro)"
            ))),
        }
    }
}

/// Full description of one walk family: the symmetric initialization
/// interval [−a, a], the step regime, the maximum per-coordinate step, the
/// walk length, and the master seed all per-walk streams derive from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Half-width a of the initialization interval [−a, a].
    pub init_half_width: f64,
    pub regime: Regime,
    /// Maximum per-coordinate step ε.
    pub max_step: f64,
    pub n_steps: usize,
    pub seed: u64,
}

impl WalkConfig {
    /// Regime defaults: ε is the regime fraction of the range width 2a
    /// (micro [−1,1] → 0.02; macro [−10,10] → 2), with the regime's step
    /// count.
    pub fn new(regime: Regime, init_half_width: f64, seed: u64) -> Self {
        assert!(
            init_half_width > 0.0 && init_half_width.is_finite(),
            "initialization half-width must be positive and finite"
        );
        WalkConfig {
            init_half_width,
            regime,
            max_step: regime.step_fraction() * 2.0 * init_half_width,
            n_steps: regime.default_steps(),
            seed,
        }
    }

    pub fn micro(init_half_width: f64, seed: u64) -> Self {
        WalkConfig::new(Regime::Micro, init_half_width, seed)
    }

    pub fn with_steps(mut self, n_steps: usize) -> Self {
        assert!(n_steps >= 1, "walks need at least one step");
        self.n_steps = n_steps;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        assert!(max_step > 0.0, "maximum step must be positive");
        self.max_step = max_step;
        self
    }
}

/// Binary direction mask derived from a gradient: bit j is 0 (step
/// negative) iff the gradient component is positive, 1 otherwise — a
/// gradient of exactly zero falls in the "otherwise" branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradientMask {
    pub bits: Vec<bool>,
}

impl GradientMask {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Builds the step-direction mask from a gradient vector.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // g = 0 must take the "otherwise" branch
pub fn mask_from_gradient<T: Real>(g: &[T]) -> GradientMask {
    GradientMask {
        bits: g.iter().map(|&gj| !(gj > T::zero())).collect(),
    }
}

/// Uniform random position in [−a, a]^m.
pub fn init_position<T: Real>(
    m: usize,
    init_half_width: f64,
    rng: &mut impl rand::Rng,
) -> Result<WeightVector<T>> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "cannot initialize a zero-dimensional position".into(),
        ));
    }
    if init_half_width <= 0.0 || !init_half_width.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "initialization half-width {init_half_width} must be positive and finite"
        )));
    }
    let a = cast::<T>(init_half_width);
    let dist = Uniform::new_inclusive(-a, a)
        .map_err(|e| Error::InvalidArgument(format!("uniform init range: {e}")))?;
    Ok(WeightVector((0..m).map(|_| dist.sample(rng)).collect()))
}

/// One PRW step: per-coordinate magnitudes uniform on [0, ε], signs taken
/// from the mask (bit 0 → negative, bit 1 → non-negative).
pub fn prw_step<T: Real>(mask: &GradientMask, max_step: T, rng: &mut impl rand::Rng) -> Vec<T> {
    debug_assert!(max_step >= T::zero());
    if max_step == T::zero() {
        return vec![T::zero(); mask.len()];
    }
    let dist = Uniform::new_inclusive(T::zero(), max_step)
        .expect("step magnitude range is valid for max_step >= 0");
    mask.bits
        .iter()
        .map(|&bit| {
            let magnitude = dist.sample(rng);
            if bit {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect()
}

/// The number of independent walks an experiment runs: 10·m, scaling the
/// sample with problem dimensionality.
pub fn experiment_walk_count(m: usize) -> usize {
    10 * m
}

/// Everything the objective reports at one walk position.
#[derive(Debug, Clone)]
pub struct StepEval<T> {
    pub loss: T,
    pub grad: Vec<T>,
    pub eval_loss: Option<T>,
    pub saturation: Option<SaturationReading<T>>,
}

/// A finished walk: the visited positions and the per-step records, plus
/// the identity (spec, config) used by downstream cloud assembly to reject
/// mixed experiment cells.
#[derive(Debug, Clone)]
pub struct WalkTrace<T> {
    pub walk_id: u64,
    pub config: WalkConfig,
    pub spec: Option<MlpSpec>,
    pub positions: Vec<WeightVector<T>>,
    pub records: Vec<StepRecord<T>>,
}

impl<T: Real> WalkTrace<T> {
    pub fn n_steps(&self) -> usize {
        self.records.len()
    }
}

/// Runs a PGW over an arbitrary objective. Each step evaluates the
/// objective at the current position, records it, and moves by a masked
/// PRW step. Aborts with a diagnostic if the objective turns non-finite.
pub fn pgw_over_objective<T, F>(
    m: usize,
    config: &WalkConfig,
    walk_id: u64,
    mut objective: F,
) -> Result<WalkTrace<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<StepEval<T>>,
{
    if config.n_steps == 0 {
        return Err(Error::InvalidArgument(
            "walk needs at least one step".into(),
        ));
    }
    if config.max_step.is_nan() || config.max_step <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "maximum step {} must be positive",
            config.max_step
        )));
    }
    let mut rng = derive_rng(config.seed, walk_id, SALT_WALK);
    let mut position = init_position::<T>(m, config.init_half_width, &mut rng)?;
    let eps = cast::<T>(config.max_step);

    let mut positions = Vec::with_capacity(config.n_steps);
    let mut records = Vec::with_capacity(config.n_steps);

    for step in 0..config.n_steps {
        let eval = objective(position.as_slice())?;
        let finite_grad = eval.grad.iter().all(|g| g.is_finite());
        let finite_eval = eval.eval_loss.is_none_or(|e| e.is_finite());
        if !eval.loss.is_finite() || !finite_grad || !finite_eval {
            let quantity = if !eval.loss.is_finite() {
                "loss"
            } else if !finite_grad {
                "gradient"
            } else {
                "generalization loss"
            };
            return Err(Error::NonFinite {
                walk_id,
                step,
                quantity,
                position: position.as_slice().iter().map(|&w| to_f64(w)).collect(),
            });
        }

        let grad_norm = eval.grad.iter().map(|&g| g * g).sum::<T>().sqrt();
        records.push(StepRecord {
            walk_id,
            step,
            e_train: eval.loss,
            e_gen: eval.eval_loss,
            grad_norm,
            curvature: CurvatureOutcome::Skipped,
            saturation: eval.saturation,
            kink_adjacent: false,
        });

        let mask = mask_from_gradient(&eval.grad);
        let delta = prw_step(&mask, eps, &mut rng);
        debug_assert!(delta
            .iter()
            .zip(&eval.grad)
            .all(|(&d, &g)| d.abs() <= eps && d * g <= T::zero()));

        positions.push(position.clone());
        let next: Vec<T> = position
            .as_slice()
            .iter()
            .zip(&delta)
            .map(|(&x, &d)| x + d)
            .collect();
        position = WeightVector(next);
    }

    Ok(WalkTrace {
        walk_id,
        config: *config,
        spec: None,
        positions,
        records,
    })
}

/// Runs a PGW over an MLP's cross-entropy loss. One training batch is drawn
/// per step (the full training set, or a rotating mini-batch schedule), the
/// generalization loss is evaluated on `eval_batch` when present, and the
/// activation-appropriate saturation measure is recorded per step: ς_h for
/// bounded hidden activations, the zero fraction for ReLU, nothing for ELU.
pub fn pgw_run<T: Real>(
    spec: &MlpSpec,
    batches: &mut dyn BatchSource<T>,
    eval_batch: Option<&Batch<T>>,
    config: &WalkConfig,
    walk_id: u64,
) -> Result<WalkTrace<T>> {
    let m = spec.param_count();
    let hidden_kind = spec.hidden_activation;
    let mut trace = pgw_over_objective(m, config, walk_id, |w| {
        let weights = WeightVector(w.to_vec());
        let batch = batches.next_batch();
        let (loss, grad, pass) = mlp::loss_and_gradient(spec, &weights, batch)?;

        let saturation = match hidden_kind.bounded_range() {
            Some((lo, hi)) => Some(saturation::sigma_h(&pass.hidden, lo, hi)?),
            None if hidden_kind == crate::ActivationKind::Relu => {
                Some(saturation::relu_zero_fraction(&pass.hidden)?)
            }
            None => None,
        };

        let eval_loss = match eval_batch {
            Some(eb) => {
                let eval_pass = mlp::forward(spec, &weights, eb)?;
                Some(mlp::cross_entropy(&eval_pass.outputs, &eb.targets)?)
            }
            None => None,
        };

        Ok(StepEval {
            loss,
            grad,
            eval_loss,
            saturation,
        })
    })?;
    trace.spec = Some(*spec);
    Ok(trace)
}
