//! Loss Hessians and curvature classification.
//!
//! The Hessian is estimated by central finite differences of the analytic
//! gradient (one order of error less than double differencing, and it
//! reuses the tested gradient), symmetrized, and eigendecomposed. A sampled
//! point is convex when all eigenvalues are positive, concave when all are
//! negative, a saddle on mixed signs, and singular when any eigenvalue is
//! numerically zero — the flat case the literature also calls "indefinite".

use serde::{Deserialize, Serialize};

use crate::eigen;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mlp::{self, Batch, MlpSpec, WeightVector};
use crate::scalar::{cast, Real};

/// Default dimensionality cap: Hessians above this are skipped explicitly.
pub const DEFAULT_HESSIAN_CAP: usize = 1000;
/// Default relative step for the finite-difference columns.
pub const DEFAULT_HESSIAN_STEP_SCALE: f64 = 1e-5;
/// Default absolute threshold under which an eigenvalue counts as zero.
pub const DEFAULT_TAU_ABS: f64 = 1e-8;
/// Default threshold relative to the largest |eigenvalue|. Kept near the
/// f64 noise floor: with loss Hessians whose top eigenvalue is O(1), a
/// larger value (say 1e-6) silently widens the zero band far past the
/// absolute floor and inflates the singular class.
pub const DEFAULT_TAU_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianOptions {
    /// Refuse to build Hessians with more rows than this.
    pub cap: usize,
    /// Per-coordinate step is `step_scale * max(1, |w_j|)`.
    pub step_scale: f64,
}

impl Default for HessianOptions {
    fn default() -> Self {
        HessianOptions {
            cap: DEFAULT_HESSIAN_CAP,
            step_scale: DEFAULT_HESSIAN_STEP_SCALE,
        }
    }
}

/// Symmetrized Hessian estimate.
#[derive(Debug, Clone)]
pub struct HessianMatrix<T> {
    pub entries: Matrix<T>,
}

/// Hessian plus the ReLU kink diagnostic.
#[derive(Debug, Clone)]
pub struct HessianResult<T> {
    pub hessian: HessianMatrix<T>,
    /// True when any hidden net of the batch changes sign inside the
    /// finite-difference stencil of some hidden-layer weight, i.e. the
    /// estimate straddled the ReLU kink and is a one-sided average.
    pub kink_adjacent: bool,
}

/// Curvature label derived from eigenvalue sign counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureKind {
    Convex,
    Concave,
    Saddle,
    Singular,
}

impl CurvatureKind {
    pub fn name(self) -> &'static str {
        match self {
            CurvatureKind::Convex => "convex",
            CurvatureKind::Concave => "concave",
            CurvatureKind::Saddle => "saddle",
            CurvatureKind::Singular => "singular",
        }
    }

    pub const ALL: [CurvatureKind; 4] = [
        CurvatureKind::Convex,
        CurvatureKind::Concave,
        CurvatureKind::Saddle,
        CurvatureKind::Singular,
    ];
}

/// Classification of one sampled point: the label plus the eigen sign
/// counts it came from (n_pos + n_neg + n_zero = m).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvatureClass {
    pub kind: CurvatureKind,
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_zero: usize,
}

/// Curvature field of a step record: a classification, or an explicit
/// marker that the Hessian was skipped (dimension cap, or disabled).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureOutcome {
    Classified(CurvatureClass),
    Skipped,
}

impl CurvatureOutcome {
    pub fn class(&self) -> Option<&CurvatureClass> {
        match self {
            CurvatureOutcome::Classified(c) => Some(c),
            CurvatureOutcome::Skipped => None,
        }
    }
}

/// Central finite differences of an arbitrary gradient function:
/// column j is `(g(w + h_j e_j) − g(w − h_j e_j)) / (2 h_j)` with
/// `h_j = step_scale · max(1, |w_j|)`, symmetrized afterwards.
pub fn hessian_of_gradient<T, F>(
    grad_fn: F,
    w: &[T],
    opts: &HessianOptions,
) -> Result<HessianMatrix<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    let m = w.len();
    if m == 0 {
        return Err(Error::EmptyInput("hessian of a zero-dimensional point"));
    }
    if m > opts.cap {
        return Err(Error::HessianCapExceeded {
            dim: m,
            cap: opts.cap,
        });
    }
    let step_scale = cast::<T>(opts.step_scale);
    let mut entries = Matrix::zeros(m, m);
    let mut probe = w.to_vec();
    for j in 0..m {
        let h = step_scale * T::one().max(w[j].abs());
        probe[j] = w[j] + h;
        let g_plus = grad_fn(&probe)?;
        probe[j] = w[j] - h;
        let g_minus = grad_fn(&probe)?;
        probe[j] = w[j];
        if g_plus.len() != m || g_minus.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "gradient length {} does not match dimension {m}",
                g_plus.len()
            )));
        }
        let denom = h + h;
        for i in 0..m {
            entries.set(i, j, (g_plus[i] - g_minus[i]) / denom);
        }
    }
    entries.symmetrize();
    Ok(HessianMatrix { entries })
}

/// Hessian of the cross-entropy loss of an MLP at `w`, with the ReLU
/// kink-adjacency diagnostic.
pub fn mlp_hessian<T: Real>(
    spec: &MlpSpec,
    w: &WeightVector<T>,
    batch: &Batch<T>,
    opts: &HessianOptions,
) -> Result<HessianResult<T>> {
    let hessian = hessian_of_gradient(
        |probe| mlp::gradient(spec, &WeightVector(probe.to_vec()), batch),
        w.as_slice(),
        opts,
    )?;
    let kink_adjacent = if spec.hidden_activation.has_kink() {
        kink_within_stencil(spec, w, batch, opts.step_scale)
    } else {
        false
    };
    Ok(HessianResult {
        hessian,
        kink_adjacent,
    })
}

/// Perturbing hidden weight (i, d) by ±h shifts hidden net i of pattern p
/// by ±h·x_d (±h for the bias), so the stencil straddles the kink exactly
/// when |net_i(p)| ≤ h·|x_d(p)|. Output-layer weights never move hidden
/// nets and cannot cross it.
fn kink_within_stencil<T: Real>(
    spec: &MlpSpec,
    w: &WeightVector<T>,
    batch: &Batch<T>,
    step_scale: f64,
) -> bool {
    let pass = match mlp::forward(spec, w, batch) {
        Ok(p) => p,
        Err(_) => return false,
    };
    let scale = cast::<T>(step_scale);
    let wv = w.as_slice();
    for p in 0..batch.n_patterns() {
        let x = batch.inputs.row(p);
        for i in 0..spec.n_hidden {
            let net = pass.hidden_nets.get(p, i).abs();
            for d in 0..=spec.n_input {
                let wj = wv[i * (spec.n_input + 1) + d];
                let h = scale * T::one().max(wj.abs());
                let reach = if d == spec.n_input { h } else { h * x[d].abs() };
                if net <= reach {
                    return true;
                }
            }
        }
    }
    false
}

/// Counts eigenvalue signs and assigns the curvature label. An eigenvalue
/// λ counts as zero iff `|λ| ≤ max(τ_abs, τ_rel · max|λ|)`.
pub fn classify<T: Real>(eigenvalues: &[T], tau_abs: f64, tau_rel: f64) -> CurvatureClass {
    let max_abs = eigenvalues
        .iter()
        .fold(T::zero(), |acc, &v| acc.max(v.abs()));
    let threshold = cast::<T>(tau_abs).max(cast::<T>(tau_rel) * max_abs);
    let mut n_pos = 0;
    let mut n_neg = 0;
    let mut n_zero = 0;
    for &v in eigenvalues {
        if v.abs() <= threshold {
            n_zero += 1;
        } else if v > T::zero() {
            n_pos += 1;
        } else {
            n_neg += 1;
        }
    }
    let kind = if n_zero > 0 {
        CurvatureKind::Singular
    } else if n_neg == 0 {
        CurvatureKind::Convex
    } else if n_pos == 0 {
        CurvatureKind::Concave
    } else {
        CurvatureKind::Saddle
    };
    CurvatureClass {
        kind,
        n_pos,
        n_neg,
        n_zero,
    }
}

/// hessian → eigenvalues → classification in one call.
pub fn classify_point<T, F>(
    grad_fn: F,
    w: &[T],
    opts: &HessianOptions,
    tau_abs: f64,
    tau_rel: f64,
) -> Result<CurvatureClass>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    let hess = hessian_of_gradient(grad_fn, w, opts)?;
    let values = eigen::eigen_symmetric(&hess.entries)?;
    Ok(classify(&values, tau_abs, tau_rel))
}
