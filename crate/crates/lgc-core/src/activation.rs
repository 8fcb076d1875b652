//! Hidden/output activation functions and their derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cast, Real};

/// The activation functions under study. Sigmoid is the output-layer
/// activation of every benchmark; the hidden layer uses TanH, ReLU, or ELU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Sigmoid,
    Tanh,
    Relu,
    Elu,
}

impl ActivationKind {
    /// Applies the activation to a net input signal.
    ///
    /// Sigmoid: 1/(1+e^−net), range (0,1). TanH: range (−1,1).
    /// ReLU: max(net, 0), range [0,∞). ELU (α = 1): net for net > 0,
    /// e^net − 1 otherwise, range (−1,∞).
    pub fn apply<T: Real>(self, net: T) -> T {
        match self {
            ActivationKind::Sigmoid => T::one() / (T::one() + (-net).exp()),
            ActivationKind::Tanh => net.tanh(),
            ActivationKind::Relu => net.max(T::zero()),
            ActivationKind::Elu => {
                if net > T::zero() {
                    net
                } else {
                    net.exp() - T::one()
                }
            }
        }
    }

    /// Derivative of the activation with respect to its net input.
    ///
    /// ReLU hard-saturates: the derivative is 0 for all negative inputs, and
    /// the non-differentiable point net = 0 is defined to have derivative 0.
    pub fn derivative<T: Real>(self, net: T) -> T {
        match self {
            ActivationKind::Sigmoid => {
                let f = self.apply(net);
                f * (T::one() - f)
            }
            ActivationKind::Tanh => {
                let f = net.tanh();
                T::one() - f * f
            }
            ActivationKind::Relu => {
                if net > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            ActivationKind::Elu => {
                if net > T::zero() {
                    T::one()
                } else {
                    net.exp()
                }
            }
        }
    }

    /// Output range `(lo, hi)` for bounded activations, `None` otherwise.
    pub fn bounded_range(self) -> Option<(f64, f64)> {
        match self {
            ActivationKind::Sigmoid => Some((0.0, 1.0)),
            ActivationKind::Tanh => Some((-1.0, 1.0)),
            ActivationKind::Relu | ActivationKind::Elu => None,
        }
    }

    /// True for activations with a non-smooth point (only ReLU here); used
    /// to flag Hessian estimates taken next to the kink.
    pub fn has_kink(self) -> bool {
        matches!(self, ActivationKind::Relu)
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Relu => "relu",
            ActivationKind::Elu => "elu",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "tanh" => Ok(ActivationKind::Tanh),
            "relu" => Ok(ActivationKind::Relu),
            "elu" => Ok(ActivationKind::Elu),
            other => Err(Error::InvalidArgument(format!(
                "unknown activation {other:?} (expected sigmoid|tanh|relu|elu)"
            ))),
        }
    }
}

/// Free-function form of [`ActivationKind::apply`].
pub fn activate<T: Real>(kind: ActivationKind, net: T) -> T {
    kind.apply(net)
}

/// Free-function form of [`ActivationKind::derivative`].
pub fn activate_derivative<T: Real>(kind: ActivationKind, net: T) -> T {
    kind.derivative(net)
}

/// Clamp floor for outputs inside the cross-entropy loss. 1e-12 for f64;
/// widened to machine epsilon for narrower scalars where 1 − 1e-12
/// rounds to 1.
pub fn loss_clamp_epsilon<T: Real>() -> T {
    cast::<T>(1e-12).max(T::epsilon())
}
