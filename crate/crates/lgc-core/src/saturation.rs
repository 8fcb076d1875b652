//! Hidden-neuron saturation measures.
//!
//! Bounded activations (TanH, sigmoid) use the ς_h measure: the mean
//! absolute deviation of activations from the range midpoint, normalized
//! by the half-width. Its anchor points: 0 when everything sits at the
//! midpoint, 0.5 for a uniform spread, 1 when everything sits on the
//! asymptotes. ReLU uses the fraction of exactly-zero activations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{cast, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaturationMethod {
    /// ς_h over a bounded activation range.
    BoundedSigma,
    /// Fraction of exactly-zero ReLU activations.
    ReluZeroFraction,
}

impl SaturationMethod {
    pub fn name(self) -> &'static str {
        match self {
            SaturationMethod::BoundedSigma => "bounded_sigma",
            SaturationMethod::ReluZeroFraction => "relu_zero_fraction",
        }
    }
}

/// A saturation value in [0, 1] tagged with the method that produced it,
/// so clouds mixing activation functions stay interpretable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationReading<T> {
    pub value: T,
    pub method: SaturationMethod,
}

/// ς_h over the hidden activations of a batch: mean of |a − c| / r with
/// c the range midpoint and r the half-width.
pub fn sigma_h<T: Real>(
    hidden_activations: &Matrix<T>,
    range_lo: f64,
    range_hi: f64,
) -> Result<SaturationReading<T>> {
    if hidden_activations.is_empty() {
        return Err(Error::EmptyInput("sigma_h over zero activations"));
    }
    if range_hi.is_nan() || range_lo.is_nan() || range_hi <= range_lo {
        return Err(Error::InvalidArgument(format!(
            "activation range [{range_lo}, {range_hi}] is not increasing"
        )));
    }
    let mid = cast::<T>((range_lo + range_hi) / 2.0);
    let half_width = cast::<T>((range_hi - range_lo) / 2.0);
    let n = cast::<T>((hidden_activations.rows() * hidden_activations.cols()) as f64);
    let sum: T = hidden_activations
        .iter()
        .map(|&a| ((a - mid) / half_width).abs())
        .sum();
    Ok(SaturationReading {
        value: sum / n,
        method: SaturationMethod::BoundedSigma,
    })
}

/// Fraction of hidden activations that are exactly zero. ReLU produces an
/// exact 0 on its saturated branch, so no epsilon is involved.
pub fn relu_zero_fraction<T: Real>(hidden_activations: &Matrix<T>) -> Result<SaturationReading<T>> {
    if hidden_activations.is_empty() {
        return Err(Error::EmptyInput(
            "relu_zero_fraction over zero activations",
        ));
    }
    let zeros = hidden_activations
        .iter()
        .filter(|&&a| a == T::zero())
        .count();
    let total = hidden_activations.rows() * hidden_activations.cols();
    Ok(SaturationReading {
        value: cast::<T>(zeros as f64 / total as f64),
        method: SaturationMethod::ReluZeroFraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[Vec<f64>]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn sigma_h_endpoint_concentration_is_one() {
        let acts = mat(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let r = sigma_h(&acts, -1.0, 1.0).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.method, SaturationMethod::BoundedSigma);
    }

    #[test]
    fn sigma_h_midpoint_concentration_is_zero() {
        let acts = mat(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(sigma_h(&acts, -1.0, 1.0).unwrap().value, 0.0);
        let acts = mat(&[vec![0.5, 0.5]]);
        assert_eq!(sigma_h(&acts, 0.0, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn sigma_h_rejects_empty_input() {
        let acts: Matrix<f64> = Matrix::zeros(0, 3);
        assert!(sigma_h(&acts, -1.0, 1.0).is_err());
    }

    #[test]
    fn relu_zero_fraction_counts_exact_zeros() {
        assert_eq!(
            relu_zero_fraction(&mat(&[vec![0.0, 2.0], vec![3.0, 0.0]]))
                .unwrap()
                .value,
            0.5
        );
        assert_eq!(
            relu_zero_fraction(&mat(&[vec![0.0, 0.0]])).unwrap().value,
            1.0
        );
        assert_eq!(
            relu_zero_fraction(&mat(&[vec![1.0, 2.0]])).unwrap().value,
            0.0
        );
        let empty: Matrix<f64> = Matrix::zeros(0, 0);
        assert!(relu_zero_fraction(&empty).is_err());
    }
}
