//! Empirical analysis of neural-network loss landscapes.
//!
//! This crate samples the weight space of single-hidden-layer MLPs with
//! progressive gradient walks, classifies local curvature from Hessian
//! eigenvalues, measures hidden-neuron saturation, and assembles the
//! per-step records into loss-gradient clouds (training error on the
//! x-axis, gradient norm on the y-axis) that expose the stationary
//! structure of the landscape.
//!
//! The numeric core is generic over the scalar type via [`Real`]
//! (implemented for `f32` and `f64`). The CLI and the experiment
//! presets run everything in `f64`; the aliases at the crate root fix
//! that choice.
//!
//! ```
//! use lgc_core::data::xor_dataset;
//! use lgc_core::mlp::MlpSpec;
//! use lgc_core::pipeline::{run_cell, CellPlan};
//! use lgc_core::walk::WalkConfig;
//! use lgc_core::{curvature, ActivationKind};
//!
//! let dataset = xor_dataset::<f64>();
//! let spec = MlpSpec::new(2, 2, 1, ActivationKind::Tanh);
//! let cloud = run_cell(&CellPlan {
//!     dataset: &dataset,
//!     spec,
//!     config: WalkConfig::micro(1.0, 42).with_steps(50),
//!     walk_count: 4,
//!     hessian_enabled: true,
//!     hessian_stride: 1,
//!     hessian_opts: curvature::HessianOptions::default(),
//!     tau_abs: curvature::DEFAULT_TAU_ABS,
//!     tau_rel: curvature::DEFAULT_TAU_REL,
//!     batch_size: None,
//!     eval_batch_cap: 1000,
//! })
//! .unwrap();
//! assert_eq!(cloud.len(), 200);
//! let attractors = lgc_core::cloud::find_attractors(&cloud, &Default::default());
//! assert!(attractors.len() <= 200);
//! ```

pub mod activation;
pub mod cloud;
pub mod curvature;
pub mod data;
pub mod eigen;
mod error;
pub mod matrix;
pub mod mlp;
pub mod pipeline;
pub mod render;
pub mod saturation;
pub mod scalar;
pub mod seed;
pub mod testkit;
pub mod walk;

pub use activation::ActivationKind;
pub use error::{Error, Result};
pub use scalar::Real;

/// Default scalar for experiment runs; everything the CLI writes is `f64`.
pub type Scalar = f64;

/// `f64` instantiations of the main aggregates.
pub type Matrix64 = matrix::Matrix<f64>;
pub type WeightVector64 = mlp::WeightVector<f64>;
pub type Batch64 = mlp::Batch<f64>;
pub type Dataset64 = data::Dataset<f64>;
pub type WalkTrace64 = walk::WalkTrace<f64>;
pub type Cloud64 = cloud::Cloud<f64>;

/// `f32` instantiations, for callers that trade precision for memory.
pub type Matrix32 = matrix::Matrix<f32>;
pub type WeightVector32 = mlp::WeightVector<f32>;
pub type Batch32 = mlp::Batch<f32>;
pub type Dataset32 = data::Dataset<f32>;
pub type WalkTrace32 = walk::WalkTrace<f32>;
pub type Cloud32 = cloud::Cloud<f32>;
