//! Per-cell experiment execution: runs the walk family for one
//! (problem, activation, range, regime) cell in parallel, enriches the
//! traces with curvature, and assembles the cloud.
//!
//! Walks are independent jobs keyed by walk id; no walk reads another's
//! state, and the merge is ordered by walk id, so results are identical
//! for any worker count or scheduling.

use rayon::prelude::*;

use crate::cloud::{collect, Cloud};
use crate::curvature::{self, CurvatureOutcome, HessianOptions};
use crate::data::{BatchSource, Dataset};
use crate::eigen;
use crate::error::Result;
use crate::mlp::{Batch, MlpSpec};
use crate::scalar::Real;
use crate::seed::{derive_seed, SALT_BATCH_ORDER};
use crate::walk::{pgw_run, WalkConfig, WalkTrace};

/// Everything needed to run one experiment cell.
#[derive(Debug, Clone)]
pub struct CellPlan<'a, T: Real> {
    pub dataset: &'a Dataset<T>,
    pub spec: MlpSpec,
    pub config: WalkConfig,
    pub walk_count: usize,
    /// Compute Hessians along the walks (already resolved from auto/on/off).
    pub hessian_enabled: bool,
    /// Classify every `stride`-th step (1 = every step).
    pub hessian_stride: usize,
    pub hessian_opts: HessianOptions,
    pub tau_abs: f64,
    pub tau_rel: f64,
    /// Mini-batch size for the training batches; `None` = full batch.
    pub batch_size: Option<usize>,
    /// Cap on the fixed evaluation batch drawn from the test split.
    pub eval_batch_cap: usize,
}

/// Fills curvature classifications (and the ReLU kink flag) into a trace,
/// every `stride`-th step, using the given batch.
pub fn enrich_curvature<T: Real>(
    trace: &mut WalkTrace<T>,
    spec: &MlpSpec,
    batch: &Batch<T>,
    stride: usize,
    hessian_opts: &HessianOptions,
    tau_abs: f64,
    tau_rel: f64,
) -> Result<()> {
    let stride = stride.max(1);
    for i in (0..trace.positions.len()).step_by(stride) {
        let result = curvature::mlp_hessian(spec, &trace.positions[i], batch, hessian_opts)?;
        let values = eigen::eigen_symmetric(&result.hessian.entries)?;
        let class = curvature::classify(&values, tau_abs, tau_rel);
        trace.records[i].curvature = CurvatureOutcome::Classified(class);
        trace.records[i].kink_adjacent = result.kink_adjacent;
    }
    Ok(())
}

/// Runs one walk of a cell, including curvature enrichment.
fn run_walk<T: Real>(
    plan: &CellPlan<'_, T>,
    eval_batch: Option<&Batch<T>>,
    hessian_batch: Option<&Batch<T>>,
    walk_id: u64,
) -> Result<WalkTrace<T>> {
    let batch_seed = derive_seed(plan.config.seed, walk_id, SALT_BATCH_ORDER);
    let mut schedule = plan.dataset.batch_schedule(plan.batch_size, batch_seed);
    let mut trace = pgw_run(
        &plan.spec,
        &mut schedule as &mut dyn BatchSource<T>,
        eval_batch,
        &plan.config,
        walk_id,
    )?;
    if let Some(batch) = hessian_batch {
        enrich_curvature(
            &mut trace,
            &plan.spec,
            batch,
            plan.hessian_stride,
            &plan.hessian_opts,
            plan.tau_abs,
            plan.tau_rel,
        )?;
    }
    Ok(trace)
}

/// Runs a full cell: `walk_count` walks in parallel, merged into a cloud.
pub fn run_cell<T: Real>(plan: &CellPlan<'_, T>) -> Result<Cloud<T>> {
    let eval_batch = plan
        .dataset
        .eval_batch(plan.eval_batch_cap, plan.config.seed);
    let hessian_batch = if plan.hessian_enabled && plan.spec.param_count() <= plan.hessian_opts.cap
    {
        Some(plan.dataset.train_batch())
    } else {
        None
    };

    let traces: Vec<WalkTrace<T>> = (0..plan.walk_count as u64)
        .into_par_iter()
        .map(|walk_id| run_walk(plan, eval_batch.as_ref(), hessian_batch.as_ref(), walk_id))
        .collect::<Result<Vec<_>>>()?;

    collect(traces)
}
