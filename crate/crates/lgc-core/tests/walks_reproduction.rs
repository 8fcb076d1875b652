//! Walk-protocol reproduction checks on the XOR problem.

use lgc_core::data::{xor_dataset, BatchSource, FullBatch};
use lgc_core::mlp::MlpSpec;
use lgc_core::scalar::to_f64;
use lgc_core::walk::{experiment_walk_count, pgw_run, WalkConfig};
use lgc_core::ActivationKind;

/// The full 10×m micro protocol on XOR TanH reaches a global-minimum
/// attractor: at least one of the 90 walks ends below E_t = 0.05.
#[test]
fn xor_tanh_micro_reaches_a_global_minimum_attractor() {
    let spec = MlpSpec::new(2, 2, 1, ActivationKind::Tanh);
    let dataset = xor_dataset::<f64>();
    let config = WalkConfig::micro(1.0, 20240817);
    let walk_count = experiment_walk_count(spec.param_count());
    assert_eq!(walk_count, 90);

    let mut best_final = f64::INFINITY;
    for walk_id in 0..walk_count as u64 {
        let mut source = FullBatch::new(dataset.train_batch());
        let trace = pgw_run(
            &spec,
            &mut source as &mut dyn BatchSource<f64>,
            None,
            &config,
            walk_id,
        )
        .unwrap();
        assert_eq!(trace.n_steps(), 1000);
        let last = to_f64(trace.records.last().unwrap().e_train);
        best_final = best_final.min(last);
    }
    assert!(
        best_final < 0.05,
        "no walk converged; best final E_t = {best_final}"
    );
}
