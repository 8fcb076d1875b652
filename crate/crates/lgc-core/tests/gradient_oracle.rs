//! Analytic gradients checked against the central finite-difference oracle.
//! The oracle only evaluates the loss; it never touches the backward pass.

use lgc_core::mlp::{self, WeightVector};
use lgc_core::seed::derive_rng;
use lgc_core::testkit::{finite_difference_gradient, max_relative_error, random_mlp_case};
use lgc_core::ActivationKind;

#[test]
fn analytic_gradient_matches_finite_differences_on_random_networks() {
    let activations = [
        ActivationKind::Tanh,
        ActivationKind::Relu,
        ActivationKind::Elu,
    ];
    let mut checked = 0;
    for (i, &hidden) in activations.iter().cycle().take(100).enumerate() {
        let mut rng = derive_rng(0xC0FFEE, i as u64, 0);
        let (spec, w, batch) = random_mlp_case::<f64>(&mut rng, hidden);
        assert!(spec.param_count() <= 50);

        let analytic = mlp::gradient(&spec, &w, &batch).unwrap();
        let numeric = finite_difference_gradient(
            |probe| {
                let pass = mlp::forward(&spec, &WeightVector(probe.to_vec()), &batch).unwrap();
                mlp::cross_entropy(&pass.outputs, &batch.targets).unwrap()
            },
            w.as_slice(),
            1e-6,
        );

        let err = max_relative_error(&analytic, &numeric, 1e-8);
        assert!(
            err < 1e-5,
            "case {i} ({:?} {}-{}-{}): max relative error {err:e}",
            hidden,
            spec.n_input,
            spec.n_hidden,
            spec.n_output
        );
        checked += 1;
    }
    assert_eq!(checked, 100);
}

#[test]
fn gradient_matches_finite_differences_in_f32_at_loose_tolerance() {
    // The generic core must stay correct in f32; tolerance follows the
    // scalar's precision.
    let mut rng = derive_rng(0xF32, 0, 0);
    let (spec, w, batch) = random_mlp_case::<f32>(&mut rng, ActivationKind::Tanh);
    let analytic = mlp::gradient(&spec, &w, &batch).unwrap();
    let numeric = finite_difference_gradient(
        |probe| {
            let pass = mlp::forward(&spec, &WeightVector(probe.to_vec()), &batch).unwrap();
            mlp::cross_entropy(&pass.outputs, &batch.targets).unwrap()
        },
        w.as_slice(),
        1e-3,
    );
    let err = max_relative_error(&analytic, &numeric, 1e-4);
    assert!(err < 1e-2, "f32 max relative error {err:e}");
}
