mod support;

use mshidden::tensor::GradCheck;

const TOL: f32 = 1e-3;

fn assert_passes(what: &str, seed: u64, r: GradCheck) {
    assert!(r.max_error < TOL, "{what} seed {seed}: relative error {}", r.max_error);
    // Kink-straddling probes are skipped; they must stay rare or the check
    // says little. Allow at most one in ten.
    assert!(
        r.skipped * 9 <= r.checked,
        "{what} seed {seed}: {} of {} probes skipped",
        r.skipped,
        r.checked + r.skipped
    );
}

#[test]
fn every_op_passes_finite_differences() {
    for seed in 1..=5 {
        for (name, r) in support::op_gradient_errors(seed).unwrap() {
            assert_passes(name, seed, r);
        }
    }
}

#[test]
fn full_objective_passes_finite_differences() {
    for seed in 1..=5 {
        let (e, d) = support::objective_gradient_errors(seed).unwrap();
        assert_passes("E", seed, e);
        assert_passes("L_D", seed, d);
    }
}
