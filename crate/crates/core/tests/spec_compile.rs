//! Faithfulness of the coordination-to-constraint compiler: pricing a
//! joint choice through the spec or through the compiled instance is the
//! same computation, and stays so after concern updates.

use coadapt_core::{
    apply_update, compile_to_dcop, evaluate_assignment, random_spec, rho, run_coordination_round,
    solve_exhaustive, validate_instance, validate_spec, Algorithm, ConcernUpdate,
    CoordinationSpec, StrategyAssignment,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn all_choices(spec: &CoordinationSpec) -> Vec<StrategyAssignment> {
    let mut out = Vec::new();
    let sizes: Vec<usize> = spec.sas.iter().map(|s| s.strategies.len()).collect();
    let mut counters = vec![0usize; sizes.len()];
    loop {
        out.push(
            spec.sas
                .iter()
                .zip(&counters)
                .map(|(s, &k)| (s.id.clone(), s.strategies[k].clone()))
                .collect(),
        );
        let mut i = sizes.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            counters[i] += 1;
            if counters[i] < sizes[i] {
                break;
            }
            counters[i] = 0;
        }
    }
}

#[test]
fn compilation_is_faithful_on_every_joint_choice() {
    let config = Default::default();
    for seed in 0..120u64 {
        let spec = random_spec(&config, &mut ChaCha8Rng::seed_from_u64(seed));
        assert!(validate_spec(&spec).is_valid(), "seed {seed}");

        let instance = compile_to_dcop(&spec);
        let report = validate_instance(&instance);
        assert!(report.is_valid(), "seed {seed}: {:?}", report.violations);

        for joint in all_choices(&spec) {
            assert_eq!(
                rho(&spec, &joint).unwrap(),
                evaluate_assignment(&instance, &joint).unwrap(),
                "seed {seed}: disagreement at {joint:?}"
            );
        }
    }
}

#[test]
fn solving_the_compilation_minimises_the_spec_objective() {
    let config = Default::default();
    for seed in 200..260u64 {
        let spec = random_spec(&config, &mut ChaCha8Rng::seed_from_u64(seed));
        let best_by_hand = all_choices(&spec)
            .into_iter()
            .map(|joint| rho(&spec, &joint).unwrap())
            .min()
            .unwrap();

        let dpop = run_coordination_round(&spec, Algorithm::Dpop).unwrap();
        let exhaustive = run_coordination_round(&spec, Algorithm::Exhaustive).unwrap();
        assert_eq!(dpop.cost, best_by_hand, "seed {seed}");
        assert_eq!(exhaustive.cost, best_by_hand, "seed {seed}");
        assert_eq!(rho(&spec, &dpop.assignment).unwrap(), dpop.cost, "seed {seed}");
    }
}

#[test]
fn updates_preserve_validity_and_faithfulness() {
    let config = Default::default();
    for seed in 300..360u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spec(&config, &mut rng);
        let update = ConcernUpdate::uniform(&spec, 4.0, &mut rng);
        let drifted = apply_update(&spec, &update).unwrap();

        assert!(validate_spec(&drifted).is_valid(), "seed {seed}");
        let instance = compile_to_dcop(&drifted);
        for joint in all_choices(&drifted) {
            assert_eq!(
                rho(&drifted, &joint).unwrap(),
                evaluate_assignment(&instance, &joint).unwrap(),
                "seed {seed}"
            );
        }
        // Drift never manufactures or destroys feasibility.
        let before = solve_exhaustive(&compile_to_dcop(&spec)).unwrap();
        let after = solve_exhaustive(&instance).unwrap();
        assert_eq!(
            before.cost.is_infinite(),
            after.cost.is_infinite(),
            "seed {seed}"
        );
    }
}

#[test]
fn identity_update_is_a_noop_even_after_drift() {
    let config = Default::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let spec = random_spec(&config, &mut rng);
    let drifted = apply_update(&spec, &ConcernUpdate::uniform(&spec, 2.0, &mut rng)).unwrap();
    let again = apply_update(&drifted, &ConcernUpdate::default()).unwrap();
    assert_eq!(again, drifted);
}
