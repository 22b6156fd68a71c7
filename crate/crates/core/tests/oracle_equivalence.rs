//! Cross-checks the propagation solver against the exhaustive oracle on
//! seeded random instances, plus a few algebraic invariances that catch
//! subtle bookkeeping mistakes.

use coadapt_core::{
    evaluate_assignment, random_instance, solve_dpop, solve_exhaustive, validate_instance,
    Assignment, Cost, DcopInstance, GraphShape, RandomInstanceConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shaped(shape: GraphShape) -> RandomInstanceConfig {
    RandomInstanceConfig {
        shape,
        ..RandomInstanceConfig::default()
    }
}

fn shape_for(seed: u64) -> GraphShape {
    if seed % 2 == 0 {
        GraphShape::Acyclic
    } else {
        GraphShape::SingleCycle
    }
}

/// Walks every complete assignment in declaration order.
fn all_assignments(instance: &DcopInstance) -> Vec<Assignment> {
    let mut out = Vec::new();
    let sizes: Vec<usize> = instance.variables.iter().map(|v| v.domain.len()).collect();
    let mut counters = vec![0usize; sizes.len()];
    loop {
        out.push(
            instance
                .variables
                .iter()
                .zip(&counters)
                .map(|(v, &k)| (v.id.clone(), v.domain[k].clone()))
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

fn optimum_is_unique(instance: &DcopInstance, best: Cost) -> bool {
    all_assignments(instance)
        .iter()
        .filter(|a| evaluate_assignment(instance, a).unwrap() == best)
        .count()
        == 1
}

#[test]
fn propagation_matches_the_oracle_across_shapes() {
    for seed in 0..200u64 {
        let config = shaped(shape_for(seed));
        let instance = random_instance(&config, &mut ChaCha8Rng::seed_from_u64(seed));
        assert!(validate_instance(&instance).is_valid(), "seed {seed}");

        let oracle = solve_exhaustive(&instance).unwrap();
        let (solution, _) = solve_dpop(&instance);

        assert_eq!(solution.cost, oracle.cost, "seed {seed}");
        assert_eq!(
            evaluate_assignment(&instance, &solution.assignment).unwrap(),
            solution.cost,
            "seed {seed}: reported cost must price the reported assignment"
        );
        if optimum_is_unique(&instance, oracle.cost) {
            assert_eq!(solution.assignment, oracle.assignment, "seed {seed}");
        }
    }
}

#[test]
fn shifting_one_table_shifts_the_optimum_by_the_same_amount() {
    let shift = 7.0;
    for seed in 300..330u64 {
        let config = shaped(shape_for(seed));
        let instance = random_instance(&config, &mut ChaCha8Rng::seed_from_u64(seed));
        if instance.constraints.is_empty() {
            continue;
        }
        let before = solve_exhaustive(&instance).unwrap();
        if before.cost.is_infinite() || !optimum_is_unique(&instance, before.cost) {
            continue;
        }

        let mut shifted = instance.clone();
        let f = &mut shifted.constraints[0];
        for entry in &mut f.entries {
            if entry.cost.is_finite() {
                entry.cost = Cost::new(entry.cost.value() + shift).unwrap();
            }
        }
        if let Some(d) = f.default {
            if d.is_finite() {
                f.default = Some(Cost::new(d.value() + shift).unwrap());
            }
        }

        let (after, _) = solve_dpop(&shifted);
        assert_eq!(after.assignment, before.assignment, "seed {seed}");
        assert_eq!(after.cost.value(), before.cost.value() + shift, "seed {seed}");
    }
}

#[test]
fn doubling_every_cost_doubles_the_optimum() {
    for seed in 400..430u64 {
        let config = shaped(shape_for(seed));
        let instance = random_instance(&config, &mut ChaCha8Rng::seed_from_u64(seed));
        let before = solve_exhaustive(&instance).unwrap();
        if !optimum_is_unique(&instance, before.cost) {
            continue;
        }

        let mut scaled = instance.clone();
        for f in &mut scaled.constraints {
            for entry in &mut f.entries {
                entry.cost = Cost::new(entry.cost.value() * 2.0).unwrap();
            }
            f.default = f.default.map(|d| Cost::new(d.value() * 2.0).unwrap());
        }

        let (after, _) = solve_dpop(&scaled);
        assert_eq!(after.assignment, before.assignment, "seed {seed}");
        assert_eq!(after.cost.value(), before.cost.value() * 2.0, "seed {seed}");
    }
}

#[test]
fn reversing_constraint_declaration_order_keeps_the_optimum() {
    for seed in 500..540u64 {
        let config = shaped(shape_for(seed));
        let instance = random_instance(&config, &mut ChaCha8Rng::seed_from_u64(seed));
        let before = solve_exhaustive(&instance).unwrap();
        if !optimum_is_unique(&instance, before.cost) {
            continue;
        }

        let mut reversed = instance.clone();
        reversed.constraints.reverse();
        let (after, _) = solve_dpop(&reversed);
        assert_eq!(after.assignment, before.assignment, "seed {seed}");
        assert_eq!(after.cost, before.cost, "seed {seed}");
    }
}
