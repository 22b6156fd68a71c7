//! Concern model for the job-dispatch scenario.
//!
//! Each application weighs three pressures when picking an estimator
//! strategy: the computational cost of running the estimator (`energy`), its
//! tendency to let jobs queue up (`delay`), and its tendency to let jobs miss
//! deadlines (`lateness`). The infrastructure weighs the same three pressures
//! over its powering strategies. An application's private concern sums its
//! three components; each application additionally shares a concern with the
//! infrastructure whose cost is the application's component sum plus the
//! infrastructure's, so the shared tables are separable by construction.

use std::collections::BTreeMap;

use coadapt_core::{
    ConcernUpdate, CoordinationSpec, Cost, LocalConcern, SharedConcern, StrategySet, TableEntry,
};
use rand::Rng;

use crate::estimator::AppStrategy;
use crate::sim::InfraStrategy;

/// Subsystem id of the infrastructure.
pub const INFRA_ID: &str = "I";

/// `[energy, delay, lateness]` components of an application strategy.
pub fn app_components(strategy: AppStrategy) -> [f64; 3] {
    match strategy {
        AppStrategy::Steady => [2.0, 9.0, 8.0],
        AppStrategy::Average => [4.0, 6.0, 5.0],
        AppStrategy::Neural => [8.0, 4.0, 4.0],
    }
}

/// `[energy, delay, lateness]` components of an infrastructure strategy.
pub fn infra_components(strategy: InfraStrategy) -> [f64; 3] {
    match strategy {
        InfraStrategy::Elastic => [4.0, 10.0, 8.0],
        InfraStrategy::Provisioned => [16.0, 2.0, 3.0],
    }
}

/// Sum of an application strategy's components.
pub fn app_concern_total(strategy: AppStrategy) -> f64 {
    app_components(strategy).iter().sum()
}

/// Sum of an infrastructure strategy's components.
pub fn infra_concern_total(strategy: InfraStrategy) -> f64 {
    infra_components(strategy).iter().sum()
}

/// Builds the coordination spec for `n_apps` applications (`A1..An`) and one
/// infrastructure subsystem `I`. Every application carries a private concern
/// over its own strategies and a shared concern with the infrastructure; the
/// infrastructure has no private concern of its own.
pub fn build_simdex_concerns(n_apps: usize) -> CoordinationSpec {
    let app_labels: Vec<&str> = AppStrategy::ALL.iter().map(|s| s.label()).collect();
    let infra_labels: Vec<&str> = InfraStrategy::ALL.iter().map(|s| s.label()).collect();

    let mut sas = Vec::with_capacity(n_apps + 1);
    let mut local_concerns = Vec::with_capacity(n_apps);
    let mut shared_concerns = Vec::with_capacity(n_apps);
    for i in 1..=n_apps {
        let id = format!("A{i}");
        sas.push(StrategySet {
            id: id.clone(),
            strategies: app_labels.iter().map(|s| s.to_string()).collect(),
        });
        let costs: BTreeMap<String, Cost> = AppStrategy::ALL
            .iter()
            .map(|&s| {
                (
                    s.label().to_string(),
                    Cost::new(app_concern_total(s)).expect("component sums are valid costs"),
                )
            })
            .collect();
        local_concerns.push(LocalConcern {
            sas: id.clone(),
            costs,
        });
        let mut entries = Vec::with_capacity(app_labels.len() * infra_labels.len());
        for &a in &AppStrategy::ALL {
            for &t in &InfraStrategy::ALL {
                entries.push(TableEntry {
                    values: vec![a.label().to_string(), t.label().to_string()],
                    cost: Cost::new(app_concern_total(a) + infra_concern_total(t))
                        .expect("component sums are valid costs"),
                });
            }
        }
        shared_concerns.push(SharedConcern {
            scope: vec![id, INFRA_ID.to_string()],
            entries,
            default: None,
        });
    }
    sas.push(StrategySet {
        id: INFRA_ID.to_string(),
        strategies: infra_labels.iter().map(|s| s.to_string()).collect(),
    });

    CoordinationSpec {
        sas,
        local_concerns,
        shared_concerns,
    }
}

/// Draws a concern drift that respects the separable structure of specs from
/// [`build_simdex_concerns`]: one noise term per component, so a strategy's
/// perturbation is the sum of three uniform draws from
/// `[-magnitude, magnitude]`, applied identically to the private concern and
/// to the matching rows of the shared tables. Infrastructure strategies are
/// perturbed the same way, once, and the shared delta for a tuple is the sum
/// of the two sides' perturbations.
pub fn simdex_drift<R: Rng + ?Sized>(
    spec: &CoordinationSpec,
    magnitude: f64,
    rng: &mut R,
) -> ConcernUpdate {
    let three = |rng: &mut R| -> f64 {
        (0..3)
            .map(|_| rng.random_range(-magnitude..=magnitude))
            .sum()
    };

    let mut local_deltas = BTreeMap::new();
    let mut app_noise: BTreeMap<(String, String), f64> = BTreeMap::new();
    for concern in &spec.local_concerns {
        let set = spec
            .strategy_set(&concern.sas)
            .expect("local concern references a declared subsystem");
        for strategy in &set.strategies {
            let noise = three(rng);
            app_noise.insert((concern.sas.clone(), strategy.clone()), noise);
            local_deltas.insert((concern.sas.clone(), strategy.clone()), noise);
        }
    }

    let mut infra_noise: BTreeMap<String, f64> = BTreeMap::new();
    if let Some(first) = spec.shared_concerns.first() {
        let infra_id = first.scope.last().expect("shared scopes are non-empty");
        let set = spec
            .strategy_set(infra_id)
            .expect("shared concern references a declared subsystem");
        for strategy in &set.strategies {
            infra_noise.insert(strategy.clone(), three(rng));
        }
    }

    let shared_deltas = spec
        .shared_concerns
        .iter()
        .map(|concern| {
            concern
                .entries
                .iter()
                .map(|entry| {
                    let app_key = (concern.scope[0].clone(), entry.values[0].clone());
                    let delta = app_noise
                        .get(&app_key)
                        .copied()
                        .unwrap_or_else(|| panic!("no app noise for {app_key:?}"))
                        + infra_noise[&entry.values[1]];
                    (entry.values.clone(), delta)
                })
                .collect()
        })
        .collect();

    ConcernUpdate {
        local_deltas,
        shared_deltas,
    }
}
