//! Seeded generators for structured random instances and coordination
//! specs. Everything draws from a caller-supplied generator, so the same
//! seed reproduces the same problem.

use std::ops::RangeInclusive;

use rand::Rng;

use crate::coord::{CoordinationSpec, LocalConcern, SharedConcern, StrategySet};
use crate::cost::Cost;
use crate::dcop::{CostFunction, DcopInstance, TableEntry, Variable};

/// Constraint-graph family to draw from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphShape {
    /// A forest: mostly one tree, occasionally detached components.
    Acyclic,
    /// A connected graph with exactly one cycle.
    SingleCycle,
}

/// Knobs for [`random_instance`].
#[derive(Clone, Debug)]
pub struct RandomInstanceConfig {
    pub variables: RangeInclusive<usize>,
    pub domain_size: RangeInclusive<usize>,
    pub shape: GraphShape,
    /// Finite costs are integers in `0..=max_cost`.
    pub max_cost: u32,
    /// Chance that any given listed tuple costs infinity instead.
    pub infinity_probability: f64,
}

impl Default for RandomInstanceConfig {
    fn default() -> Self {
        RandomInstanceConfig {
            variables: 2..=6,
            domain_size: 2..=4,
            shape: GraphShape::Acyclic,
            max_cost: 20,
            infinity_probability: 0.08,
        }
    }
}

/// Draws a valid instance: one agent per variable, a unary table on some
/// variables, one binary table per graph edge. Tables either enumerate
/// every tuple or list a random subset over a default. A single-cycle draw
/// uses at least three variables regardless of the configured lower bound.
pub fn random_instance<R: Rng + ?Sized>(config: &RandomInstanceConfig, rng: &mut R) -> DcopInstance {
    let min_n = match config.shape {
        GraphShape::Acyclic => *config.variables.start(),
        GraphShape::SingleCycle => (*config.variables.start()).max(3),
    };
    let n = rng.random_range(min_n..=(*config.variables.end()).max(min_n));

    let agents: Vec<String> = (0..n).map(|i| format!("agent{i}")).collect();
    let variables: Vec<Variable> = (0..n)
        .map(|i| {
            let size = rng.random_range(config.domain_size.clone());
            Variable {
                id: format!("x{i}"),
                domain: (0..size).map(|k| format!("s{k}")).collect(),
                owner: agents[i].clone(),
            }
        })
        .collect();

    let mut edges: Vec<(usize, usize)> = Vec::new();
    match config.shape {
        GraphShape::Acyclic => {
            for i in 1..n {
                // An occasional skip starts a fresh component.
                if rng.random_bool(0.85) {
                    edges.push((rng.random_range(0..i), i));
                }
            }
        }
        GraphShape::SingleCycle => {
            for i in 1..n {
                edges.push((rng.random_range(0..i), i));
            }
            loop {
                let u = rng.random_range(0..n);
                let w = rng.random_range(0..n);
                let (u, w) = (u.min(w), u.max(w));
                if u != w && !edges.contains(&(u, w)) {
                    edges.push((u, w));
                    break;
                }
            }
        }
    }

    let mut constraints = Vec::new();
    for i in 0..n {
        if rng.random_bool(0.7) {
            let scope = vec![variables[i].id.clone()];
            constraints.push(random_table(
                format!("c{}", constraints.len()),
                scope,
                &[variables[i].domain.clone()],
                config.max_cost,
                config.infinity_probability,
                rng,
            ));
        }
    }
    for &(u, w) in &edges {
        let scope = vec![variables[u].id.clone(), variables[w].id.clone()];
        constraints.push(random_table(
            format!("c{}", constraints.len()),
            scope,
            &[variables[u].domain.clone(), variables[w].domain.clone()],
            config.max_cost,
            config.infinity_probability,
            rng,
        ));
    }

    DcopInstance {
        agents,
        variables,
        constraints,
    }
}

fn random_cost<R: Rng + ?Sized>(max_cost: u32, infinity_probability: f64, rng: &mut R) -> Cost {
    if rng.random_bool(infinity_probability) {
        Cost::INFINITY
    } else {
        Cost::new(f64::from(rng.random_range(0..=max_cost))).expect("integer costs are valid")
    }
}

fn random_table<R: Rng + ?Sized>(
    id: String,
    scope: Vec<String>,
    domains: &[Vec<String>],
    max_cost: u32,
    infinity_probability: f64,
    rng: &mut R,
) -> CostFunction {
    let full = rng.random_bool(0.5);
    let default = if full {
        None
    } else {
        Some(random_cost(max_cost, infinity_probability, rng))
    };

    let mut entries = Vec::new();
    let mut counters = vec![0usize; domains.len()];
    'tuples: loop {
        if full || rng.random_bool(0.5) {
            entries.push(TableEntry {
                values: counters
                    .iter()
                    .zip(domains)
                    .map(|(&k, d)| d[k].clone())
                    .collect(),
                cost: random_cost(max_cost, infinity_probability, rng),
            });
        }
        let mut i = domains.len();
        loop {
            if i == 0 {
                break 'tuples;
            }
            i -= 1;
            counters[i] += 1;
            if counters[i] < domains[i].len() {
                break;
            }
            counters[i] = 0;
        }
    }

    CostFunction {
        id,
        scope,
        entries,
        default,
    }
}

/// Knobs for [`random_spec`].
#[derive(Clone, Debug)]
pub struct RandomSpecConfig {
    pub subsystems: RangeInclusive<usize>,
    pub strategies: RangeInclusive<usize>,
    pub shared_concerns: RangeInclusive<usize>,
    pub max_cost: u32,
    pub infinity_probability: f64,
}

impl Default for RandomSpecConfig {
    fn default() -> Self {
        RandomSpecConfig {
            subsystems: 2..=4,
            strategies: 2..=4,
            shared_concerns: 1..=3,
            max_cost: 20,
            infinity_probability: 0.08,
        }
    }
}

/// Draws a valid coordination spec: most subsystems carry a local concern,
/// and each shared concern spans a random pair or larger subset. The
/// default bounds keep the joint strategy space at no more than 256.
pub fn random_spec<R: Rng + ?Sized>(config: &RandomSpecConfig, rng: &mut R) -> CoordinationSpec {
    let k = rng.random_range(config.subsystems.clone());
    let sas: Vec<StrategySet> = (0..k)
        .map(|i| {
            let m = rng.random_range(config.strategies.clone());
            StrategySet {
                id: format!("S{i}"),
                strategies: (0..m).map(|j| format!("opt{j}")).collect(),
            }
        })
        .collect();

    let mut local_concerns = Vec::new();
    for set in &sas {
        if rng.random_bool(0.8) {
            local_concerns.push(LocalConcern {
                sas: set.id.clone(),
                costs: set
                    .strategies
                    .iter()
                    .map(|s| {
                        (
                            s.clone(),
                            Cost::new(f64::from(rng.random_range(0..=config.max_cost)))
                                .expect("integer costs are valid"),
                        )
                    })
                    .collect(),
            });
        }
    }

    let concern_count = rng.random_range(config.shared_concerns.clone());
    let mut shared_concerns = Vec::new();
    for _ in 0..concern_count {
        let arity = rng.random_range(2..=k.min(3));
        let mut members: Vec<usize> = (0..k).collect();
        for i in 0..arity {
            let j = rng.random_range(i..k);
            members.swap(i, j);
        }
        let scope_idx = &members[..arity];
        let scope: Vec<String> = scope_idx.iter().map(|&i| sas[i].id.clone()).collect();
        let domains: Vec<Vec<String>> = scope_idx.iter().map(|&i| sas[i].strategies.clone()).collect();
        let f = random_table(
            String::new(),
            scope,
            &domains,
            config.max_cost,
            config.infinity_probability,
            rng,
        );
        shared_concerns.push(SharedConcern {
            scope: f.scope,
            entries: f.entries,
            default: f.default,
        });
    }

    CoordinationSpec {
        sas,
        local_concerns,
        shared_concerns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::coord::validate_spec;
    use crate::dcop::{constraint_graph, validate_instance};

    #[test]
    fn instances_reproduce_from_the_seed() {
        let config = RandomInstanceConfig::default();
        let a = random_instance(&config, &mut ChaCha8Rng::seed_from_u64(5));
        let b = random_instance(&config, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[test]
    fn acyclic_draws_are_valid_forests() {
        let config = RandomInstanceConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let inst = random_instance(&config, &mut rng);
            let report = validate_instance(&inst);
            assert!(report.is_valid(), "defects: {:?}", report.violations);
            assert_eq!(constraint_graph(&inst).cycle_count, 0);
        }
    }

    #[test]
    fn single_cycle_draws_close_exactly_one_loop() {
        let config = RandomInstanceConfig {
            shape: GraphShape::SingleCycle,
            ..RandomInstanceConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let inst = random_instance(&config, &mut rng);
            let report = validate_instance(&inst);
            assert!(report.is_valid(), "defects: {:?}", report.violations);
            let graph = constraint_graph(&inst);
            assert_eq!(graph.cycle_count, 1);
            assert_eq!(graph.components, 1);
            assert!(inst.variables.len() >= 3);
        }
    }

    #[test]
    fn specs_are_valid_and_bounded() {
        let config = RandomSpecConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let spec = random_spec(&config, &mut rng);
            let report = validate_spec(&spec);
            assert!(report.is_valid(), "defects: {:?}", report.violations);
            let joint: usize = spec.sas.iter().map(|s| s.strategies.len()).product();
            assert!(joint <= 256);
        }
    }
}
