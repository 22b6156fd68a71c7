//! Scaling measurement for the distributed solver on star topologies.
//!
//! The measured family mirrors the job-dispatch compilation: `n` application
//! variables, one hub variable, a private cost table per application, and a
//! pairwise table between each application and the hub. The driver sweeps
//! the number of applications and the domain size and records the solver's
//! message count, shipped table cells, and constraint evaluations for each
//! point of the grid.

use std::fmt::Write as _;

use coadapt_core::{solve_dpop, Cost, CostFunction, DcopInstance, TableEntry, Variable};

/// Header of the scaling CSV.
pub const RQ2_HEADER: &str = "n_apps,domain_size,messages,payload_cells,constraint_evals,wall_ms";

/// Grid swept by [`run_rq2`].
#[derive(Debug, Clone)]
pub struct Rq2Config {
    pub apps: Vec<usize>,
    pub domains: Vec<usize>,
}

impl Default for Rq2Config {
    fn default() -> Self {
        Rq2Config {
            apps: vec![2, 5, 10, 20, 50],
            domains: vec![2, 3, 4, 5, 8],
        }
    }
}

/// One grid point. `payload_cells` counts the cells of the shipped cost
/// tables; the bindings sent while strategies propagate back down are not
/// included.
#[derive(Debug, Clone, PartialEq)]
pub struct Rq2Row {
    pub n_apps: usize,
    pub domain_size: usize,
    pub messages: u64,
    pub payload_cells: u64,
    pub constraint_evals: u64,
    pub wall_ms: f64,
}

/// Builds the star-shaped instance for one grid point: variables `A1..An`
/// around a hub `I`, all with `domain_size` values, a unary table per
/// application, and a pairwise table linking each application to the hub.
/// Costs follow a fixed small-integer pattern; the solver's work counts do
/// not depend on them.
pub fn star_instance(n_apps: usize, domain_size: usize) -> DcopInstance {
    let app_domain: Vec<String> = (0..domain_size).map(|v| format!("s{v}")).collect();
    let hub_domain: Vec<String> = (0..domain_size).map(|v| format!("t{v}")).collect();

    let mut agents = Vec::with_capacity(n_apps + 1);
    let mut variables = Vec::with_capacity(n_apps + 1);
    let mut constraints = Vec::with_capacity(2 * n_apps);
    for i in 1..=n_apps {
        let id = format!("A{i}");
        agents.push(id.clone());
        variables.push(Variable {
            id: id.clone(),
            domain: app_domain.clone(),
            owner: id.clone(),
        });
        let unary = (0..domain_size)
            .map(|v| TableEntry {
                values: vec![app_domain[v].clone()],
                cost: Cost::new(((i * 7 + v * 3) % 11) as f64).expect("small integer cost"),
            })
            .collect();
        constraints.push(CostFunction {
            id: format!("pref_A{i}"),
            scope: vec![id.clone()],
            entries: unary,
            default: None,
        });
        let mut pair = Vec::with_capacity(domain_size * domain_size);
        for v in 0..domain_size {
            for w in 0..domain_size {
                pair.push(TableEntry {
                    values: vec![app_domain[v].clone(), hub_domain[w].clone()],
                    cost: Cost::new(((i + 2 * v + 5 * w) % 13) as f64)
                        .expect("small integer cost"),
                });
            }
        }
        constraints.push(CostFunction {
            id: format!("shared_{}", i - 1),
            scope: vec![id, "I".to_string()],
            entries: pair,
            default: None,
        });
    }
    agents.push("I".to_string());
    variables.push(Variable {
        id: "I".to_string(),
        domain: hub_domain,
        owner: "I".to_string(),
    });

    DcopInstance {
        agents,
        variables,
        constraints,
    }
}

/// Solves every grid point and reports the solver's work counters.
pub fn run_rq2(config: &Rq2Config) -> Vec<Rq2Row> {
    let mut rows = Vec::with_capacity(config.apps.len() * config.domains.len());
    for &n_apps in &config.apps {
        for &domain_size in &config.domains {
            let instance = star_instance(n_apps, domain_size);
            let (_, stats) = solve_dpop(&instance);
            rows.push(Rq2Row {
                n_apps,
                domain_size,
                messages: stats.message_count,
                payload_cells: stats.util_cells,
                constraint_evals: stats.constraint_evaluations,
                wall_ms: stats.wall_time.as_secs_f64() * 1e3,
            });
        }
    }
    rows
}

/// Serialises rows under [`RQ2_HEADER`].
pub fn render_rq2_csv(rows: &[Rq2Row]) -> String {
    let mut out = String::from(RQ2_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.3}",
            r.n_apps, r.domain_size, r.messages, r.payload_cells, r.constraint_evals, r.wall_ms
        )
        .expect("writing to a String cannot fail");
    }
    out
}
