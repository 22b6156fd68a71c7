//! Exhaustive reference solver.
//!
//! Walks the full Cartesian product of the domains and keeps the best
//! complete assignment. Costly, but trustworthy on small instances: the
//! distributed solver is required to agree with it, never the other way
//! around. Enumeration follows variable declaration order with domain
//! declaration order nested innermost, and only a strictly better cost
//! replaces the incumbent, so ties resolve to the lexicographically first
//! assignment.

use serde::Serialize;
use thiserror::Error;

use crate::compiled::Compiled;
use crate::cost::Cost;
use crate::dcop::{Assignment, DcopInstance};

/// Upper bound on the number of assignments [`solve_exhaustive`] will walk.
pub const DEFAULT_SEARCH_CAP: u64 = 10_000_000;

/// The outcome of a solve: a complete assignment and its total cost. An
/// infinite cost means every assignment was forbidden; the reported
/// assignment is then merely the lexicographically first one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Solution {
    pub assignment: Assignment,
    pub cost: Cost,
}

impl Solution {
    pub fn is_infeasible(&self) -> bool {
        self.cost.is_infinite()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("search space holds {size} assignments, more than the cap of {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u64 },
}

/// Minimises by full enumeration with the default cap.
pub fn solve_exhaustive(instance: &DcopInstance) -> Result<Solution, ExactError> {
    solve_exhaustive_with_cap(instance, DEFAULT_SEARCH_CAP)
}

/// Minimises by full enumeration, refusing search spaces larger than `cap`.
/// The instance must pass validation.
pub fn solve_exhaustive_with_cap(instance: &DcopInstance, cap: u64) -> Result<Solution, ExactError> {
    let compiled = Compiled::new(instance);
    let sizes = compiled.domain_sizes();

    let space: u128 = sizes.iter().map(|&s| s as u128).product();
    if space > cap as u128 {
        return Err(ExactError::SearchSpaceTooLarge { size: space, cap });
    }

    let n = sizes.len();
    let mut values = vec![0usize; n];
    let mut best_values = values.clone();
    let mut best_cost = cost_at(&compiled, &values);

    loop {
        // Advance the odometer; the last variable spins fastest.
        let mut pos = n;
        loop {
            if pos == 0 {
                let assignment = compiled
                    .ids
                    .iter()
                    .enumerate()
                    .map(|(i, id)| (id.clone(), compiled.domains[i][best_values[i]].clone()))
                    .collect();
                return Ok(Solution {
                    assignment,
                    cost: best_cost,
                });
            }
            pos -= 1;
            values[pos] += 1;
            if values[pos] < sizes[pos] {
                break;
            }
            values[pos] = 0;
        }

        let cost = cost_at(&compiled, &values);
        if cost < best_cost {
            best_cost = cost;
            best_values.copy_from_slice(&values);
        }
    }
}

fn cost_at(compiled: &Compiled, values: &[usize]) -> Cost {
    compiled.constraints.iter().map(|c| c.eval(values)).sum()
}
