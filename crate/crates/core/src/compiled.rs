//! Index-based view of an instance used by the solvers.
//!
//! Variables become dense indices, domain values become value indices, and
//! cost tables become flat row-major arrays, so the hot paths never touch a
//! string. Construction assumes the instance already validated clean.

use std::collections::HashMap;

use crate::cost::Cost;
use crate::dcop::{CostFunction, DcopInstance};

pub(crate) struct CompiledConstraint {
    /// Variable indices, ordered like the source scope.
    pub scope: Vec<usize>,
    /// Row-major strides: the first scope variable is most significant.
    pub strides: Vec<usize>,
    pub table: Vec<Cost>,
}

impl CompiledConstraint {
    /// Cost at the joint value described by `values`, a per-variable value
    /// index vector covering at least every scope variable.
    pub fn eval(&self, values: &[usize]) -> Cost {
        let mut cell = 0;
        for (pos, &var) in self.scope.iter().enumerate() {
            cell += values[var] * self.strides[pos];
        }
        self.table[cell]
    }
}

/// Compiles one cost function against a global variable indexing.
pub(crate) fn compile_constraint(
    f: &CostFunction,
    var_index: &HashMap<String, usize>,
    domains: &[Vec<String>],
) -> CompiledConstraint {
    let scope: Vec<usize> = f
        .scope
        .iter()
        .map(|v| *var_index.get(v).unwrap_or_else(|| panic!("unknown variable {v}; validate first")))
        .collect();

    let sizes: Vec<usize> = scope.iter().map(|&v| domains[v].len()).collect();
    let mut strides = vec![1usize; scope.len()];
    for i in (0..scope.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    let cells: usize = sizes.iter().product();

    let mut table = vec![f.default.unwrap_or(Cost::INFINITY); cells];
    for entry in &f.entries {
        let mut cell = 0;
        for (pos, value) in entry.values.iter().enumerate() {
            let var = scope[pos];
            let value_idx = domains[var]
                .iter()
                .position(|d| d == value)
                .unwrap_or_else(|| panic!("value {value:?} not in domain; validate first"));
            cell += value_idx * strides[pos];
        }
        table[cell] = entry.cost;
    }

    CompiledConstraint {
        scope,
        strides,
        table,
    }
}

pub(crate) struct Compiled {
    pub ids: Vec<String>,
    pub domains: Vec<Vec<String>>,
    pub constraints: Vec<CompiledConstraint>,
    /// Sorted, deduplicated neighbour lists of the constraint graph.
    pub adjacency: Vec<Vec<usize>>,
}

impl Compiled {
    pub fn new(instance: &DcopInstance) -> Compiled {
        let ids: Vec<String> = instance.variables.iter().map(|v| v.id.clone()).collect();
        let domains: Vec<Vec<String>> = instance.variables.iter().map(|v| v.domain.clone()).collect();
        let var_index: HashMap<String, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();

        let constraints: Vec<CompiledConstraint> = instance
            .constraints
            .iter()
            .map(|f| compile_constraint(f, &var_index, &domains))
            .collect();

        let adjacency = adjacency_of(ids.len(), &constraints);

        Compiled {
            ids,
            domains,
            constraints,
            adjacency,
        }
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.domains.iter().map(Vec::len).collect()
    }
}

pub(crate) fn adjacency_of(n: usize, constraints: &[CompiledConstraint]) -> Vec<Vec<usize>> {
    let mut adjacency = vec![Vec::new(); n];
    for c in constraints {
        for (i, &a) in c.scope.iter().enumerate() {
            for &b in c.scope.iter().skip(i + 1) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }
    adjacency
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::video_service_instance;

    #[test]
    fn dense_tables_match_source_entries() {
        let inst = video_service_instance();
        let compiled = Compiled::new(&inst);

        let f1 = &compiled.constraints[0];
        assert_eq!(f1.eval(&[0, 0]).value(), 10.0);
        assert_eq!(f1.eval(&[1, 0]).value(), 0.0);

        let f3 = &compiled.constraints[2];
        assert_eq!(f3.eval(&[0, 0]), crate::cost::Cost::ZERO);
        assert!(f3.eval(&[0, 1]).is_infinite());
        assert!(f3.eval(&[1, 1]).is_infinite());
    }

    #[test]
    fn adjacency_is_sorted_and_deduplicated() {
        let inst = video_service_instance();
        let compiled = Compiled::new(&inst);
        assert_eq!(compiled.adjacency, vec![vec![1], vec![0]]);
    }
}
