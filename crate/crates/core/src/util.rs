//! Dense cost hypercubes for UTIL propagation.
//!
//! A [`UtilTable`] holds one cost cell per joint value of an ordered list of
//! variables. During the bottom-up phase each node joins the tables of its
//! children with its own constraints, then projects its variable out by
//! minimisation; the projected table, dimensioned over the node's
//! separator, is what travels to the parent. The chosen value per separator
//! cell stays behind as `argmin_hint` and is never transmitted.

use crate::compiled::CompiledConstraint;
use crate::cost::Cost;

/// A cost table over `dims`, stored row-major with the first dimension most
/// significant. Dimensions are variable indices in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilTable {
    dims: Vec<usize>,
    sizes: Vec<usize>,
    strides: Vec<usize>,
    cells: Vec<Cost>,
    argmin_hint: Vec<usize>,
}

impl UtilTable {
    pub(crate) fn zeros(dims: Vec<usize>, sizes: Vec<usize>) -> UtilTable {
        debug_assert!(dims.windows(2).all(|w| w[0] < w[1]), "dims must be ascending");
        let strides = strides_of(&sizes);
        let cells = vec![Cost::ZERO; sizes.iter().product::<usize>().max(1)];
        UtilTable {
            dims,
            sizes,
            strides,
            cells,
            argmin_hint: Vec::new(),
        }
    }

    /// Variable indices this table is dimensioned over.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn cells(&self) -> &[Cost] {
        &self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// For a table produced by [`project_min`](UtilTable::project_min): the
    /// value index the projected variable takes in each cell's minimum.
    pub fn argmin_hint(&self) -> &[usize] {
        &self.argmin_hint
    }

    /// Writes this cell's per-dimension value indices into `values`, a
    /// vector indexed by variable.
    fn decode(&self, cell: usize, values: &mut [usize]) {
        let mut rest = cell;
        for (k, &var) in self.dims.iter().enumerate() {
            values[var] = rest / self.strides[k];
            rest %= self.strides[k];
        }
    }

    fn cell_of(&self, values: &[usize]) -> usize {
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(&var, &stride)| values[var] * stride)
            .sum()
    }

    /// Adds a constraint pointwise. The constraint's scope must be a subset
    /// of this table's dimensions. Bumps `evals` once per cell.
    pub(crate) fn add_constraint(
        &mut self,
        constraint: &CompiledConstraint,
        scratch: &mut [usize],
        evals: &mut u64,
    ) {
        for cell in 0..self.cells.len() {
            self.decode(cell, scratch);
            self.cells[cell] += constraint.eval(scratch);
            *evals += 1;
        }
    }

    /// Adds another table pointwise. Its dimensions must be a subset of
    /// this table's.
    pub(crate) fn add_table(&mut self, other: &UtilTable, scratch: &mut [usize]) {
        debug_assert!(other.dims.iter().all(|d| self.dims.contains(d)));
        for cell in 0..self.cells.len() {
            self.decode(cell, scratch);
            self.cells[cell] += other.cells[other.cell_of(scratch)];
        }
    }

    /// Minimises over one dimension. Returns the projected table with its
    /// `argmin_hint` filled; ties pick the lowest value index, so domain
    /// declaration order breaks them.
    pub(crate) fn project_min(&self, var: usize, scratch: &mut [usize]) -> UtilTable {
        let pos = self
            .dims
            .iter()
            .position(|&d| d == var)
            .expect("projected variable must be a dimension");
        let mut out_dims = self.dims.clone();
        let mut out_sizes = self.sizes.clone();
        out_dims.remove(pos);
        out_sizes.remove(pos);

        let mut out = UtilTable::zeros(out_dims, out_sizes);
        let mut hint = Vec::with_capacity(out.cells.len());
        let var_stride = self.strides[pos];

        for out_cell in 0..out.cells.len() {
            out.decode(out_cell, scratch);
            scratch[var] = 0;
            let base = self.cell_of(scratch);
            let mut best = self.cells[base];
            let mut best_value = 0;
            for value in 1..self.sizes[pos] {
                let candidate = self.cells[base + value * var_stride];
                if candidate < best {
                    best = candidate;
                    best_value = value;
                }
            }
            out.cells[out_cell] = best;
            hint.push(best_value);
        }
        out.argmin_hint = hint;
        out
    }

    /// Cell index for a separator assignment, used to read `argmin_hint`.
    pub(crate) fn hint_index(&self, values: &[usize]) -> usize {
        self.cell_of(values)
    }
}

fn strides_of(sizes: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    strides
}
