//! Pseudo-tree construction and the dynamic-programming solver that runs
//! over it, plus the instrumentation both share with the message-passing
//! runtime.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::compiled::Compiled;
use crate::dcop::{evaluate_assignment, Assignment, ConstraintGraph, DcopInstance};
use crate::exact::Solution;
use crate::util::UtilTable;

// ---------------------------------------------------------------------------
// Pseudo-tree
// ---------------------------------------------------------------------------

/// A depth-first arrangement of the constraint graph: tree edges plus
/// back-edges to earlier ancestors (pseudo-parents). Together they cover
/// every graph edge, and variables sharing a constraint always end up on a
/// single root-to-leaf path, which is what lets UTIL propagation work
/// bottom-up.
///
/// A disconnected graph gets one tree per component; [`root`](PseudoTree::root)
/// reports the first.
#[derive(Clone, Debug)]
pub struct PseudoTree {
    ids: Vec<String>,
    roots: Vec<usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    pseudo_parents: Vec<Vec<usize>>,
    depth: Vec<usize>,
    preorder: Vec<usize>,
    separator: Vec<Vec<usize>>,
}

impl PseudoTree {
    /// Root variable of the first component.
    pub fn root(&self) -> &str {
        &self.ids[self.roots[0]]
    }

    /// Root variables, one per connected component.
    pub fn roots(&self) -> impl Iterator<Item = &str> {
        self.roots.iter().map(|&r| self.ids[r].as_str())
    }

    pub fn parent_of(&self, variable: &str) -> Option<&str> {
        let v = self.index_of(variable)?;
        self.parent[v].map(|p| self.ids[p].as_str())
    }

    pub fn children_of(&self, variable: &str) -> Vec<&str> {
        match self.index_of(variable) {
            Some(v) => self.children[v].iter().map(|&c| self.ids[c].as_str()).collect(),
            None => Vec::new(),
        }
    }

    pub fn pseudo_parents_of(&self, variable: &str) -> Vec<&str> {
        match self.index_of(variable) {
            Some(v) => self.pseudo_parents[v].iter().map(|&p| self.ids[p].as_str()).collect(),
            None => Vec::new(),
        }
    }

    /// Ancestors whose values the variable's UTIL message may range over:
    /// its parent, its pseudo-parents, and every ancestor its descendants
    /// reach through back-edges.
    pub fn separator_of(&self, variable: &str) -> Vec<&str> {
        match self.index_of(variable) {
            Some(v) => self.separator[v].iter().map(|&s| self.ids[s].as_str()).collect(),
            None => Vec::new(),
        }
    }

    /// Variables in depth-first visit order, component by component.
    pub fn dfs_order(&self) -> Vec<&str> {
        self.preorder.iter().map(|&v| self.ids[v].as_str()).collect()
    }

    pub fn depth_of(&self, variable: &str) -> Option<usize> {
        self.index_of(variable).map(|v| self.depth[v])
    }

    /// Number of tree edges; the message count of a protocol run is exactly
    /// twice this.
    pub fn tree_edge_count(&self) -> usize {
        self.ids.len() - self.roots.len()
    }

    fn index_of(&self, variable: &str) -> Option<usize> {
        self.ids.iter().position(|id| id == variable)
    }

    pub(crate) fn from_adjacency(ids: Vec<String>, adjacency: &[Vec<usize>]) -> PseudoTree {
        let n = ids.len();
        let mut roots = Vec::new();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut pseudo_parents = vec![Vec::new(); n];
        let mut depth = vec![0usize; n];
        let mut preorder = Vec::with_capacity(n);
        let mut visited = vec![false; n];

        for start in 0..n {
            if visited[start] {
                continue;
            }
            // Component sweep: collect members, then root at the highest
            // degree, breaking ties toward earlier declaration.
            let mut members = vec![start];
            let mut queue = vec![start];
            let mut seen = vec![start];
            visited[start] = true;
            while let Some(u) = queue.pop() {
                for &w in &adjacency[u] {
                    if !visited[w] {
                        visited[w] = true;
                        members.push(w);
                        queue.push(w);
                        seen.push(w);
                    }
                }
            }
            members.sort_unstable();
            let root = *members
                .iter()
                .max_by_key(|&&v| (adjacency[v].len(), std::cmp::Reverse(v)))
                .expect("component is non-empty");
            roots.push(root);

            // Depth-first walk from the root, neighbours in declaration
            // order. A visited, shallower, non-parent neighbour is an
            // ancestor reached through a back-edge: a pseudo-parent.
            for &m in &members {
                visited[m] = false;
            }
            let mut cursor = vec![0usize; n];
            let mut stack = vec![root];
            visited[root] = true;
            preorder.push(root);
            while let Some(&u) = stack.last() {
                if cursor[u] < adjacency[u].len() {
                    let w = adjacency[u][cursor[u]];
                    cursor[u] += 1;
                    if !visited[w] {
                        visited[w] = true;
                        parent[w] = Some(u);
                        depth[w] = depth[u] + 1;
                        children[u].push(w);
                        preorder.push(w);
                        stack.push(w);
                    } else if parent[u] != Some(w) && depth[w] < depth[u] {
                        pseudo_parents[u].push(w);
                    }
                } else {
                    stack.pop();
                }
            }
        }

        // Separators, children before parents.
        let mut separator: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &u in preorder.iter().rev() {
            let mut sep: Vec<usize> = pseudo_parents[u].clone();
            if let Some(p) = parent[u] {
                sep.push(p);
            }
            let child_list = children[u].clone();
            for c in child_list {
                sep.extend(separator[c].iter().copied());
            }
            sep.sort_unstable();
            sep.dedup();
            sep.retain(|&v| v != u);
            separator[u] = sep;
        }

        PseudoTree {
            ids,
            roots,
            parent,
            children,
            pseudo_parents,
            depth,
            preorder,
            separator,
        }
    }

    pub(crate) fn ids_idx(&self) -> &[String] {
        &self.ids
    }

    pub(crate) fn parent_idx(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub(crate) fn children_idx(&self) -> &[Vec<usize>] {
        &self.children
    }

    pub(crate) fn depth_idx(&self) -> &[usize] {
        &self.depth
    }

    pub(crate) fn preorder_idx(&self) -> &[usize] {
        &self.preorder
    }

    pub(crate) fn separator_idx(&self) -> &[Vec<usize>] {
        &self.separator
    }
}

/// Arranges a validated instance into a pseudo-tree. The root is the
/// highest-degree variable of each component, ties broken by declaration
/// order; the walk visits neighbours in declaration order.
pub fn build_pseudo_tree(instance: &DcopInstance) -> PseudoTree {
    let compiled = Compiled::new(instance);
    PseudoTree::from_adjacency(compiled.ids.clone(), &compiled.adjacency)
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// Instrumentation of one solve. Payload sizes count table cells and value
/// bindings, not bytes.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveStats {
    /// UTIL plus VALUE messages; twice the tree edge count.
    pub message_count: u64,
    /// Total cells across all UTIL messages.
    pub util_cells: u64,
    /// Total variable bindings across all VALUE messages.
    pub value_bindings: u64,
    /// `util_cells + value_bindings`.
    pub total_payload_cells: u64,
    /// Constraint-table lookups performed while computing UTIL tables.
    pub constraint_evaluations: u64,
    pub wall_time: Duration,
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

/// Solves by UTIL/VALUE propagation over a pseudo-tree and reports what the
/// protocol would have cost on the wire. The instance must pass validation.
///
/// The cost equals the exhaustive solver's exactly on integer tables; the
/// assignment matches whenever the optimum is unique. A disconnected
/// instance is solved per component and merged.
pub fn solve_dpop(instance: &DcopInstance) -> (Solution, SolveStats) {
    let started = Instant::now();
    let compiled = Compiled::new(instance);
    let tree = PseudoTree::from_adjacency(compiled.ids.clone(), &compiled.adjacency);

    let n = compiled.ids.len();
    let sizes = compiled.domain_sizes();

    // Each constraint is computed at its deepest scope variable; the rest
    // of the scope is guaranteed to be that variable's ancestors.
    let mut placed: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ci, c) in compiled.constraints.iter().enumerate() {
        let &deepest = c
            .scope
            .iter()
            .max_by_key(|&&v| tree.depth_idx()[v])
            .expect("scopes are non-empty");
        placed[deepest].push(ci);
    }

    let mut stats = SolveStats::default();
    let mut scratch = vec![0usize; n];
    let mut util: Vec<Option<UtilTable>> = (0..n).map(|_| None).collect();
    let mut hints: Vec<Option<UtilTable>> = (0..n).map(|_| None).collect();

    for &u in tree.preorder_idx().iter().rev() {
        let mut dims: Vec<usize> = tree.separator_idx()[u].clone();
        dims.push(u);
        dims.sort_unstable();
        let dim_sizes: Vec<usize> = dims.iter().map(|&v| sizes[v]).collect();

        let mut cube = UtilTable::zeros(dims, dim_sizes);
        for &ci in &placed[u] {
            cube.add_constraint(&compiled.constraints[ci], &mut scratch, &mut stats.constraint_evaluations);
        }
        for &c in &tree.children_idx()[u] {
            let child_table = util[c].take().expect("children computed before parents");
            cube.add_table(&child_table, &mut scratch);
        }

        let projected = cube.project_min(u, &mut scratch);
        if tree.parent_idx()[u].is_some() {
            stats.message_count += 1;
            stats.util_cells += projected.cell_count() as u64;
            util[u] = Some(projected.clone());
        }
        hints[u] = Some(projected);
    }

    // Top-down: parents announce separator values; each node reads its
    // recorded best choice.
    let mut values = vec![0usize; n];
    for &u in tree.preorder_idx() {
        let hint = hints[u].as_ref().expect("UTIL phase covered every node");
        let cell = hint.hint_index(&values);
        values[u] = hint.argmin_hint()[cell];
        if tree.parent_idx()[u].is_some() {
            stats.message_count += 1;
            stats.value_bindings += tree.separator_idx()[u].len() as u64;
        }
    }
    stats.total_payload_cells = stats.util_cells + stats.value_bindings;

    let assignment: Assignment = compiled
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), compiled.domains[i][values[i]].clone()))
        .collect();
    let cost = evaluate_assignment(instance, &assignment).expect("assignment is complete");

    stats.wall_time = started.elapsed();
    (Solution { assignment, cost }, stats)
}

// ---------------------------------------------------------------------------
// Algorithm choice
// ---------------------------------------------------------------------------

/// Which solving algorithm suits a deployment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgorithmChoice {
    /// UTIL/VALUE propagation: a linear number of messages, but message
    /// size grows with the separator width.
    Dpop,
    /// Search-based solving: many small messages, bounded memory.
    SearchBased,
}

impl AlgorithmChoice {
    pub fn label(self) -> &'static str {
        match self {
            AlgorithmChoice::Dpop => "dpop",
            AlgorithmChoice::SearchBased => "search-based",
        }
    }
}

impl std::fmt::Display for AlgorithmChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Picks DPOP exactly when the graph is acyclic and memory is not a
/// concern. Cycles inflate separators, and therefore UTIL tables, so
/// search-based algorithms take over; the same goes for hosts that cannot
/// hold large tables.
pub fn recommend_algorithm(graph: &ConstraintGraph, memory_limited: bool) -> AlgorithmChoice {
    if graph.cycle_count == 0 && !memory_limited {
        AlgorithmChoice::Dpop
    } else {
        AlgorithmChoice::SearchBased
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::Cost;
    use crate::dcop::{constraint_graph, validate_instance, CostFunction, TableEntry, Variable};
    use crate::exact::solve_exhaustive;
    use crate::fixtures::video_service_instance;

    fn var(id: &str, domain: &[&str], owner: &str) -> Variable {
        Variable {
            id: id.into(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
            owner: owner.into(),
        }
    }

    fn pair_constraint(id: &str, a: &str, b: &str, costs: &[(&str, &str, f64)]) -> CostFunction {
        CostFunction {
            id: id.into(),
            scope: vec![a.into(), b.into()],
            entries: costs
                .iter()
                .map(|&(va, vb, c)| TableEntry {
                    values: vec![va.into(), vb.into()],
                    cost: Cost::new(c).unwrap(),
                })
                .collect(),
            default: Some(Cost::ZERO),
        }
    }

    /// Chain x0 - x1 - x2 - x3 closed into a cycle by an x3 - x0 edge. The
    /// interesting part: x2's UTIL message must range over both x1 and x0,
    /// which only a full separator computation gets right.
    fn four_cycle() -> DcopInstance {
        DcopInstance {
            agents: (0..4).map(|i| format!("a{i}")).collect(),
            variables: (0..4)
                .map(|i| var(&format!("x{i}"), &["u", "v"], &format!("a{i}")))
                .collect(),
            constraints: vec![
                pair_constraint("f01", "x0", "x1", &[("u", "u", 4.0), ("v", "v", 1.0)]),
                pair_constraint("f12", "x1", "x2", &[("u", "v", 2.0), ("v", "u", 3.0)]),
                pair_constraint("f23", "x2", "x3", &[("v", "v", 5.0)]),
                pair_constraint("f30", "x3", "x0", &[("u", "u", 1.0), ("v", "u", 2.0)]),
            ],
        }
    }

    #[test]
    fn golden_instance_tree_shape() {
        let tree = build_pseudo_tree(&video_service_instance());
        assert_eq!(tree.root(), "x1");
        assert_eq!(tree.parent_of("x2"), Some("x1"));
        assert_eq!(tree.dfs_order(), vec!["x1", "x2"]);
        assert!(tree.pseudo_parents_of("x2").is_empty());
        assert_eq!(tree.separator_of("x2"), vec!["x1"]);
        assert_eq!(tree.tree_edge_count(), 1);
    }

    #[test]
    fn star_roots_at_the_hub() {
        let n = 5;
        let mut variables = vec![var("hub", &["h1", "h2"], "ah")];
        let mut agents = vec!["ah".to_string()];
        let mut constraints = Vec::new();
        for i in 0..n {
            let id = format!("leaf{i}");
            agents.push(format!("al{i}"));
            variables.push(var(&id, &["u", "v", "w"], &format!("al{i}")));
            constraints.push(pair_constraint(&format!("f{i}"), &id, "hub", &[("u", "h2", 1.0)]));
        }
        let inst = DcopInstance {
            agents,
            variables,
            constraints,
        };
        assert!(validate_instance(&inst).is_valid());
        let tree = build_pseudo_tree(&inst);
        assert_eq!(tree.root(), "hub");
        assert_eq!(tree.tree_edge_count(), n);
        for i in 0..n {
            let leaf = format!("leaf{i}");
            assert_eq!(tree.parent_of(&leaf), Some("hub"));
            assert!(tree.pseudo_parents_of(&leaf).is_empty());
            assert_eq!(tree.separator_of(&leaf), vec!["hub"]);
        }
    }

    #[test]
    fn triangle_yields_one_pseudo_parent() {
        let inst = DcopInstance {
            agents: vec!["p".into(), "q".into(), "r".into()],
            variables: vec![
                var("x", &["u", "v"], "p"),
                var("y", &["u", "v"], "q"),
                var("z", &["u", "v"], "r"),
            ],
            constraints: vec![
                pair_constraint("fxy", "x", "y", &[("u", "u", 1.0)]),
                pair_constraint("fyz", "y", "z", &[("v", "v", 2.0)]),
                pair_constraint("fzx", "z", "x", &[("u", "v", 3.0)]),
            ],
        };
        let tree = build_pseudo_tree(&inst);
        // All degrees equal, so the first variable roots the tree and the
        // walk descends x -> y -> z with a back-edge z -> x.
        assert_eq!(tree.root(), "x");
        assert_eq!(tree.parent_of("y"), Some("x"));
        assert_eq!(tree.parent_of("z"), Some("y"));
        assert_eq!(tree.pseudo_parents_of("z"), vec!["x"]);
        assert_eq!(tree.separator_of("z"), vec!["x", "y"]);
        assert_eq!(tree.separator_of("y"), vec!["x"]);
    }

    #[test]
    fn deep_cycle_separator_reaches_past_the_parent() {
        let tree = build_pseudo_tree(&four_cycle());
        assert_eq!(tree.root(), "x0");
        // x2 sits between the back-edge endpoint x3 and the root, so its
        // separator holds x1 and x0 even though x0 is not its pseudo-parent.
        assert_eq!(tree.separator_of("x2"), vec!["x0", "x1"]);
        assert!(tree.pseudo_parents_of("x2").is_empty());
        assert_eq!(tree.pseudo_parents_of("x3"), vec!["x0"]);
    }

    #[test]
    fn solves_golden_instance_with_two_messages() {
        let (solution, stats) = solve_dpop(&video_service_instance());
        assert_eq!(solution.cost.value(), 15.0);
        assert_eq!(solution.assignment.get("x1"), Some("A-2"));
        assert_eq!(solution.assignment.get("x2"), Some("B-1"));
        assert_eq!(stats.message_count, 2);
        assert_eq!(stats.util_cells, 2);
        assert_eq!(stats.value_bindings, 1);
        assert_eq!(stats.total_payload_cells, 3);
    }

    #[test]
    fn matches_oracle_on_cyclic_instance() {
        let inst = four_cycle();
        let oracle = solve_exhaustive(&inst).unwrap();
        let (solution, _) = solve_dpop(&inst);
        assert_eq!(solution.cost, oracle.cost);
        assert_eq!(solution.assignment, oracle.assignment);
    }

    #[test]
    fn merges_disconnected_components() {
        let inst = DcopInstance {
            agents: vec!["p".into(), "q".into(), "r".into(), "s".into()],
            variables: vec![
                var("x", &["u", "v"], "p"),
                var("y", &["u", "v"], "q"),
                var("z", &["u", "v"], "r"),
                var("w", &["u", "v"], "s"),
            ],
            constraints: vec![
                pair_constraint("fxy", "x", "y", &[("u", "u", 3.0), ("v", "u", 1.0)]),
                pair_constraint("fzw", "z", "w", &[("u", "v", 2.0), ("v", "v", 4.0)]),
            ],
        };
        let oracle = solve_exhaustive(&inst).unwrap();
        let (solution, stats) = solve_dpop(&inst);
        assert_eq!(solution.cost, oracle.cost);
        assert_eq!(solution.assignment, oracle.assignment);
        // Two components of two variables: two tree edges, four messages.
        assert_eq!(stats.message_count, 4);
    }

    #[test]
    fn infeasible_instance_is_flagged() {
        let mut inst = video_service_instance();
        // Forbid everything the shared constraint still allowed.
        inst.constraints[2].default = Some(Cost::INFINITY);
        inst.constraints[2].entries.clear();
        let (solution, _) = solve_dpop(&inst);
        assert!(solution.is_infeasible());
    }

    #[test]
    fn message_count_is_twice_tree_edges_on_star() {
        for n in [2usize, 5, 10] {
            let mut agents = vec!["ah".to_string()];
            let mut variables = vec![var("hub", &["h1", "h2"], "ah")];
            let mut constraints = Vec::new();
            for i in 0..n {
                let id = format!("leaf{i}");
                agents.push(format!("al{i}"));
                variables.push(var(&id, &["u", "v", "w"], &format!("al{i}")));
                constraints.push(pair_constraint(&format!("f{i}"), &id, "hub", &[("v", "h1", 2.0)]));
            }
            let inst = DcopInstance {
                agents,
                variables,
                constraints,
            };
            let (_, stats) = solve_dpop(&inst);
            assert_eq!(stats.message_count, 2 * n as u64);
            // Each leaf sends one UTIL table over the hub's domain.
            assert_eq!(stats.util_cells, 2 * n as u64);
            assert_eq!(stats.value_bindings, n as u64);
        }
    }

    #[test]
    fn recommendation_follows_shape_and_memory() {
        let acyclic = constraint_graph(&video_service_instance());
        assert_eq!(recommend_algorithm(&acyclic, false), AlgorithmChoice::Dpop);
        assert_eq!(recommend_algorithm(&acyclic, true), AlgorithmChoice::SearchBased);

        let cyclic = constraint_graph(&four_cycle());
        assert_eq!(cyclic.cycle_count, 1);
        assert_eq!(recommend_algorithm(&cyclic, false), AlgorithmChoice::SearchBased);
        assert_eq!(recommend_algorithm(&cyclic, false).label(), "search-based");
    }
}
