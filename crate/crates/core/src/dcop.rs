//! Problem model for distributed constraint optimisation.
//!
//! An instance couples agents, variables, and cost functions. Every agent
//! owns exactly one variable, every variable ranges over an ordered finite
//! domain of symbolic values, and every cost function scores the joint
//! values of the variables in its scope. Solving means finding the complete
//! assignment that minimises the sum of all cost functions.
//!
//! Instances serialise to a small JSON format:
//!
//! ```json
//! {
//!   "agents": ["a1", "a2"],
//!   "variables": [{"id": "x1", "domain": ["A-1", "A-2"], "owner": "a1"}],
//!   "constraints": [
//!     {"id": "f1", "scope": ["x1"],
//!      "entries": [{"values": ["A-1"], "cost": 10}, {"values": ["A-2"], "cost": 0}]}
//!   ]
//! }
//! ```
//!
//! A constraint may list only part of its table and back-fill the rest with
//! a `default` cost; `"inf"` marks a forbidden combination.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::Cost;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// A decision variable: an ordered domain of symbolic values plus the agent
/// that controls it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub id: String,
    pub domain: Vec<String>,
    pub owner: String,
}

/// One row of a cost table: a joint value tuple (ordered like the scope) and
/// its cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub values: Vec<String>,
    pub cost: Cost,
}

/// A cost function over the variables in `scope`. The listed entries,
/// together with the optional default, must cover the full Cartesian product
/// of the scope's domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostFunction {
    pub id: String,
    pub scope: Vec<String>,
    pub entries: Vec<TableEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Cost>,
}

impl CostFunction {
    /// Arity of the function, i.e. the scope size.
    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    /// Cost of one joint value tuple, ordered like the scope. `None` when
    /// the tuple is neither listed nor backed by a default (an instance that
    /// validates clean never produces `None`).
    pub fn cost_of(&self, joint: &[&str]) -> Option<Cost> {
        self.entries
            .iter()
            .find(|e| e.values.len() == joint.len() && e.values.iter().zip(joint).all(|(a, b)| a == b))
            .map(|e| e.cost)
            .or(self.default)
    }
}

/// A complete optimisation problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcopInstance {
    pub agents: Vec<String>,
    pub variables: Vec<Variable>,
    pub constraints: Vec<CostFunction>,
}

impl DcopInstance {
    pub fn variable(&self, id: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.id == id)
    }

    pub fn from_json_str(text: &str) -> Result<DcopInstance, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialises")
    }
}

/// A (possibly partial) mapping from variable ids to domain values.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(BTreeMap<String, String>);

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn bind(&mut self, variable: impl Into<String>, value: impl Into<String>) {
        self.0.insert(variable.into(), value.into());
    }

    /// Builder-style [`bind`](Assignment::bind).
    pub fn with(mut self, variable: impl Into<String>, value: impl Into<String>) -> Assignment {
        self.bind(variable, value);
        self
    }

    pub fn get(&self, variable: &str) -> Option<&str> {
        self.0.get(variable).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl FromIterator<(String, String)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Assignment {
        Assignment(iter.into_iter().collect())
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no value bound for variable {0}")]
    MissingBinding(String),
    #[error("value {value:?} is outside the domain of variable {variable}")]
    DomainViolation { variable: String, value: String },
}

/// Total cost of a complete assignment: the saturating sum of every
/// constraint evaluated at the assigned values, in declaration order.
///
/// The instance is expected to pass [`validate_instance`]; on an instance
/// whose tables have gaps this panics rather than inventing a cost.
pub fn evaluate_assignment(instance: &DcopInstance, delta: &Assignment) -> Result<Cost, EvalError> {
    for v in &instance.variables {
        if let Some(value) = delta.get(&v.id) {
            if !v.domain.iter().any(|d| d == value) {
                return Err(EvalError::DomainViolation {
                    variable: v.id.clone(),
                    value: value.to_string(),
                });
            }
        }
    }

    let mut total = Cost::ZERO;
    for f in &instance.constraints {
        let mut joint = Vec::with_capacity(f.scope.len());
        for var in &f.scope {
            match delta.get(var) {
                Some(value) => joint.push(value),
                None => return Err(EvalError::MissingBinding(var.clone())),
            }
        }
        total += f.cost_of(&joint).unwrap_or_else(|| {
            panic!(
                "constraint {} does not cover {:?}; validate the instance first",
                f.id, joint
            )
        });
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// A single structural defect. Validation returns all defects it can find
/// rather than stopping at the first.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum Violation {
    #[error("agent {agent} is declared more than once")]
    DuplicateAgent { agent: String },
    #[error("variable {variable} is declared more than once")]
    DuplicateVariable { variable: String },
    #[error("variable {variable} has an empty domain")]
    EmptyDomain { variable: String },
    #[error("variable {variable} lists domain value {value:?} more than once")]
    DuplicateDomainValue { variable: String, value: String },
    #[error("variable {variable} names undeclared owner {owner}")]
    UnknownOwner { variable: String, owner: String },
    #[error("agent {agent} must own exactly one variable, owns {}", .variables.len())]
    OwnershipViolation { agent: String, variables: Vec<String> },
    #[error("constraint {constraint} is declared more than once")]
    DuplicateConstraint { constraint: String },
    #[error("constraint {constraint} has an empty scope")]
    EmptyScope { constraint: String },
    #[error("constraint {constraint} names unknown variable {variable}")]
    UnknownVariable { constraint: String, variable: String },
    #[error("constraint {constraint} lists variable {variable} twice in its scope")]
    DuplicateScopeVariable { constraint: String, variable: String },
    #[error("constraint {constraint} has an entry with {found} values, expected {expected}")]
    ArityMismatch {
        constraint: String,
        expected: usize,
        found: usize,
    },
    #[error("constraint {constraint} entry uses value {value:?} outside the domain of {variable}")]
    UnknownDomainValue {
        constraint: String,
        variable: String,
        value: String,
    },
    #[error("constraint {constraint} lists the tuple {values:?} more than once")]
    DuplicateEntry { constraint: String, values: Vec<String> },
    #[error("constraint {constraint} covers no cost for {example:?} and has no default")]
    MissingEntry { constraint: String, example: Vec<String> },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the structural invariants: unique ids, a one-to-one mapping
/// between agents and variables, scopes over declared variables, and cost
/// tables that cover their full Cartesian product.
pub fn validate_instance(instance: &DcopInstance) -> ValidationReport {
    let mut violations = Vec::new();

    let mut seen_agents = HashSet::new();
    for a in &instance.agents {
        if !seen_agents.insert(a.as_str()) {
            violations.push(Violation::DuplicateAgent { agent: a.clone() });
        }
    }

    let mut seen_vars = HashSet::new();
    for v in &instance.variables {
        if !seen_vars.insert(v.id.as_str()) {
            violations.push(Violation::DuplicateVariable {
                variable: v.id.clone(),
            });
        }
        if v.domain.is_empty() {
            violations.push(Violation::EmptyDomain {
                variable: v.id.clone(),
            });
        }
        let mut seen_values = HashSet::new();
        for value in &v.domain {
            if !seen_values.insert(value.as_str()) {
                violations.push(Violation::DuplicateDomainValue {
                    variable: v.id.clone(),
                    value: value.clone(),
                });
            }
        }
        if !seen_agents.contains(v.owner.as_str()) {
            violations.push(Violation::UnknownOwner {
                variable: v.id.clone(),
                owner: v.owner.clone(),
            });
        }
    }

    for a in &instance.agents {
        let owned: Vec<String> = instance
            .variables
            .iter()
            .filter(|v| v.owner == *a)
            .map(|v| v.id.clone())
            .collect();
        if owned.len() != 1 {
            violations.push(Violation::OwnershipViolation {
                agent: a.clone(),
                variables: owned,
            });
        }
    }

    let by_id: HashMap<&str, &Variable> = instance.variables.iter().map(|v| (v.id.as_str(), v)).collect();

    let mut seen_constraints = HashSet::new();
    for f in &instance.constraints {
        if !seen_constraints.insert(f.id.as_str()) {
            violations.push(Violation::DuplicateConstraint {
                constraint: f.id.clone(),
            });
        }
        if f.scope.is_empty() {
            violations.push(Violation::EmptyScope {
                constraint: f.id.clone(),
            });
            continue;
        }
        let mut scope_ok = true;
        let mut seen_scope = HashSet::new();
        for var in &f.scope {
            if !by_id.contains_key(var.as_str()) {
                violations.push(Violation::UnknownVariable {
                    constraint: f.id.clone(),
                    variable: var.clone(),
                });
                scope_ok = false;
            }
            if !seen_scope.insert(var.as_str()) {
                violations.push(Violation::DuplicateScopeVariable {
                    constraint: f.id.clone(),
                    variable: var.clone(),
                });
                scope_ok = false;
            }
        }

        let mut entries_ok = true;
        let mut seen_tuples = HashSet::new();
        for entry in &f.entries {
            if entry.values.len() != f.scope.len() {
                violations.push(Violation::ArityMismatch {
                    constraint: f.id.clone(),
                    expected: f.scope.len(),
                    found: entry.values.len(),
                });
                entries_ok = false;
                continue;
            }
            if scope_ok {
                for (var, value) in f.scope.iter().zip(&entry.values) {
                    let domain_ok = by_id[var.as_str()].domain.iter().any(|d| d == value);
                    if !domain_ok {
                        violations.push(Violation::UnknownDomainValue {
                            constraint: f.id.clone(),
                            variable: var.clone(),
                            value: value.clone(),
                        });
                        entries_ok = false;
                    }
                }
            }
            if !seen_tuples.insert(entry.values.clone()) {
                violations.push(Violation::DuplicateEntry {
                    constraint: f.id.clone(),
                    values: entry.values.clone(),
                });
            }
        }

        if scope_ok && entries_ok && f.default.is_none() {
            if let Some(example) = first_uncovered_tuple(f, &by_id) {
                violations.push(Violation::MissingEntry {
                    constraint: f.id.clone(),
                    example,
                });
            }
        }
    }

    ValidationReport { violations }
}

/// Walks the scope's Cartesian product in lexicographic order and returns
/// the first tuple the entry list misses, if any. Tables whose product
/// exceeds a million cells are compared by count alone.
fn first_uncovered_tuple(f: &CostFunction, by_id: &HashMap<&str, &Variable>) -> Option<Vec<String>> {
    let domains: Vec<&[String]> = f.scope.iter().map(|v| by_id[v.as_str()].domain.as_slice()).collect();
    let product: u128 = domains.iter().map(|d| d.len() as u128).product();
    let listed: HashSet<&[String]> = f.entries.iter().map(|e| e.values.as_slice()).collect();

    if product > 1_000_000 {
        if (listed.len() as u128) < product {
            return Some(Vec::new());
        }
        return None;
    }

    let mut odometer = vec![0usize; domains.len()];
    loop {
        let tuple: Vec<String> = odometer
            .iter()
            .zip(&domains)
            .map(|(&i, d)| d[i].clone())
            .collect();
        if !listed.contains(tuple.as_slice()) {
            return Some(tuple);
        }
        let mut pos = domains.len();
        loop {
            if pos == 0 {
                return None;
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < domains[pos].len() {
                break;
            }
            odometer[pos] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// Constraint graph
// ---------------------------------------------------------------------------

/// The graph whose nodes are variables and whose edges connect variables
/// sharing a constraint scope. `cycle_count` is the number of independent
/// cycles: `edges - nodes + components`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub components: usize,
    pub cycle_count: usize,
}

/// Builds the constraint graph of a validated instance. Edges are reported
/// once, ordered by variable declaration position.
pub fn constraint_graph(instance: &DcopInstance) -> ConstraintGraph {
    let index: HashMap<&str, usize> = instance
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.id.as_str(), i))
        .collect();

    let mut edge_set = BTreeSet::new();
    for f in &instance.constraints {
        for (i, a) in f.scope.iter().enumerate() {
            for b in f.scope.iter().skip(i + 1) {
                let (&ia, &ib) = (&index[a.as_str()], &index[b.as_str()]);
                let pair = if ia < ib { (ia, ib) } else { (ib, ia) };
                edge_set.insert(pair);
            }
        }
    }

    let n = instance.variables.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for &(a, b) in &edge_set {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let components = (0..n).filter(|&i| find(&mut parent, i) == i).count();

    let nodes: Vec<String> = instance.variables.iter().map(|v| v.id.clone()).collect();
    let edges: Vec<(String, String)> = edge_set
        .iter()
        .map(|&(a, b)| (nodes[a].clone(), nodes[b].clone()))
        .collect();
    let cycle_count = edges.len() + components - n;

    ConstraintGraph {
        nodes,
        edges,
        components,
        cycle_count,
    }
}

// ---------------------------------------------------------------------------
// Domain restriction
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq)]
pub enum RestrictError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("value {value:?} is outside the domain of variable {variable}")]
    UnknownValue { variable: String, value: String },
}

/// A copy of the instance with one variable pinned to a single value. Table
/// entries over other values of that variable are dropped; everything else
/// is untouched. Solving the restricted instance answers "what is the best
/// the rest can do, given this choice".
pub fn restrict_domain(
    instance: &DcopInstance,
    variable: &str,
    value: &str,
) -> Result<DcopInstance, RestrictError> {
    let var = instance
        .variable(variable)
        .ok_or_else(|| RestrictError::UnknownVariable(variable.to_string()))?;
    if !var.domain.iter().any(|d| d == value) {
        return Err(RestrictError::UnknownValue {
            variable: variable.to_string(),
            value: value.to_string(),
        });
    }

    let mut restricted = instance.clone();
    for v in &mut restricted.variables {
        if v.id == variable {
            v.domain = vec![value.to_string()];
        }
    }
    for f in &mut restricted.constraints {
        if let Some(pos) = f.scope.iter().position(|s| s == variable) {
            f.entries.retain(|e| e.values.get(pos).map(String::as_str) == Some(value));
        }
    }
    Ok(restricted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::video_service_instance;

    fn entry(values: &[&str], cost: f64) -> TableEntry {
        TableEntry {
            values: values.iter().map(|s| s.to_string()).collect(),
            cost: Cost::new(cost).unwrap(),
        }
    }

    #[test]
    fn evaluate_golden_instance() {
        let inst = video_service_instance();
        let best = Assignment::new().with("x1", "A-2").with("x2", "B-1");
        assert_eq!(evaluate_assignment(&inst, &best).unwrap().value(), 15.0);

        let forbidden = Assignment::new().with("x1", "A-1").with("x2", "B-2");
        assert!(evaluate_assignment(&inst, &forbidden).unwrap().is_infinite());

        let worst_allowed = Assignment::new().with("x1", "A-1").with("x2", "B-1");
        assert_eq!(evaluate_assignment(&inst, &worst_allowed).unwrap().value(), 25.0);
    }

    #[test]
    fn evaluate_reports_missing_binding() {
        let inst = video_service_instance();
        let partial = Assignment::new().with("x1", "A-1");
        assert_eq!(
            evaluate_assignment(&inst, &partial),
            Err(EvalError::MissingBinding("x2".to_string()))
        );
    }

    #[test]
    fn evaluate_reports_domain_violation() {
        let inst = video_service_instance();
        let bad = Assignment::new().with("x1", "A-3").with("x2", "B-1");
        assert_eq!(
            evaluate_assignment(&inst, &bad),
            Err(EvalError::DomainViolation {
                variable: "x1".to_string(),
                value: "A-3".to_string(),
            })
        );
    }

    #[test]
    fn evaluate_without_constraints_is_zero() {
        let inst = DcopInstance {
            agents: vec!["a".into()],
            variables: vec![Variable {
                id: "x".into(),
                domain: vec!["u".into()],
                owner: "a".into(),
            }],
            constraints: vec![],
        };
        let delta = Assignment::new().with("x", "u");
        assert_eq!(evaluate_assignment(&inst, &delta).unwrap(), Cost::ZERO);
    }

    #[test]
    fn default_backfills_unlisted_tuples() {
        let f = CostFunction {
            id: "f".into(),
            scope: vec!["x".into()],
            entries: vec![entry(&["a"], 4.0)],
            default: Some(Cost::ZERO),
        };
        assert_eq!(f.cost_of(&["a"]).unwrap().value(), 4.0);
        assert_eq!(f.cost_of(&["b"]).unwrap(), Cost::ZERO);
    }

    #[test]
    fn validation_accepts_golden_instance() {
        assert!(validate_instance(&video_service_instance()).is_valid());
    }

    #[test]
    fn validation_flags_unknown_variable() {
        let mut inst = video_service_instance();
        inst.constraints[0].scope = vec!["x9".into()];
        let report = validate_instance(&inst);
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::UnknownVariable { constraint, variable }
                if constraint == "f1" && variable == "x9"
        )));
    }

    #[test]
    fn validation_flags_shared_owner() {
        let mut inst = video_service_instance();
        inst.variables[1].owner = "a1".to_string();
        let report = validate_instance(&inst);
        let ownership: Vec<_> = report
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::OwnershipViolation { .. }))
            .collect();
        // a1 now owns two variables and a2 owns none.
        assert_eq!(ownership.len(), 2);
    }

    #[test]
    fn validation_flags_missing_entry() {
        let mut inst = video_service_instance();
        inst.constraints[0].entries.pop();
        let report = validate_instance(&inst);
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::MissingEntry { constraint, example }
                if constraint == "f1" && example == &vec!["A-2".to_string()]
        )));
    }

    #[test]
    fn validation_flags_duplicate_entry_and_bad_value() {
        let mut inst = video_service_instance();
        inst.constraints[0].entries.push(entry(&["A-1"], 3.0));
        inst.constraints[1].entries.push(entry(&["B-9"], 1.0));
        let report = validate_instance(&inst);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DuplicateEntry { constraint, .. } if constraint == "f1")));
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::UnknownDomainValue { constraint, value, .. }
                if constraint == "f2" && value == "B-9"
        )));
    }

    #[test]
    fn graph_of_golden_instance() {
        let g = constraint_graph(&video_service_instance());
        assert_eq!(g.nodes, vec!["x1".to_string(), "x2".to_string()]);
        assert_eq!(g.edges, vec![("x1".to_string(), "x2".to_string())]);
        assert_eq!(g.components, 1);
        assert_eq!(g.cycle_count, 0);
    }

    #[test]
    fn graph_counts_cycles_and_components() {
        let mk_var = |id: &str, owner: &str| Variable {
            id: id.into(),
            domain: vec!["u".into(), "v".into()],
            owner: owner.into(),
        };
        let pair = |id: &str, a: &str, b: &str| CostFunction {
            id: id.into(),
            scope: vec![a.into(), b.into()],
            entries: vec![],
            default: Some(Cost::ZERO),
        };
        // A triangle plus one isolated variable.
        let inst = DcopInstance {
            agents: vec!["p".into(), "q".into(), "r".into(), "s".into()],
            variables: vec![
                mk_var("x", "p"),
                mk_var("y", "q"),
                mk_var("z", "r"),
                mk_var("w", "s"),
            ],
            constraints: vec![pair("f1", "x", "y"), pair("f2", "y", "z"), pair("f3", "z", "x")],
        };
        let g = constraint_graph(&inst);
        assert_eq!(g.edges.len(), 3);
        assert_eq!(g.components, 2);
        assert_eq!(g.cycle_count, 1);
    }

    #[test]
    fn restrict_pins_variable_and_filters_entries() {
        let inst = video_service_instance();
        let restricted = restrict_domain(&inst, "x2", "B-1").unwrap();
        assert_eq!(restricted.variable("x2").unwrap().domain, vec!["B-1".to_string()]);
        let f3 = restricted.constraints.iter().find(|f| f.id == "f3").unwrap();
        assert!(f3.entries.iter().all(|e| e.values[1] == "B-1"));
        assert!(validate_instance(&restricted).is_valid());

        let best = crate::exact::solve_exhaustive(&restricted).unwrap();
        assert_eq!(best.cost.value(), 15.0);
    }

    #[test]
    fn restrict_rejects_unknown_inputs() {
        let inst = video_service_instance();
        assert_eq!(
            restrict_domain(&inst, "x9", "B-1"),
            Err(RestrictError::UnknownVariable("x9".to_string()))
        );
        assert!(matches!(
            restrict_domain(&inst, "x2", "B-9"),
            Err(RestrictError::UnknownValue { .. })
        ));
    }

    #[test]
    fn instance_json_roundtrip() {
        let inst = video_service_instance();
        let text = inst.to_json_string();
        let back = DcopInstance::from_json_str(&text).unwrap();
        assert_eq!(back, inst);
    }
}
