//! The coordination layer: a handful of self-adaptive subsystems, each
//! picking one strategy, with private local concerns and shared concerns
//! tying their choices together. Specs compile down to the constraint
//! model so any solver in this crate can run them.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::Cost;
use crate::dcop::{
    Assignment, CostFunction, DcopInstance, EvalError, TableEntry, Variable,
};
use crate::dpop::{solve_dpop, SolveStats};
use crate::exact::{solve_exhaustive, ExactError};

/// One subsystem and the strategies it can adopt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategySet {
    pub id: String,
    pub strategies: Vec<String>,
}

/// A subsystem's private cost over its own strategies. At most one per
/// subsystem; multiple pressures on the same subsystem should be summed
/// before they get here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalConcern {
    pub sas: String,
    pub costs: BTreeMap<String, Cost>,
}

/// A cost over the joint strategies of two or more subsystems. Tuples not
/// listed fall back to `default`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharedConcern {
    pub scope: Vec<String>,
    pub entries: Vec<TableEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Cost>,
}

/// A coordination problem: who chooses, what they privately prefer, and
/// which combinations the group cares about.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinationSpec {
    pub sas: Vec<StrategySet>,
    pub local_concerns: Vec<LocalConcern>,
    pub shared_concerns: Vec<SharedConcern>,
}

/// One strategy per subsystem, keyed by subsystem id.
pub type StrategyAssignment = Assignment;

impl CoordinationSpec {
    pub fn from_json_str(text: &str) -> Result<CoordinationSpec, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs serialize cleanly")
    }

    pub fn strategy_set(&self, id: &str) -> Option<&StrategySet> {
        self.sas.iter().find(|s| s.id == id)
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// A structural defect in a coordination spec.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum SpecViolation {
    #[error("duplicate subsystem id {0}")]
    DuplicateSubsystem(String),
    #[error("subsystem {0} has no strategies")]
    EmptyStrategies(String),
    #[error("subsystem {sas} lists strategy {strategy} twice")]
    DuplicateStrategy { sas: String, strategy: String },
    #[error("local concern references unknown subsystem {0}")]
    UnknownSubsystem(String),
    #[error("subsystem {0} has more than one local concern; sum them first")]
    DuplicateLocalConcern(String),
    #[error("local concern for {sas} prices unknown strategy {strategy}")]
    UnknownStrategyInLocal { sas: String, strategy: String },
    #[error("local concern for {sas} leaves strategy {strategy} unpriced")]
    MissingLocalCost { sas: String, strategy: String },
    #[error("shared concern {index} needs a scope of at least two subsystems")]
    ScopeTooSmall { index: usize },
    #[error("shared concern {index} scope references unknown subsystem {sas}")]
    UnknownSubsystemInScope { index: usize, sas: String },
    #[error("shared concern {index} lists subsystem {sas} twice in its scope")]
    DuplicateSubsystemInScope { index: usize, sas: String },
    #[error("shared concern {index} entry {values:?} does not match the scope arity")]
    EntryArityMismatch { index: usize, values: Vec<String> },
    #[error("shared concern {index} entry {values:?} uses an unknown strategy")]
    UnknownStrategyInShared { index: usize, values: Vec<String> },
    #[error("shared concern {index} lists tuple {values:?} twice")]
    DuplicateSharedEntry { index: usize, values: Vec<String> },
    #[error("shared concern {index} leaves tuple {values:?} unpriced and has no default")]
    MissingSharedEntry { index: usize, values: Vec<String> },
}

/// All structural defects found in a spec.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpecReport {
    pub violations: Vec<SpecViolation>,
}

impl SpecReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Collects every defect rather than stopping at the first. A spec that
/// passes compiles to an instance that passes
/// [`validate_instance`](crate::dcop::validate_instance).
pub fn validate_spec(spec: &CoordinationSpec) -> SpecReport {
    let mut violations = Vec::new();

    let mut seen = BTreeSet::new();
    for set in &spec.sas {
        if !seen.insert(set.id.as_str()) {
            violations.push(SpecViolation::DuplicateSubsystem(set.id.clone()));
        }
        if set.strategies.is_empty() {
            violations.push(SpecViolation::EmptyStrategies(set.id.clone()));
        }
        let mut strategies = BTreeSet::new();
        for s in &set.strategies {
            if !strategies.insert(s.as_str()) {
                violations.push(SpecViolation::DuplicateStrategy {
                    sas: set.id.clone(),
                    strategy: s.clone(),
                });
            }
        }
    }

    let mut concern_owners = BTreeSet::new();
    for concern in &spec.local_concerns {
        let Some(set) = spec.strategy_set(&concern.sas) else {
            violations.push(SpecViolation::UnknownSubsystem(concern.sas.clone()));
            continue;
        };
        if !concern_owners.insert(concern.sas.as_str()) {
            violations.push(SpecViolation::DuplicateLocalConcern(concern.sas.clone()));
        }
        for strategy in concern.costs.keys() {
            if !set.strategies.contains(strategy) {
                violations.push(SpecViolation::UnknownStrategyInLocal {
                    sas: concern.sas.clone(),
                    strategy: strategy.clone(),
                });
            }
        }
        for strategy in &set.strategies {
            if !concern.costs.contains_key(strategy) {
                violations.push(SpecViolation::MissingLocalCost {
                    sas: concern.sas.clone(),
                    strategy: strategy.clone(),
                });
            }
        }
    }

    for (index, concern) in spec.shared_concerns.iter().enumerate() {
        if concern.scope.len() < 2 {
            violations.push(SpecViolation::ScopeTooSmall { index });
        }
        let mut scope_sets = Vec::new();
        let mut scope_seen = BTreeSet::new();
        let mut scope_ok = true;
        for sas in &concern.scope {
            if !scope_seen.insert(sas.as_str()) {
                violations.push(SpecViolation::DuplicateSubsystemInScope {
                    index,
                    sas: sas.clone(),
                });
                scope_ok = false;
            }
            match spec.strategy_set(sas) {
                Some(set) => scope_sets.push(set),
                None => {
                    violations.push(SpecViolation::UnknownSubsystemInScope {
                        index,
                        sas: sas.clone(),
                    });
                    scope_ok = false;
                }
            }
        }
        if !scope_ok {
            continue;
        }

        let mut tuples = BTreeSet::new();
        let mut entries_ok = true;
        for e in &concern.entries {
            if e.values.len() != concern.scope.len() {
                violations.push(SpecViolation::EntryArityMismatch {
                    index,
                    values: e.values.clone(),
                });
                entries_ok = false;
                continue;
            }
            if e.values
                .iter()
                .zip(&scope_sets)
                .any(|(v, set)| !set.strategies.contains(v))
            {
                violations.push(SpecViolation::UnknownStrategyInShared {
                    index,
                    values: e.values.clone(),
                });
                entries_ok = false;
                continue;
            }
            if !tuples.insert(e.values.clone()) {
                violations.push(SpecViolation::DuplicateSharedEntry {
                    index,
                    values: e.values.clone(),
                });
            }
        }

        if entries_ok && concern.default.is_none() {
            let total: usize = scope_sets.iter().map(|s| s.strategies.len()).product();
            if tuples.len() < total {
                let missing = first_missing_tuple(&scope_sets, &tuples);
                violations.push(SpecViolation::MissingSharedEntry {
                    index,
                    values: missing,
                });
            }
        }
    }

    SpecReport { violations }
}

fn first_missing_tuple(scope_sets: &[&StrategySet], covered: &BTreeSet<Vec<String>>) -> Vec<String> {
    let mut counters = vec![0usize; scope_sets.len()];
    loop {
        let tuple: Vec<String> = counters
            .iter()
            .zip(scope_sets)
            .map(|(&k, set)| set.strategies[k].clone())
            .collect();
        if !covered.contains(&tuple) {
            return tuple;
        }
        let mut i = scope_sets.len();
        loop {
            if i == 0 {
                return Vec::new();
            }
            i -= 1;
            counters[i] += 1;
            if counters[i] < scope_sets[i].strategies.len() {
                break;
            }
            counters[i] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// Objective and compilation
// ---------------------------------------------------------------------------

/// Total cost of a joint strategy choice: local concerns first, in
/// declaration order, then shared concerns in declaration order. Matches
/// [`evaluate_assignment`](crate::dcop::evaluate_assignment) on the
/// compiled instance bit for bit, additions included.
pub fn rho(spec: &CoordinationSpec, choice: &StrategyAssignment) -> Result<Cost, EvalError> {
    for set in &spec.sas {
        if let Some(value) = choice.get(&set.id) {
            if !set.strategies.iter().any(|s| s == value) {
                return Err(EvalError::DomainViolation {
                    variable: set.id.clone(),
                    value: value.to_string(),
                });
            }
        }
    }

    let mut total = Cost::ZERO;
    for concern in &spec.local_concerns {
        let value = choice
            .get(&concern.sas)
            .ok_or_else(|| EvalError::MissingBinding(concern.sas.clone()))?;
        let cost = concern.costs.get(value).unwrap_or_else(|| {
            panic!("local concern for {} does not price {value}; validate the spec first", concern.sas)
        });
        total += *cost;
    }
    for (index, concern) in spec.shared_concerns.iter().enumerate() {
        let mut joint = Vec::with_capacity(concern.scope.len());
        for sas in &concern.scope {
            joint.push(
                choice
                    .get(sas)
                    .ok_or_else(|| EvalError::MissingBinding(sas.clone()))?,
            );
        }
        let found = concern
            .entries
            .iter()
            .find(|e| e.values.iter().map(String::as_str).eq(joint.iter().copied()))
            .map(|e| e.cost)
            .or(concern.default);
        total += found.unwrap_or_else(|| {
            panic!("shared concern {index} does not cover {joint:?}; validate the spec first")
        });
    }
    Ok(total)
}

/// Lowers a validated spec to the constraint model. Subsystems become
/// agents and variables under their own ids; local concerns become unary
/// tables named `pref_<subsystem>`, in declaration order; shared concerns
/// follow as `shared_<index>` with scopes and entries carried over
/// verbatim. Minimising the result is exactly minimising [`rho`].
pub fn compile_to_dcop(spec: &CoordinationSpec) -> DcopInstance {
    let agents = spec.sas.iter().map(|s| s.id.clone()).collect();
    let variables = spec
        .sas
        .iter()
        .map(|s| Variable {
            id: s.id.clone(),
            domain: s.strategies.clone(),
            owner: s.id.clone(),
        })
        .collect();

    let mut constraints = Vec::with_capacity(spec.local_concerns.len() + spec.shared_concerns.len());
    for concern in &spec.local_concerns {
        let set = spec
            .strategy_set(&concern.sas)
            .expect("validated specs reference declared subsystems");
        constraints.push(CostFunction {
            id: format!("pref_{}", concern.sas),
            scope: vec![concern.sas.clone()],
            entries: set
                .strategies
                .iter()
                .map(|strategy| TableEntry {
                    values: vec![strategy.clone()],
                    cost: *concern
                        .costs
                        .get(strategy)
                        .expect("validated local concerns price every strategy"),
                })
                .collect(),
            default: None,
        });
    }
    for (index, concern) in spec.shared_concerns.iter().enumerate() {
        constraints.push(CostFunction {
            id: format!("shared_{index}"),
            scope: concern.scope.clone(),
            entries: concern.entries.clone(),
            default: concern.default,
        });
    }

    DcopInstance {
        agents,
        variables,
        constraints,
    }
}

// ---------------------------------------------------------------------------
// Rounds
// ---------------------------------------------------------------------------

/// Solver used for a coordination round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Dpop,
    Exhaustive,
}

/// Result of one coordination round.
#[derive(Clone, Debug)]
pub struct RoundOutcome {
    pub assignment: StrategyAssignment,
    pub cost: Cost,
    pub stats: SolveStats,
}

/// Compiles the spec and minimises it with the chosen algorithm. Both
/// algorithms return the same cost; assignments agree whenever the optimum
/// is unique.
pub fn run_coordination_round(
    spec: &CoordinationSpec,
    algorithm: Algorithm,
) -> Result<RoundOutcome, ExactError> {
    let instance = compile_to_dcop(spec);
    match algorithm {
        Algorithm::Dpop => {
            let (solution, stats) = solve_dpop(&instance);
            Ok(RoundOutcome {
                assignment: solution.assignment,
                cost: solution.cost,
                stats,
            })
        }
        Algorithm::Exhaustive => {
            let started = std::time::Instant::now();
            let solution = solve_exhaustive(&instance)?;
            let stats = SolveStats {
                wall_time: started.elapsed(),
                ..SolveStats::default()
            };
            Ok(RoundOutcome {
                assignment: solution.assignment,
                cost: solution.cost,
                stats,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Updates
// ---------------------------------------------------------------------------

/// Additive drift applied to a spec's concern costs between rounds.
/// Targets are explicit: local deltas address a `(subsystem, strategy)`
/// pair, shared deltas address a listed tuple of one shared concern,
/// matched positionally by concern index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConcernUpdate {
    pub local_deltas: BTreeMap<(String, String), f64>,
    pub shared_deltas: Vec<BTreeMap<Vec<String>, f64>>,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum UpdateError {
    #[error("delta targets unknown local cost ({sas}, {strategy})")]
    UnknownLocalTarget { sas: String, strategy: String },
    #[error("update carries {got} shared delta maps for {expected} shared concerns")]
    SharedLengthMismatch { expected: usize, got: usize },
    #[error("delta for shared concern {index} targets unlisted tuple {values:?}")]
    UnknownSharedTarget { index: usize, values: Vec<String> },
    #[error("delta for {target} is not finite")]
    InvalidDelta { target: String },
}

impl ConcernUpdate {
    /// Independent uniform noise in `[-magnitude, magnitude]` on every
    /// local cost and every finite listed tuple of every shared concern.
    /// Draws happen in a fixed traversal order, so a seeded generator
    /// yields a reproducible update.
    pub fn uniform<R: Rng + ?Sized>(
        spec: &CoordinationSpec,
        magnitude: f64,
        rng: &mut R,
    ) -> ConcernUpdate {
        let mut local_deltas = BTreeMap::new();
        for concern in &spec.local_concerns {
            for (strategy, _) in &concern.costs {
                local_deltas.insert(
                    (concern.sas.clone(), strategy.clone()),
                    rng.random_range(-magnitude..=magnitude),
                );
            }
        }
        let shared_deltas = spec
            .shared_concerns
            .iter()
            .map(|concern| {
                concern
                    .entries
                    .iter()
                    .filter(|e| e.cost.is_finite())
                    .map(|e| (e.values.clone(), rng.random_range(-magnitude..=magnitude)))
                    .collect()
            })
            .collect();
        ConcernUpdate {
            local_deltas,
            shared_deltas,
        }
    }
}

/// Returns a copy of the spec with the update folded in. Updated costs are
/// clamped at zero; infinite entries are structural and keep their cost no
/// matter what the delta says. The structure itself never changes, so a
/// valid spec stays valid.
pub fn apply_update(
    spec: &CoordinationSpec,
    update: &ConcernUpdate,
) -> Result<CoordinationSpec, UpdateError> {
    if !update.shared_deltas.is_empty() && update.shared_deltas.len() != spec.shared_concerns.len() {
        return Err(UpdateError::SharedLengthMismatch {
            expected: spec.shared_concerns.len(),
            got: update.shared_deltas.len(),
        });
    }

    let mut next = spec.clone();

    for ((sas, strategy), delta) in &update.local_deltas {
        if !delta.is_finite() {
            return Err(UpdateError::InvalidDelta {
                target: format!("({sas}, {strategy})"),
            });
        }
        let cost = next
            .local_concerns
            .iter_mut()
            .find(|c| &c.sas == sas)
            .and_then(|c| c.costs.get_mut(strategy))
            .ok_or_else(|| UpdateError::UnknownLocalTarget {
                sas: sas.clone(),
                strategy: strategy.clone(),
            })?;
        *cost = shifted(*cost, *delta);
    }

    for (index, deltas) in update.shared_deltas.iter().enumerate() {
        let concern = &mut next.shared_concerns[index];
        for (values, delta) in deltas {
            if !delta.is_finite() {
                return Err(UpdateError::InvalidDelta {
                    target: format!("shared concern {index} tuple {values:?}"),
                });
            }
            let entry = concern
                .entries
                .iter_mut()
                .find(|e| &e.values == values)
                .ok_or_else(|| UpdateError::UnknownSharedTarget {
                    index,
                    values: values.clone(),
                })?;
            entry.cost = shifted(entry.cost, *delta);
        }
    }

    Ok(next)
}

fn shifted(cost: Cost, delta: f64) -> Cost {
    if cost.is_infinite() {
        return cost;
    }
    Cost::new((cost.value() + delta).max(0.0)).expect("finite plus finite, clamped at zero")
}
