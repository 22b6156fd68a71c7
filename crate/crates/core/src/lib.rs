//! Decentralized coordination for cooperating services.
//!
//! The crate models constraint optimisation problems in which each agent
//! owns exactly one decision variable, and minimises the summed cost of a
//! set of constraint tables over those variables. Two solvers are
//! provided: an exhaustive one that doubles as a correctness oracle, and a
//! dynamic-programming one that propagates UTIL and VALUE messages over a
//! pseudo-tree. A deterministic runtime executes the latter as actual
//! message passing between per-agent views and records a transcript that
//! can be audited for privacy leaks.
//!
//! On top of that sits a small coordination language: subsystems with
//! strategy sets, local concerns, and shared concerns, compiled down to
//! the constraint model, plus additive concern updates for problems that
//! drift over time.

pub mod coord;
pub mod cost;
pub mod dcop;
pub mod dpop;
pub mod exact;
pub mod fixtures;
pub mod random;
pub mod runtime;
pub mod util;

mod compiled;

pub use coord::{
    apply_update, compile_to_dcop, rho, run_coordination_round, validate_spec, Algorithm,
    ConcernUpdate, CoordinationSpec, LocalConcern, RoundOutcome, SharedConcern, SpecReport,
    SpecViolation, StrategyAssignment, StrategySet, UpdateError,
};
pub use cost::{Cost, CostError};
pub use dcop::{
    constraint_graph, evaluate_assignment, restrict_domain, validate_instance, Assignment,
    ConstraintGraph, CostFunction, DcopInstance, EvalError, RestrictError, TableEntry,
    ValidationReport, Variable, Violation,
};
pub use dpop::{
    build_pseudo_tree, recommend_algorithm, solve_dpop, AlgorithmChoice, PseudoTree, SolveStats,
};
pub use exact::{solve_exhaustive, solve_exhaustive_with_cap, ExactError, Solution};
pub use random::{
    random_instance, random_spec, GraphShape, RandomInstanceConfig, RandomSpecConfig,
};
pub use runtime::{
    audit_privacy, partition_views, run_protocol, AgentView, AuditReport, Payload,
    PrivacyViolation, Transcript, TranscriptError, TranscriptRecord,
};
pub use util::UtilTable;
