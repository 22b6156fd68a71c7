//! Job-dispatch simulator for a worker pool shared by several applications.
//!
//! The crate has four parts: [`workload`] generates reproducible job traces,
//! [`estimator`] implements the duration estimators applications can run,
//! [`sim`] plays a trace against the worker pool under a strategy schedule,
//! and [`concerns`] expresses the strategy trade-offs as a coordination spec
//! the solver crate can minimise.

pub mod concerns;
pub mod estimator;
pub mod sim;
pub mod workload;

pub use concerns::{
    app_components, app_concern_total, build_simdex_concerns, infra_components,
    infra_concern_total, simdex_drift, INFRA_ID,
};
pub use estimator::{
    neural_gradient, neural_loss, neural_predict, neural_step, time_features, AppStrategy,
    Estimator, EstimatorConfig, MIN_ESTIMATE,
};
pub use sim::{
    decide_active_workers, simulate, DayStats, InfraStrategy, SimConfig, SimMetrics,
    StrategySchedule,
};
pub use workload::{
    app_ids, diurnal_density, from_trace_csv, generate_workload, to_trace_csv, DurationModel, Job,
    TraceError, WorkloadConfig, DAY,
};
