//! Experiment drivers behind the `coadapt` command-line tool.
//!
//! The binary in this crate wires these drivers to subcommands; the library
//! exposes them directly so tests and other tooling can run an experiment
//! in-process and work with the structured rows instead of re-parsing CSV.

pub mod report;
pub mod rq1;
pub mod rq2;

pub use report::{parse_rq1_csv, render_summary, summarize, ArmSummary, ReportError};
pub use rq1::{render_rq1_csv, run_rq1, Rq1Config, Rq1Row, ARMS, RQ1_HEADER};
pub use rq2::{render_rq2_csv, run_rq2, star_instance, Rq2Config, Rq2Row, RQ2_HEADER};
