use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coadapt_cli::{
    parse_rq1_csv, render_rq1_csv, render_rq2_csv, render_summary, run_rq1, run_rq2, summarize,
    Rq1Config, Rq2Config,
};
use coadapt_core::{
    build_pseudo_tree, partition_views, run_protocol, solve_dpop, solve_exhaustive,
    validate_instance, DcopInstance,
};

#[derive(Parser)]
#[command(
    name = "coadapt",
    version,
    about = "Cooperative strategy selection: exact solvers, a message-passing runtime, and experiment drivers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimise a constraint instance and print the chosen assignment.
    Solve(SolveArgs),
    /// Compare coordinated strategy selection against pinned-infrastructure
    /// baselines on the job-dispatch scenario.
    Rq1(Rq1Args),
    /// Measure solver messages, shipped cells, and table lookups over a grid
    /// of star-shaped instances.
    Rq2(Rq2Args),
    /// Aggregate an experiment CSV into a per-arm table.
    Summarize(SummarizeArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    /// Message-passing solver over a pseudo-tree.
    Dpop,
    /// Centralised exhaustive search; the reference the other must match.
    Exhaustive,
}

#[derive(Args)]
struct SolveArgs {
    /// Path to the instance JSON.
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Dpop)]
    algorithm: AlgorithmArg,
    /// Write the solution JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write solver work counters as JSON (dpop only).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Write the message transcript as JSON lines (dpop only).
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct Rq1Args {
    /// Number of seeded runs; seeds 0 through N-1.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Number of applications sharing the worker pool.
    #[arg(long, default_value_t = 5)]
    apps: usize,
    /// Simulated days per run.
    #[arg(long, default_value_t = 360)]
    days: u32,
    /// Days between coordination rounds.
    #[arg(long, default_value_t = 180)]
    round_days: u32,
    /// Magnitude of the per-round concern drift.
    #[arg(long, default_value_t = 2.0)]
    drift: f64,
    /// Jobs per application per day.
    #[arg(long, default_value_t = 48)]
    jobs_per_day: u32,
    /// Output CSV path.
    #[arg(long, default_value = "rq1.csv")]
    output: PathBuf,
    /// Directory for per-run daily timeline CSVs.
    #[arg(long)]
    timeline: Option<PathBuf>,
    /// Directory for per-seed workload trace CSVs.
    #[arg(long)]
    traces: Option<PathBuf>,
}

#[derive(Args)]
struct Rq2Args {
    /// Application counts to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 5, 10, 20, 50])]
    apps: Vec<usize>,
    /// Domain sizes to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4, 5, 8])]
    domains: Vec<usize>,
    /// Output CSV path.
    #[arg(long, default_value = "rq2.csv")]
    output: PathBuf,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Path to a CSV produced by the rq1 subcommand.
    input: PathBuf,
}

enum Failure {
    /// Bad input: exit code 2.
    Validation(String),
    /// The instance has no finite-cost assignment: exit code 3.
    Infeasible(String),
}

fn validation(message: impl Into<String>) -> Failure {
    Failure::Validation(message.into())
}

fn run_solve(args: &SolveArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.instance)
        .map_err(|e| validation(format!("cannot read {}: {e}", args.instance.display())))?;
    let instance = DcopInstance::from_json_str(&text)
        .map_err(|e| validation(format!("invalid instance JSON: {e}")))?;
    let report = validate_instance(&instance);
    if !report.is_valid() {
        let mut message = String::from("instance is not well-formed:");
        for violation in &report.violations {
            message.push_str(&format!("\n  {violation}"));
        }
        return Err(Failure::Validation(message));
    }

    let solution = match args.algorithm {
        AlgorithmArg::Dpop => {
            if args.transcript.is_some() {
                let views = partition_views(&instance);
                let tree = build_pseudo_tree(&instance);
                let (solution, stats, transcript) = run_protocol(&views, &tree);
                let path = args.transcript.as_ref().unwrap();
                fs::write(path, transcript.to_jsonl())
                    .map_err(|e| validation(format!("cannot write {}: {e}", path.display())))?;
                write_stats(args, &stats)?;
                solution
            } else {
                let (solution, stats) = solve_dpop(&instance);
                write_stats(args, &stats)?;
                solution
            }
        }
        AlgorithmArg::Exhaustive => {
            if args.stats.is_some() || args.transcript.is_some() {
                return Err(validation(
                    "--stats and --transcript are only available with --algorithm dpop",
                ));
            }
            solve_exhaustive(&instance).map_err(|e| validation(e.to_string()))?
        }
    };

    let rendered =
        serde_json::to_string_pretty(&solution).expect("solutions serialize cleanly") + "\n";
    match &args.output {
        Some(path) => fs::write(path, rendered)
            .map_err(|e| validation(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{rendered}"),
    }
    if solution.is_infeasible() {
        return Err(Failure::Infeasible(
            "no feasible assignment: every complete choice has infinite cost".to_string(),
        ));
    }
    Ok(())
}

fn write_stats(args: &SolveArgs, stats: &coadapt_core::SolveStats) -> Result<(), Failure> {
    if let Some(path) = &args.stats {
        let rendered =
            serde_json::to_string_pretty(stats).expect("stats serialize cleanly") + "\n";
        fs::write(path, rendered)
            .map_err(|e| validation(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn run_rq1_command(args: &Rq1Args) -> Result<(), Failure> {
    if args.seeds == 0 {
        return Err(validation("--seeds must be at least 1"));
    }
    if args.apps == 0 {
        return Err(validation("--apps must be at least 1"));
    }
    if args.days == 0 || args.round_days == 0 {
        return Err(validation("--days and --round-days must be at least 1"));
    }
    if !args.drift.is_finite() || args.drift < 0.0 {
        return Err(validation("--drift must be a finite non-negative number"));
    }
    let config = Rq1Config {
        seeds: args.seeds,
        n_apps: args.apps,
        days: args.days,
        round_days: args.round_days,
        drift_magnitude: args.drift,
        jobs_per_day: args.jobs_per_day,
        timeline_dir: args.timeline.clone(),
        trace_dir: args.traces.clone(),
    };
    let rows = run_rq1(&config).map_err(|e| validation(format!("experiment failed: {e}")))?;
    fs::write(&args.output, render_rq1_csv(&rows))
        .map_err(|e| validation(format!("cannot write {}: {e}", args.output.display())))?;
    println!("wrote {} rows to {}", rows.len(), args.output.display());
    Ok(())
}

fn run_rq2_command(args: &Rq2Args) -> Result<(), Failure> {
    if args.apps.is_empty() || args.domains.is_empty() {
        return Err(validation("--apps and --domains must list at least one value"));
    }
    if args.apps.contains(&0) || args.domains.contains(&0) {
        return Err(validation("application counts and domain sizes must be at least 1"));
    }
    let config = Rq2Config {
        apps: args.apps.clone(),
        domains: args.domains.clone(),
    };
    let rows = run_rq2(&config);
    fs::write(&args.output, render_rq2_csv(&rows))
        .map_err(|e| validation(format!("cannot write {}: {e}", args.output.display())))?;
    println!("wrote {} rows to {}", rows.len(), args.output.display());
    Ok(())
}

fn run_summarize(args: &SummarizeArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| validation(format!("cannot read {}: {e}", args.input.display())))?;
    let rows = parse_rq1_csv(&text).map_err(|e| validation(e.to_string()))?;
    if rows.is_empty() {
        return Err(validation("the CSV contains a header but no rows"));
    }
    print!("{}", render_summary(&summarize(&rows)));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Rq1(args) => run_rq1_command(args),
        Command::Rq2(args) => run_rq2_command(args),
        Command::Summarize(args) => run_summarize(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Infeasible(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(3)
        }
    }
}
