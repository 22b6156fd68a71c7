//! Coordination-versus-baseline experiment on the job-dispatch scenario.
//!
//! Every seed gets one workload trace and one evolving concern spec, shared
//! by three arms. At the start of each round the concerns drift, the drifted
//! spec is minimised, and the chosen strategies are scheduled for the round's
//! span of days. The `B1` arm pins the infrastructure to `I-E`, `B2` pins it
//! to `I-P`, and the `Coordination` arm lets the solver choose freely; the
//! applications pick their estimator strategies through the solver in all
//! three arms. Each arm then plays the whole trace once under its schedule.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::PathBuf;

use coadapt_core::{apply_update, compile_to_dcop, restrict_domain, solve_dpop, DcopInstance};
use coadapt_sim::{
    app_ids, build_simdex_concerns, generate_workload, simdex_drift, simulate, to_trace_csv,
    AppStrategy, InfraStrategy, SimConfig, StrategySchedule, WorkloadConfig, DAY, INFRA_ID,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Arm labels in output order.
pub const ARMS: [&str; 3] = ["B1", "B2", "Coordination"];

/// Header of the experiment CSV.
pub const RQ1_HEADER: &str =
    "seed,arm,round,t_days,objective,strategy_I,pct_delayed,pct_late,avg_workers";

/// Parameters for [`run_rq1`].
#[derive(Debug, Clone)]
pub struct Rq1Config {
    /// Runs seeds `0..seeds`.
    pub seeds: u64,
    pub n_apps: usize,
    pub days: u32,
    /// Days between coordination rounds; the first round is at day zero.
    pub round_days: u32,
    /// Magnitude of the per-round concern drift.
    pub drift_magnitude: f64,
    pub jobs_per_day: u32,
    /// When set, writes `timeline_s<seed>_<arm>.csv` per run into this
    /// directory.
    pub timeline_dir: Option<PathBuf>,
    /// When set, writes `trace_s<seed>.csv` per seed into this directory.
    pub trace_dir: Option<PathBuf>,
}

impl Default for Rq1Config {
    fn default() -> Self {
        Rq1Config {
            seeds: 10,
            n_apps: 5,
            days: 360,
            round_days: 180,
            drift_magnitude: 2.0,
            jobs_per_day: 48,
            timeline_dir: None,
            trace_dir: None,
        }
    }
}

/// One CSV row: a round of one arm of one seeded run. The percentage and
/// worker columns are run-level results, repeated on every round row of the
/// run they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Rq1Row {
    pub seed: u64,
    pub arm: String,
    pub round: u32,
    pub t_days: u32,
    pub objective: f64,
    pub strategy_infra: String,
    pub pct_delayed: f64,
    pub pct_late: f64,
    pub avg_workers: f64,
}

/// Serialises rows under [`RQ1_HEADER`]. Floats use the shortest
/// representation that parses back to the identical value.
pub fn render_rq1_csv(rows: &[Rq1Row]) -> String {
    let mut out = String::from(RQ1_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.arm,
            r.round,
            r.t_days,
            r.objective,
            r.strategy_infra,
            r.pct_delayed,
            r.pct_late,
            r.avg_workers
        )
        .expect("writing to a String cannot fail");
    }
    out
}

fn solve_arm(arm: &str, instance: &DcopInstance) -> coadapt_core::Solution {
    let restricted = match arm {
        "B1" => Some(restrict_domain(instance, INFRA_ID, "I-E").expect("I-E is in the domain")),
        "B2" => Some(restrict_domain(instance, INFRA_ID, "I-P").expect("I-P is in the domain")),
        _ => None,
    };
    let (solution, _) = solve_dpop(restricted.as_ref().unwrap_or(instance));
    solution
}

/// Runs the experiment and returns one row per seed, arm, and round.
pub fn run_rq1(config: &Rq1Config) -> io::Result<Vec<Rq1Row>> {
    assert!(config.round_days >= 1, "round length must be at least one day");
    assert!(config.n_apps >= 1, "need at least one application");
    if let Some(dir) = &config.timeline_dir {
        fs::create_dir_all(dir)?;
    }
    if let Some(dir) = &config.trace_dir {
        fs::create_dir_all(dir)?;
    }

    let apps = app_ids(config.n_apps);
    let rounds = (config.days / config.round_days).max(1);
    let sim_config = SimConfig::default();
    let mut rows: Vec<Rq1Row> = Vec::new();

    for seed in 0..config.seeds {
        let workload = WorkloadConfig {
            n_apps: config.n_apps,
            days: config.days,
            jobs_per_day: config.jobs_per_day,
            ..WorkloadConfig::default()
        };
        let jobs = generate_workload(&workload, &mut ChaCha8Rng::seed_from_u64(seed));
        if let Some(dir) = &config.trace_dir {
            fs::write(dir.join(format!("trace_s{seed}.csv")), to_trace_csv(&jobs))?;
        }

        // The drift stream is separate from the workload stream so changing
        // one parameter set never perturbs the other.
        let mut drift_rng = ChaCha8Rng::seed_from_u64(seed);
        drift_rng.set_stream(1);

        let mut spec = build_simdex_concerns(config.n_apps);
        let mut switches: BTreeMap<&str, Vec<(f64, InfraStrategy, Vec<AppStrategy>)>> =
            ARMS.iter().map(|&arm| (arm, Vec::new())).collect();
        let mut objectives: BTreeMap<&str, Vec<f64>> =
            ARMS.iter().map(|&arm| (arm, Vec::new())).collect();

        for round in 0..rounds {
            let update = simdex_drift(&spec, config.drift_magnitude, &mut drift_rng);
            spec = apply_update(&spec, &update).expect("drift only targets listed entries");
            let instance = compile_to_dcop(&spec);
            for arm in ARMS {
                let solution = solve_arm(arm, &instance);
                let infra_label = solution
                    .assignment
                    .get(INFRA_ID)
                    .expect("solver assigns the infrastructure")
                    .to_string();
                let infra = InfraStrategy::from_label(&infra_label)
                    .expect("infrastructure strategies come from the known set");
                let app_strategies = apps
                    .iter()
                    .map(|id| {
                        AppStrategy::from_label(
                            solution.assignment.get(id).expect("solver assigns every app"),
                        )
                        .expect("application strategies come from the known set")
                    })
                    .collect();
                switches
                    .get_mut(arm)
                    .unwrap()
                    .push((round as f64 * config.round_days as f64 * DAY, infra, app_strategies));
                objectives.get_mut(arm).unwrap().push(solution.cost.value());
                rows.push(Rq1Row {
                    seed,
                    arm: arm.to_string(),
                    round,
                    t_days: round * config.round_days,
                    objective: solution.cost.value(),
                    strategy_infra: infra_label,
                    pct_delayed: 0.0,
                    pct_late: 0.0,
                    avg_workers: 0.0,
                });
            }
        }

        for arm in ARMS {
            let schedule = StrategySchedule {
                switches: switches[arm].clone(),
            };
            let (metrics, day_stats) = simulate(&jobs, &apps, &schedule, &sim_config);
            for row in rows.iter_mut().filter(|r| r.seed == seed && r.arm == arm) {
                row.pct_delayed = metrics.pct_delayed();
                row.pct_late = metrics.pct_late();
                row.avg_workers = metrics.avg_active_workers;
            }
            if let Some(dir) = &config.timeline_dir {
                let mut timeline = String::from("t,delayed,late,active_workers,objective\n");
                for day in &day_stats {
                    let round = (day.day / config.round_days).min(rounds - 1) as usize;
                    writeln!(
                        timeline,
                        "{},{},{},{:.6},{}",
                        day.day,
                        day.delayed,
                        day.late,
                        day.avg_active_workers(),
                        objectives[arm][round]
                    )
                    .expect("writing to a String cannot fail");
                }
                fs::write(dir.join(format!("timeline_s{seed}_{arm}.csv")), timeline)?;
            }
        }
    }
    Ok(rows)
}
