//! Discrete-event job-dispatch simulator.
//!
//! A fixed pool of workers serves jobs submitted by applications. Each job is
//! dispatched on arrival to the powered worker with the smallest estimated
//! backlog, where the estimates come from the submitting application's
//! current duration estimator. Dispatch is irrevocable: once queued on a
//! worker a job stays there. The infrastructure strategy controls how many
//! workers are powered, and a [`StrategySchedule`] can change both the
//! infrastructure strategy and each application's estimator strategy at
//! chosen times.
//!
//! Jobs are classified once, when they finish: a job that misses its deadline
//! (`deadline_factor` times its own duration after arrival) is late; a job
//! that waited more than `delay_limit` before starting but still made the
//! deadline is delayed; everything else is on time. The three classes
//! partition the workload.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::estimator::{AppStrategy, Estimator, EstimatorConfig};
use crate::workload::{Job, DAY};

/// Infrastructure-side strategy: how many workers are powered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InfraStrategy {
    /// Power workers on demand as the queue grows, label `I-E`.
    Elastic,
    /// Keep every worker powered, label `I-P`.
    Provisioned,
}

impl InfraStrategy {
    pub const ALL: [InfraStrategy; 2] = [InfraStrategy::Elastic, InfraStrategy::Provisioned];

    pub fn label(self) -> &'static str {
        match self {
            InfraStrategy::Elastic => "I-E",
            InfraStrategy::Provisioned => "I-P",
        }
    }

    pub fn from_label(label: &str) -> Option<InfraStrategy> {
        InfraStrategy::ALL.into_iter().find(|s| s.label() == label)
    }
}

impl std::fmt::Display for InfraStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Number of powered workers under the given infrastructure strategy when
/// `waiting` jobs are queued and `workers` workers exist in total.
pub fn decide_active_workers(
    strategy: InfraStrategy,
    waiting: usize,
    workers: usize,
    threshold: f64,
) -> usize {
    match strategy {
        InfraStrategy::Provisioned => workers,
        InfraStrategy::Elastic => {
            let need = (waiting as f64 / threshold).ceil() as usize;
            need.clamp(1, workers)
        }
    }
}

/// Timed strategy changes. The first entry must be at `t = 0.0` and
/// timestamps must be non-decreasing; each entry lists the infrastructure
/// strategy and one application strategy per application, in application
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySchedule {
    pub switches: Vec<(f64, InfraStrategy, Vec<AppStrategy>)>,
}

impl StrategySchedule {
    /// A schedule that never switches.
    pub fn fixed(infra: InfraStrategy, apps: Vec<AppStrategy>) -> StrategySchedule {
        StrategySchedule {
            switches: vec![(0.0, infra, apps)],
        }
    }
}

/// Simulator parameters. Times are in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Size of the worker pool.
    pub workers: usize,
    /// Longest acceptable wait before a job starts.
    pub delay_limit: f64,
    /// A job's deadline is this factor times its own duration after arrival.
    pub deadline_factor: f64,
    /// Queued jobs per powered worker the elastic strategy aims for.
    pub demand_threshold: f64,
    /// Estimator tuning shared by all applications.
    pub estimator: EstimatorConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            workers: 4,
            delay_limit: 300.0,
            deadline_factor: 3.0,
            demand_threshold: 0.75,
            estimator: EstimatorConfig::default(),
        }
    }
}

/// Run-level simulation results.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimMetrics {
    pub jobs_total: u64,
    pub delayed: u64,
    pub late: u64,
    pub on_time: u64,
    /// Integral over time of the number of active workers, in worker-seconds.
    /// A worker is active while it is powered or still draining its queue.
    pub worker_activity_integral: f64,
    /// `worker_activity_integral` divided by the simulated span.
    pub avg_active_workers: f64,
}

impl SimMetrics {
    pub fn pct_delayed(&self) -> f64 {
        if self.jobs_total == 0 {
            0.0
        } else {
            100.0 * self.delayed as f64 / self.jobs_total as f64
        }
    }

    pub fn pct_late(&self) -> f64 {
        if self.jobs_total == 0 {
            0.0
        } else {
            100.0 * self.late as f64 / self.jobs_total as f64
        }
    }
}

/// Per-day slice of the run: outcome counts bucketed by finish time and the
/// worker-activity integral restricted to that day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayStats {
    pub day: u32,
    pub delayed: u64,
    pub late: u64,
    pub activity_integral: f64,
}

impl DayStats {
    pub fn avg_active_workers(&self) -> f64 {
        self.activity_integral / DAY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    /// Index into the schedule's switch list.
    Switch(usize),
    /// The worker whose running job completes.
    Finish(usize),
    /// Index into the job list.
    Arrival(usize),
}

#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    rank: u8,
    seq: u64,
    kind: EventKind,
}

impl Event {
    fn key(&self) -> (f64, u8, u64) {
        (self.t, self.rank, self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the BinaryHeap pops the earliest event; ties break by
        // kind (switches, then finishes, then arrivals), then by insertion.
        other
            .t
            .total_cmp(&self.t)
            .then_with(|| other.rank.cmp(&self.rank))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct RunningJob {
    job: usize,
    start: f64,
}

#[derive(Default)]
struct Worker {
    queue: VecDeque<usize>,
    running: Option<RunningJob>,
}

struct Sim<'a> {
    jobs: &'a [Job],
    config: &'a SimConfig,
    app_of: Vec<usize>,
    workers: Vec<Worker>,
    estimators: Vec<[Estimator; 3]>,
    active_kind: Vec<AppStrategy>,
    infra: InfraStrategy,
    powered: usize,
    last_t: f64,
    n_days: usize,
    metrics: SimMetrics,
    days: Vec<DayStats>,
    heap: BinaryHeap<Event>,
    seq: u64,
}

fn time_of_day(t: f64) -> f64 {
    (t / DAY).fract()
}

fn kind_index(kind: AppStrategy) -> usize {
    match kind {
        AppStrategy::Steady => 0,
        AppStrategy::Average => 1,
        AppStrategy::Neural => 2,
    }
}

impl<'a> Sim<'a> {
    fn push(&mut self, t: f64, kind: EventKind) {
        let rank = match kind {
            EventKind::Switch(_) => 0,
            EventKind::Finish(_) => 1,
            EventKind::Arrival(_) => 2,
        };
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Event { t, rank, seq, kind });
    }

    fn estimate(&self, job: usize) -> f64 {
        let app = self.app_of[job];
        let kind = kind_index(self.active_kind[app]);
        self.estimators[app][kind].predict(time_of_day(self.jobs[job].arrival_time))
    }

    fn backlog(&self, worker: usize, now: f64) -> f64 {
        let w = &self.workers[worker];
        let mut total: f64 = w.queue.iter().map(|&j| self.estimate(j)).sum();
        if let Some(run) = &w.running {
            total += (self.estimate(run.job) - (now - run.start)).max(0.0);
        }
        total
    }

    fn waiting(&self) -> usize {
        self.workers.iter().map(|w| w.queue.len()).sum()
    }

    fn active_workers(&self) -> usize {
        self.workers
            .iter()
            .enumerate()
            .filter(|(i, w)| *i < self.powered || w.running.is_some())
            .count()
    }

    /// Integrates worker activity from the previous event up to `t`,
    /// splitting at day boundaries so daily buckets stay exact.
    fn advance(&mut self, t: f64) {
        let active = self.active_workers() as f64;
        while self.last_t < t {
            let day = ((self.last_t / DAY) as usize).min(self.n_days - 1);
            let seg_end = if day + 1 >= self.n_days {
                t
            } else {
                (((day + 1) as f64) * DAY).min(t)
            };
            let dt = seg_end - self.last_t;
            self.metrics.worker_activity_integral += active * dt;
            self.days[day].activity_integral += active * dt;
            self.last_t = seg_end;
        }
    }

    fn start_next(&mut self, worker: usize, now: f64) {
        if let Some(&job) = self.workers[worker].queue.front() {
            self.workers[worker].queue.pop_front();
            self.workers[worker].running = Some(RunningJob { job, start: now });
            self.push(now + self.jobs[job].true_duration, EventKind::Finish(worker));
        }
    }

    fn on_arrival(&mut self, job: usize, now: f64) {
        self.powered = decide_active_workers(
            self.infra,
            self.waiting() + 1,
            self.config.workers,
            self.config.demand_threshold,
        );
        let mut best = 0usize;
        let mut best_backlog = f64::INFINITY;
        for w in 0..self.powered {
            let b = self.backlog(w, now);
            if b < best_backlog {
                best_backlog = b;
                best = w;
            }
        }
        self.workers[best].queue.push_back(job);
        if self.workers[best].running.is_none() {
            self.start_next(best, now);
        }
    }

    fn on_finish(&mut self, worker: usize, now: f64) {
        let run = self.workers[worker]
            .running
            .take()
            .expect("finish event for an idle worker");
        let job = &self.jobs[run.job];
        let deadline = job.arrival_time + self.config.deadline_factor * job.true_duration;
        let wait = run.start - job.arrival_time;
        self.metrics.jobs_total += 1;
        let day = ((now / DAY) as usize).min(self.n_days - 1);
        if now > deadline {
            self.metrics.late += 1;
            self.days[day].late += 1;
        } else if wait > self.config.delay_limit {
            self.metrics.delayed += 1;
            self.days[day].delayed += 1;
        } else {
            self.metrics.on_time += 1;
        }
        let app = self.app_of[run.job];
        let kind = kind_index(self.active_kind[app]);
        self.estimators[app][kind].update(time_of_day(job.arrival_time), job.true_duration);
        self.start_next(worker, now);
        self.powered = decide_active_workers(
            self.infra,
            self.waiting(),
            self.config.workers,
            self.config.demand_threshold,
        );
    }
}

/// Runs the simulation of `jobs` over the worker pool.
///
/// `apps` lists the application identifiers in the order the schedule's
/// per-application strategies use. Returns run-level metrics and one
/// [`DayStats`] per day of the arrival horizon; jobs finishing after the
/// horizon are counted in the final day's bucket.
pub fn simulate(
    jobs: &[Job],
    apps: &[String],
    schedule: &StrategySchedule,
    config: &SimConfig,
) -> (SimMetrics, Vec<DayStats>) {
    assert!(config.workers >= 1, "need at least one worker");
    assert!(!schedule.switches.is_empty(), "schedule must set initial strategies");
    assert_eq!(schedule.switches[0].0, 0.0, "first switch must be at t = 0");
    for pair in schedule.switches.windows(2) {
        assert!(pair[0].0 <= pair[1].0, "switch timestamps must be non-decreasing");
    }
    for (_, _, app_strategies) in &schedule.switches {
        assert_eq!(
            app_strategies.len(),
            apps.len(),
            "each switch needs one strategy per application"
        );
    }

    let app_index: HashMap<&str, usize> = apps
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let app_of: Vec<usize> = jobs
        .iter()
        .map(|j| {
            *app_index
                .get(j.app_id.as_str())
                .unwrap_or_else(|| panic!("job references unknown application {}", j.app_id))
        })
        .collect();

    let n_days = jobs
        .iter()
        .map(|j| (j.arrival_time / DAY) as usize + 1)
        .max()
        .unwrap_or(0);

    let (_, initial_infra, initial_apps) = &schedule.switches[0];
    let mut sim = Sim {
        jobs,
        config,
        app_of,
        workers: (0..config.workers).map(|_| Worker::default()).collect(),
        estimators: (0..apps.len())
            .map(|_| {
                [
                    Estimator::new(AppStrategy::Steady, &config.estimator),
                    Estimator::new(AppStrategy::Average, &config.estimator),
                    Estimator::new(AppStrategy::Neural, &config.estimator),
                ]
            })
            .collect(),
        active_kind: initial_apps.clone(),
        infra: *initial_infra,
        powered: 0,
        last_t: 0.0,
        n_days,
        metrics: SimMetrics::default(),
        days: (0..n_days)
            .map(|day| DayStats {
                day: day as u32,
                delayed: 0,
                late: 0,
                activity_integral: 0.0,
            })
            .collect(),
        heap: BinaryHeap::new(),
        seq: 0,
    };
    sim.powered = decide_active_workers(sim.infra, 0, config.workers, config.demand_threshold);

    for i in 0..schedule.switches.len() {
        sim.push(schedule.switches[i].0, EventKind::Switch(i));
    }
    for (i, job) in jobs.iter().enumerate() {
        sim.push(job.arrival_time, EventKind::Arrival(i));
    }

    while let Some(event) = sim.heap.pop() {
        if n_days > 0 {
            sim.advance(event.t);
        }
        match event.kind {
            EventKind::Switch(i) => {
                let (_, infra, app_strategies) = &schedule.switches[i];
                sim.infra = *infra;
                sim.active_kind = app_strategies.clone();
                sim.powered = decide_active_workers(
                    sim.infra,
                    sim.waiting(),
                    config.workers,
                    config.demand_threshold,
                );
            }
            EventKind::Finish(worker) => sim.on_finish(worker, event.t),
            EventKind::Arrival(job) => sim.on_arrival(job, event.t),
        }
    }
    if n_days > 0 {
        sim.advance(n_days as f64 * DAY);
    }

    let span = sim.last_t;
    sim.metrics.avg_active_workers = if span > 0.0 {
        sim.metrics.worker_activity_integral / span
    } else {
        0.0
    };
    (sim.metrics, sim.days)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{generate_workload, WorkloadConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn job(arrival: f64, app: &str, duration: f64) -> Job {
        Job {
            arrival_time: arrival,
            app_id: app.to_string(),
            true_duration: duration,
        }
    }

    #[test]
    fn powered_worker_counts_follow_the_strategy() {
        for q in [0, 1, 7, 100] {
            assert_eq!(decide_active_workers(InfraStrategy::Provisioned, q, 4, 3.0), 4);
        }
        assert_eq!(decide_active_workers(InfraStrategy::Elastic, 0, 4, 3.0), 1);
        assert_eq!(decide_active_workers(InfraStrategy::Elastic, 3, 4, 3.0), 1);
        assert_eq!(decide_active_workers(InfraStrategy::Elastic, 4, 4, 3.0), 2);
        assert_eq!(decide_active_workers(InfraStrategy::Elastic, 12, 4, 3.0), 4);
        assert_eq!(decide_active_workers(InfraStrategy::Elastic, 100, 4, 3.0), 4);
    }

    #[test]
    fn queueing_behind_a_long_job_marks_the_second_job_delayed() {
        let jobs = vec![job(0.0, "A1", 400.0), job(0.0, "A1", 300.0)];
        let apps = vec!["A1".to_string()];
        let schedule = StrategySchedule::fixed(InfraStrategy::Provisioned, vec![AppStrategy::Average]);
        let config = SimConfig {
            workers: 1,
            ..SimConfig::default()
        };
        let (metrics, _) = simulate(&jobs, &apps, &schedule, &config);
        assert_eq!(metrics.jobs_total, 2);
        assert_eq!(metrics.on_time, 1);
        assert_eq!(metrics.delayed, 1, "second job waited 400 s > 300 s limit");
        assert_eq!(metrics.late, 0, "finish at 700 s beats the 900 s deadline");
    }

    #[test]
    fn missing_the_deadline_dominates_the_delay_count() {
        let jobs = vec![job(0.0, "A1", 100.0), job(0.0, "A1", 30.0)];
        let apps = vec!["A1".to_string()];
        let schedule = StrategySchedule::fixed(InfraStrategy::Provisioned, vec![AppStrategy::Average]);
        let config = SimConfig {
            workers: 1,
            ..SimConfig::default()
        };
        let (metrics, _) = simulate(&jobs, &apps, &schedule, &config);
        // The short job waits only 100 s but finishes at 130 s, past the
        // 90 s deadline three times its own duration allows.
        assert_eq!(metrics.late, 1);
        assert_eq!(metrics.delayed, 0);
        assert_eq!(metrics.on_time, 1);
    }

    #[test]
    fn outcome_classes_partition_the_workload() {
        let workload = WorkloadConfig {
            n_apps: 3,
            days: 3,
            jobs_per_day: 30,
            ..WorkloadConfig::default()
        };
        let jobs = generate_workload(&workload, &mut ChaCha8Rng::seed_from_u64(42));
        let apps = crate::workload::app_ids(3);
        let config = SimConfig {
            workers: 2,
            ..SimConfig::default()
        };
        for infra in InfraStrategy::ALL {
            let schedule = StrategySchedule::fixed(infra, vec![AppStrategy::Neural; 3]);
            let (metrics, days) = simulate(&jobs, &apps, &schedule, &config);
            assert_eq!(metrics.jobs_total, jobs.len() as u64);
            assert_eq!(
                metrics.delayed + metrics.late + metrics.on_time,
                metrics.jobs_total,
                "classes must partition the workload under {infra}"
            );
            assert_eq!(days.len(), 3);
            assert_eq!(days.iter().map(|d| d.delayed).sum::<u64>(), metrics.delayed);
            assert_eq!(days.iter().map(|d| d.late).sum::<u64>(), metrics.late);
            let daily_sum: f64 = days.iter().map(|d| d.activity_integral).sum();
            assert!((daily_sum - metrics.worker_activity_integral).abs() < 1e-6);
        }
    }

    #[test]
    fn same_seed_gives_identical_runs() {
        let workload = WorkloadConfig {
            n_apps: 2,
            days: 2,
            jobs_per_day: 40,
            ..WorkloadConfig::default()
        };
        let jobs = generate_workload(&workload, &mut ChaCha8Rng::seed_from_u64(7));
        let apps = crate::workload::app_ids(2);
        let schedule = StrategySchedule {
            switches: vec![
                (0.0, InfraStrategy::Elastic, vec![AppStrategy::Average; 2]),
                (DAY, InfraStrategy::Provisioned, vec![AppStrategy::Steady, AppStrategy::Neural]),
            ],
        };
        let config = SimConfig::default();
        let a = simulate(&jobs, &apps, &schedule, &config);
        let b = simulate(&jobs, &apps, &schedule, &config);
        assert_eq!(a, b);
    }

    #[test]
    fn provisioned_runs_report_exactly_four_active_workers() {
        let workload = WorkloadConfig {
            n_apps: 5,
            days: 2,
            ..WorkloadConfig::default()
        };
        let jobs = generate_workload(&workload, &mut ChaCha8Rng::seed_from_u64(3));
        let apps = crate::workload::app_ids(5);
        let schedule = StrategySchedule::fixed(InfraStrategy::Provisioned, vec![AppStrategy::Average; 5]);
        let (metrics, _) = simulate(&jobs, &apps, &schedule, &SimConfig::default());
        assert_eq!(metrics.avg_active_workers, 4.0, "all four workers always powered");
    }

    #[test]
    fn elastic_powers_fewer_workers_than_provisioned() {
        let workload = WorkloadConfig {
            n_apps: 5,
            days: 2,
            ..WorkloadConfig::default()
        };
        let jobs = generate_workload(&workload, &mut ChaCha8Rng::seed_from_u64(3));
        let apps = crate::workload::app_ids(5);
        let config = SimConfig::default();
        let elastic = StrategySchedule::fixed(InfraStrategy::Elastic, vec![AppStrategy::Average; 5]);
        let (em, _) = simulate(&jobs, &apps, &elastic, &config);
        assert!(em.avg_active_workers >= 1.0);
        assert!(
            em.avg_active_workers < 3.0,
            "elastic run unexpectedly busy: {} avg workers",
            em.avg_active_workers
        );

        let mixed = StrategySchedule {
            switches: vec![
                (0.0, InfraStrategy::Provisioned, vec![AppStrategy::Average; 5]),
                (DAY, InfraStrategy::Elastic, vec![AppStrategy::Average; 5]),
            ],
        };
        let (mm, _) = simulate(&jobs, &apps, &mixed, &config);
        assert!(mm.avg_active_workers > em.avg_active_workers);
        assert!(mm.avg_active_workers < 4.0);
    }

    #[test]
    fn an_empty_workload_produces_empty_metrics() {
        let schedule = StrategySchedule::fixed(InfraStrategy::Elastic, vec![AppStrategy::Average]);
        let (metrics, days) = simulate(&[], &["A1".to_string()], &schedule, &SimConfig::default());
        assert_eq!(metrics, SimMetrics::default());
        assert!(days.is_empty());
    }
}
