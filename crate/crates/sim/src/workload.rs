//! Synthetic job workloads for the dispatch simulator.
//!
//! A workload is a flat list of [`Job`]s, each tagged with the application
//! that submitted it, an arrival time, and the amount of worker time it will
//! actually consume. Times are in seconds; a day is 86 400 seconds. Arrival
//! times within each day follow a configurable diurnal profile, and service
//! durations are drawn from a configurable distribution. Generation is fully
//! determined by the caller's RNG, so a seeded generator reproduces the same
//! trace bit for bit.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};

/// Seconds per simulated day.
pub const DAY: f64 = 86_400.0;

/// A single job submission.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    /// Absolute arrival time in seconds from the start of the trace.
    pub arrival_time: f64,
    /// Identifier of the submitting application, e.g. `"A3"`.
    pub app_id: String,
    /// Worker time the job actually consumes, in seconds.
    pub true_duration: f64,
}

/// Service-time distribution for generated jobs.
#[derive(Debug, Clone, PartialEq)]
pub enum DurationModel {
    /// Log-normal service times, parameterised by the median (seconds) and
    /// the shape `sigma` of the underlying normal.
    LogNormal { median: f64, sigma: f64 },
    /// Uniform service times on `[lo, hi)` seconds.
    Uniform { lo: f64, hi: f64 },
}

impl Default for DurationModel {
    fn default() -> Self {
        DurationModel::LogNormal {
            median: 120.0,
            sigma: 1.0,
        }
    }
}

/// Parameters for [`generate_workload`].
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    /// Number of applications; they are named `A1` through `An`.
    pub n_apps: usize,
    /// Number of simulated days.
    pub days: u32,
    /// Jobs submitted per application per day.
    pub jobs_per_day: u32,
    /// Ratio of peak to off-peak arrival density. `1.0` means arrivals are
    /// uniform over the day; larger values concentrate them around midday.
    pub peak_factor: f64,
    /// Service-time distribution.
    pub duration: DurationModel,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            n_apps: 5,
            days: 30,
            jobs_per_day: 48,
            peak_factor: 3.0,
            duration: DurationModel::default(),
        }
    }
}

/// Relative arrival density at time-of-day `u` in `[0, 1)`.
///
/// The profile is `1 + (peak - 1) * sin^2(pi * u)`: it equals 1 at midnight,
/// rises to `peak` at midday, and integrates the same mass for every value of
/// `peak` up to normalisation. With `peak = 1.0` the profile is flat.
pub fn diurnal_density(u: f64, peak: f64) -> f64 {
    let s = (std::f64::consts::PI * u).sin();
    1.0 + (peak - 1.0) * s * s
}

fn sample_time_of_day<R: Rng + ?Sized>(rng: &mut R, peak: f64) -> f64 {
    if peak <= 1.0 {
        return rng.random::<f64>();
    }
    // Rejection sampling against the flat envelope `peak`.
    loop {
        let u = rng.random::<f64>();
        if rng.random::<f64>() * peak < diurnal_density(u, peak) {
            return u;
        }
    }
}

fn sample_duration<R: Rng + ?Sized>(rng: &mut R, model: &DurationModel) -> f64 {
    match model {
        DurationModel::LogNormal { median, sigma } => {
            let dist = LogNormal::new(median.ln(), *sigma).expect("finite lognormal parameters");
            dist.sample(rng)
        }
        DurationModel::Uniform { lo, hi } => rng.random_range(*lo..*hi),
    }
}

/// Application identifiers `A1..An` in submission order.
pub fn app_ids(n_apps: usize) -> Vec<String> {
    (1..=n_apps).map(|i| format!("A{i}")).collect()
}

/// Generates a job trace: exactly `jobs_per_day` jobs per application per
/// day, arrival times drawn from the diurnal profile, durations drawn
/// independently from the duration model. The result is sorted by arrival
/// time.
pub fn generate_workload<R: Rng + ?Sized>(config: &WorkloadConfig, rng: &mut R) -> Vec<Job> {
    let apps = app_ids(config.n_apps);
    let mut jobs = Vec::with_capacity(apps.len() * config.days as usize * config.jobs_per_day as usize);
    for app in &apps {
        for day in 0..config.days {
            for _ in 0..config.jobs_per_day {
                let u = sample_time_of_day(rng, config.peak_factor);
                let duration = sample_duration(rng, &config.duration);
                jobs.push(Job {
                    arrival_time: day as f64 * DAY + u * DAY,
                    app_id: app.clone(),
                    true_duration: duration,
                });
            }
        }
    }
    jobs.sort_by(|a, b| {
        a.arrival_time
            .total_cmp(&b.arrival_time)
            .then_with(|| a.app_id.cmp(&b.app_id))
            .then_with(|| a.true_duration.total_cmp(&b.true_duration))
    });
    jobs
}

/// Errors from [`from_trace_csv`].
#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: expected header `arrival_time,app_id,true_duration`, found `{found}`")]
    BadHeader { line: usize, found: String },
    #[error("line {line}: expected 3 comma-separated fields, found {found}")]
    BadFieldCount { line: usize, found: usize },
    #[error("line {line}: could not parse `{value}` as a number")]
    BadNumber { line: usize, value: String },
}

/// Serialises a trace as CSV with header `arrival_time,app_id,true_duration`.
pub fn to_trace_csv(jobs: &[Job]) -> String {
    let mut out = String::from("arrival_time,app_id,true_duration\n");
    for job in jobs {
        writeln!(out, "{},{},{}", job.arrival_time, job.app_id, job.true_duration)
            .expect("writing to a String cannot fail");
    }
    out
}

/// Parses the CSV form produced by [`to_trace_csv`].
pub fn from_trace_csv(text: &str) -> Result<Vec<Job>, TraceError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == "arrival_time,app_id,true_duration" => {}
        Some((i, header)) => {
            return Err(TraceError::BadHeader {
                line: i + 1,
                found: header.to_string(),
            })
        }
        None => {
            return Err(TraceError::BadHeader {
                line: 1,
                found: String::new(),
            })
        }
    }
    let mut jobs = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(TraceError::BadFieldCount {
                line: i + 1,
                found: fields.len(),
            });
        }
        let parse = |value: &str| {
            value.parse::<f64>().map_err(|_| TraceError::BadNumber {
                line: i + 1,
                value: value.to_string(),
            })
        };
        jobs.push(Job {
            arrival_time: parse(fields[0])?,
            app_id: fields[1].to_string(),
            true_duration: parse(fields[2])?,
        });
    }
    Ok(jobs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generation_is_reproducible_and_counts_are_exact() {
        let config = WorkloadConfig {
            n_apps: 3,
            days: 4,
            jobs_per_day: 7,
            ..WorkloadConfig::default()
        };
        let a = generate_workload(&config, &mut ChaCha8Rng::seed_from_u64(9));
        let b = generate_workload(&config, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert_eq!(a.len(), 3 * 4 * 7);
        for app in app_ids(3) {
            for day in 0..4 {
                let lo = day as f64 * DAY;
                let n = a
                    .iter()
                    .filter(|j| j.app_id == app && j.arrival_time >= lo && j.arrival_time < lo + DAY)
                    .count();
                assert_eq!(n, 7, "app {app} day {day}");
            }
        }
        assert!(a.windows(2).all(|w| w[0].arrival_time <= w[1].arrival_time));
    }

    #[test]
    fn flat_profile_is_uniform_over_the_day() {
        let config = WorkloadConfig {
            n_apps: 1,
            days: 200,
            jobs_per_day: 48,
            peak_factor: 1.0,
            ..WorkloadConfig::default()
        };
        let jobs = generate_workload(&config, &mut ChaCha8Rng::seed_from_u64(11));
        let bins = 24usize;
        let mut counts = vec![0usize; bins];
        for job in &jobs {
            let u = (job.arrival_time / DAY).fract();
            counts[(u * bins as f64) as usize % bins] += 1;
        }
        let expected = jobs.len() as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 23 degrees of freedom; the 99.9th percentile is about 49.7.
        assert!(chi2 < 60.0, "chi-square statistic {chi2} too large for a flat profile");
    }

    #[test]
    fn peaked_profile_concentrates_midday() {
        let config = WorkloadConfig {
            n_apps: 1,
            days: 100,
            jobs_per_day: 48,
            peak_factor: 3.0,
            ..WorkloadConfig::default()
        };
        let jobs = generate_workload(&config, &mut ChaCha8Rng::seed_from_u64(13));
        let midday = jobs
            .iter()
            .filter(|j| {
                let u = (j.arrival_time / DAY).fract();
                (0.375..0.625).contains(&u)
            })
            .count() as f64;
        let night = jobs
            .iter()
            .filter(|j| {
                let u = (j.arrival_time / DAY).fract();
                u < 0.125 || u >= 0.875
            })
            .count() as f64;
        assert!(
            midday > 1.8 * night,
            "expected midday concentration, got midday {midday} vs night {night}"
        );
        assert!((diurnal_density(0.5, 3.0) - 3.0).abs() < 1e-12);
        assert!((diurnal_density(0.0, 3.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_csv_roundtrips() {
        let config = WorkloadConfig {
            n_apps: 2,
            days: 2,
            jobs_per_day: 5,
            ..WorkloadConfig::default()
        };
        let jobs = generate_workload(&config, &mut ChaCha8Rng::seed_from_u64(5));
        let csv = to_trace_csv(&jobs);
        assert!(csv.starts_with("arrival_time,app_id,true_duration\n"));
        let back = from_trace_csv(&csv).unwrap();
        assert_eq!(jobs, back);
    }

    #[test]
    fn trace_csv_errors_carry_line_numbers() {
        let err = from_trace_csv("nope\n").unwrap_err();
        assert!(matches!(err, TraceError::BadHeader { line: 1, .. }));
        let err = from_trace_csv("arrival_time,app_id,true_duration\n1.0,A1\n").unwrap_err();
        assert!(matches!(err, TraceError::BadFieldCount { line: 2, found: 2 }));
        let err =
            from_trace_csv("arrival_time,app_id,true_duration\n1.0,A1,2.0\nx,A1,2.0\n").unwrap_err();
        match err {
            TraceError::BadNumber { line, value } => {
                assert_eq!(line, 3);
                assert_eq!(value, "x");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn lognormal_median_lands_near_configured_value() {
        let config = WorkloadConfig {
            n_apps: 1,
            days: 300,
            jobs_per_day: 48,
            peak_factor: 1.0,
            duration: DurationModel::LogNormal {
                median: 120.0,
                sigma: 1.2,
            },
        };
        let mut durations: Vec<f64> = generate_workload(&config, &mut ChaCha8Rng::seed_from_u64(21))
            .into_iter()
            .map(|j| j.true_duration)
            .collect();
        durations.sort_by(f64::total_cmp);
        let median = durations[durations.len() / 2];
        assert!(
            (median / 120.0).ln().abs() < 0.1,
            "sample median {median} too far from 120"
        );
    }
}
