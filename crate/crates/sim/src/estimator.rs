//! Per-application duration estimators.
//!
//! Each application predicts how long its jobs will run; the dispatcher uses
//! the predictions to pick the least-loaded worker. Three estimator families
//! are available, one per application strategy:
//!
//! * `A-S` keeps a fixed setpoint that drifts toward the nearest of a list of
//!   configured limits, ignoring observations entirely.
//! * `A-A` predicts the running mean of all observed durations, falling back
//!   to a configured prior before the first observation.
//! * `A-N` fits a small linear model on time-of-day features by online
//!   gradient descent on squared error.

/// Lower bound applied to every prediction so backlog arithmetic never sees a
/// zero or negative estimate.
pub const MIN_ESTIMATE: f64 = 1e-3;

/// Application-side strategy: which estimator family the application runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AppStrategy {
    /// Setpoint estimator, label `A-S`.
    Steady,
    /// Running-mean estimator, label `A-A`.
    Average,
    /// Linear-model estimator, label `A-N`.
    Neural,
}

impl AppStrategy {
    /// All strategies in declaration order (the order used in strategy sets).
    pub const ALL: [AppStrategy; 3] = [AppStrategy::Steady, AppStrategy::Average, AppStrategy::Neural];

    pub fn label(self) -> &'static str {
        match self {
            AppStrategy::Steady => "A-S",
            AppStrategy::Average => "A-A",
            AppStrategy::Neural => "A-N",
        }
    }

    pub fn from_label(label: &str) -> Option<AppStrategy> {
        AppStrategy::ALL.into_iter().find(|s| s.label() == label)
    }
}

impl std::fmt::Display for AppStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Tuning knobs shared by all estimator instances.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Limits the setpoint estimator drifts between. Must be non-empty.
    pub steady_limits: Vec<f64>,
    /// Seconds the setpoint moves per completed job.
    pub steady_step: f64,
    /// Prediction of the running-mean estimator before any observation.
    pub average_prior: f64,
    /// Learning rate of the linear-model estimator.
    pub neural_rate: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            steady_limits: vec![60.0, 240.0],
            steady_step: 15.0,
            average_prior: 120.0,
            neural_rate: 0.05,
        }
    }
}

/// Time-of-day features for the linear model: `[sin(2*pi*u), cos(2*pi*u), 1]`
/// where `u` is the fraction of the day elapsed.
pub fn time_features(time_of_day: f64) -> [f64; 3] {
    let angle = 2.0 * std::f64::consts::PI * time_of_day;
    [angle.sin(), angle.cos(), 1.0]
}

/// Raw linear-model prediction: the dot product of weights and features.
pub fn neural_predict(weights: &[f64; 3], features: &[f64; 3]) -> f64 {
    weights[0] * features[0] + weights[1] * features[1] + weights[2] * features[2]
}

/// Squared-error loss of the raw (unclamped) prediction.
pub fn neural_loss(weights: &[f64; 3], features: &[f64; 3], observed: f64) -> f64 {
    let residual = neural_predict(weights, features) - observed;
    residual * residual
}

/// Gradient of [`neural_loss`] with respect to the weights.
pub fn neural_gradient(weights: &[f64; 3], features: &[f64; 3], observed: f64) -> [f64; 3] {
    let residual = neural_predict(weights, features) - observed;
    [
        2.0 * residual * features[0],
        2.0 * residual * features[1],
        2.0 * residual * features[2],
    ]
}

/// One gradient-descent step on [`neural_loss`].
pub fn neural_step(weights: &[f64; 3], features: &[f64; 3], observed: f64, rate: f64) -> [f64; 3] {
    let grad = neural_gradient(weights, features, observed);
    [
        weights[0] - rate * grad[0],
        weights[1] - rate * grad[1],
        weights[2] - rate * grad[2],
    ]
}

/// State of one estimator instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    Steady {
        limits: Vec<f64>,
        current: f64,
        step: f64,
    },
    Average {
        count: u64,
        sum: f64,
        prior: f64,
    },
    Neural {
        weights: [f64; 3],
        rate: f64,
    },
}

impl Estimator {
    /// Fresh estimator of the given family. The setpoint estimator starts at
    /// the midpoint of its outermost limits so the drift toward a limit is
    /// observable.
    pub fn new(kind: AppStrategy, config: &EstimatorConfig) -> Estimator {
        match kind {
            AppStrategy::Steady => {
                assert!(!config.steady_limits.is_empty(), "steady_limits must be non-empty");
                let lo = config.steady_limits.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = config.steady_limits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Estimator::Steady {
                    limits: config.steady_limits.clone(),
                    current: 0.5 * (lo + hi),
                    step: config.steady_step,
                }
            }
            AppStrategy::Average => Estimator::Average {
                count: 0,
                sum: 0.0,
                prior: config.average_prior,
            },
            AppStrategy::Neural => Estimator::Neural {
                weights: [0.0; 3],
                rate: config.neural_rate,
            },
        }
    }

    pub fn kind(&self) -> AppStrategy {
        match self {
            Estimator::Steady { .. } => AppStrategy::Steady,
            Estimator::Average { .. } => AppStrategy::Average,
            Estimator::Neural { .. } => AppStrategy::Neural,
        }
    }

    /// Predicted duration in seconds for a job arriving at the given
    /// time-of-day fraction. Never below [`MIN_ESTIMATE`].
    pub fn predict(&self, time_of_day: f64) -> f64 {
        let raw = match self {
            Estimator::Steady { current, .. } => *current,
            Estimator::Average { count, sum, prior } => {
                if *count == 0 {
                    *prior
                } else {
                    sum / *count as f64
                }
            }
            Estimator::Neural { weights, .. } => {
                neural_predict(weights, &time_features(time_of_day))
            }
        };
        raw.max(MIN_ESTIMATE)
    }

    /// Folds in one completed job.
    pub fn update(&mut self, time_of_day: f64, observed: f64) {
        match self {
            Estimator::Steady { limits, current, step } => {
                // Nearest limit; on a tie the first listed wins.
                let mut target = limits[0];
                let mut best = (limits[0] - *current).abs();
                for &limit in &limits[1..] {
                    let dist = (limit - *current).abs();
                    if dist < best {
                        best = dist;
                        target = limit;
                    }
                }
                if best <= *step {
                    *current = target;
                } else if target > *current {
                    *current += *step;
                } else {
                    *current -= *step;
                }
            }
            Estimator::Average { count, sum, .. } => {
                *count += 1;
                *sum += observed;
            }
            Estimator::Neural { weights, rate } => {
                *weights = neural_step(weights, &time_features(time_of_day), observed, *rate);
            }
        }
    }
}
