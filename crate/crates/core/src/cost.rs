//! Cost values for constraint tables.
//!
//! A cost is a finite non-negative real or infinity. Infinity marks a joint
//! value combination as forbidden: addition saturates, so any sum with an
//! infinite term stays infinite, and minimisation treats such combinations
//! as strictly worse than every permitted one.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Extended non-negative real. The representation never holds NaN or a
/// negative value: [`Cost::new`] rejects both, and addition of non-negative
/// values cannot produce either.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cost(f64);

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("cost must not be NaN")]
    NotANumber,
    #[error("cost must not be negative, got {0}")]
    Negative(f64),
}

impl Cost {
    pub const ZERO: Cost = Cost(0.0);
    pub const INFINITY: Cost = Cost(f64::INFINITY);

    pub fn new(value: f64) -> Result<Cost, CostError> {
        if value.is_nan() {
            Err(CostError::NotANumber)
        } else if value < 0.0 {
            Err(CostError::Negative(value))
        } else {
            // Normalise -0.0 so zero has a single representation.
            Ok(Cost(value + 0.0))
        }
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// The underlying value; infinity maps to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        self.0
    }
}

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Cost) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Cost) -> Ordering {
        // Total because NaN is unrepresentable.
        self.0.partial_cmp(&other.0).expect("Cost is never NaN")
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, rhs: Cost) -> Cost {
        Cost(self.0 + rhs.0)
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        self.0 += rhs.0;
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, Add::add)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Cost, D::Error> {
        struct CostVisitor;

        impl<'de> de::Visitor<'de> for CostVisitor {
            type Value = Cost;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Cost, E> {
                Cost::new(v).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Cost, E> {
                self.visit_f64(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Cost, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Cost, E> {
                if v == "inf" {
                    Ok(Cost::INFINITY)
                } else {
                    Err(E::custom(format!(
                        "unrecognised cost string {v:?}, expected \"inf\""
                    )))
                }
            }
        }

        deserializer.deserialize_any(CostVisitor)
    }
}
