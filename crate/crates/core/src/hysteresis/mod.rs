//! Scalar rate-independent hysteresis operators with explicit memory.
//!
//! Operators are evaluated through their final-value functional on finite
//! input strings: [`HysteresisModel::init_memory`] consumes the first value,
//! [`HysteresisModel::update`] extends the string by one monotone segment.

mod checks;
mod last_value;
mod memory;
mod model;

pub use checks::{heaviside, heaviside_regularized, refine_at_crossings, SampledPath};
pub use last_value::{GraphInverse, LastValueMap};
pub use memory::MemoryState;
pub use model::{HysteresisModel, Play, Preisach, Relay, Stop, WeightedSum};

use crate::error::{Error, Result};

/// A non-empty finite string of finite input values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarString(Vec<f64>);

impl ScalarString {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("input string must not be empty".into()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("input string entry {k} is not finite")));
        }
        Ok(ScalarString(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Concatenation `self ++ other`.
    pub fn concat(&self, other: &ScalarString) -> ScalarString {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        ScalarString(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_validation() {
        assert!(ScalarString::new(vec![]).is_err());
        assert!(ScalarString::new(vec![1.0, f64::NAN]).is_err());
        let s = ScalarString::new(vec![1.0, -3.0]).unwrap();
        assert_eq!(s.sup_norm(), 3.0);
        assert!(HysteresisModel::zero().evaluate_string(&s).is_ok());
    }
}
