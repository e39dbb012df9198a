use crate::DataError;
use serde::{Deserialize, Serialize};

/// Generation parameters for a labeled dataset.
///
/// Defaults: 2000 items of lengths 1..=24, balance within 0.02 of an even
/// split, one fifth held out for testing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    #[serde(default = "default_size")]
    pub size: usize,
    #[serde(default = "default_min_len")]
    pub min_len: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "default_balance_tolerance")]
    pub balance_tolerance: f64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_size() -> usize {
    2000
}
fn default_min_len() -> usize {
    1
}
fn default_max_len() -> usize {
    24
}
fn default_balance_tolerance() -> f64 {
    0.02
}
fn default_test_fraction() -> f64 {
    0.2
}

impl Default for DatasetConfig {
    fn default() -> DatasetConfig {
        DatasetConfig {
            size: default_size(),
            min_len: default_min_len(),
            max_len: default_max_len(),
            balance_tolerance: default_balance_tolerance(),
            test_fraction: default_test_fraction(),
            seed: 0,
        }
    }
}

impl DatasetConfig {
    pub fn with_seed(mut self, seed: u64) -> DatasetConfig {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.size < 10 {
            return Err(DataError::InvalidConfig(format!("size {} < 10", self.size)));
        }
        if self.min_len < 1 || self.min_len > self.max_len {
            return Err(DataError::InvalidConfig(format!(
                "need 1 <= min_len <= max_len, got {}..{}",
                self.min_len, self.max_len
            )));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(DataError::InvalidConfig(format!(
                "test_fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        if !(self.balance_tolerance >= 0.0 && self.balance_tolerance <= 0.5) {
            return Err(DataError::InvalidConfig(format!(
                "balance_tolerance {} outside [0, 0.5]",
                self.balance_tolerance
            )));
        }
        Ok(())
    }
}
