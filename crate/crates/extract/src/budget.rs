use serde::{Deserialize, Serialize};

use crate::error::ExtractError;

/// Resource caps for extraction. A learned model that is not finite-state-like
/// would otherwise drive the learner forever; exhaustion is always reported,
/// never silent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionBudget {
    /// Cap on abstract states discovered per abstraction build.
    #[serde(default = "default_max_abstract_states")]
    pub max_abstract_states: usize,
    /// Cap on partition refinements across the whole extraction.
    #[serde(default = "default_max_refinements")]
    pub max_refinements: usize,
    /// Random words compared against the model before accepting a hypothesis.
    #[serde(default = "default_random_probe_count")]
    pub random_probe_count: usize,
    /// Cap on hypothesis states; beyond it the learner stops, flagged incomplete.
    #[serde(default = "default_max_hypothesis_states")]
    pub max_hypothesis_states: usize,
    /// Wall-clock cap for the whole extraction.
    #[serde(default = "default_wall_clock_seconds")]
    pub wall_clock_seconds: u64,
}

fn default_max_abstract_states() -> usize {
    400
}

fn default_max_refinements() -> usize {
    100
}

fn default_random_probe_count() -> usize {
    2000
}

fn default_max_hypothesis_states() -> usize {
    64
}

fn default_wall_clock_seconds() -> u64 {
    300
}

impl Default for ExtractionBudget {
    fn default() -> ExtractionBudget {
        ExtractionBudget {
            max_abstract_states: default_max_abstract_states(),
            max_refinements: default_max_refinements(),
            random_probe_count: default_random_probe_count(),
            max_hypothesis_states: default_max_hypothesis_states(),
            wall_clock_seconds: default_wall_clock_seconds(),
        }
    }
}

impl ExtractionBudget {
    pub fn validate(&self) -> Result<(), ExtractError> {
        let fields = [
            ("max_abstract_states", self.max_abstract_states),
            ("max_refinements", self.max_refinements),
            ("random_probe_count", self.random_probe_count),
            ("max_hypothesis_states", self.max_hypothesis_states),
            ("wall_clock_seconds", self.wall_clock_seconds as usize),
        ];
        for (name, value) in fields {
            if value == 0 {
                return Err(ExtractError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}
