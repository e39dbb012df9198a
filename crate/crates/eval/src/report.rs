//! Run report: agreement rates, distances, sizes, and provenance.

use dfax_extract::ExtractionLog;
use dfax_model::DcsaKind;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::EvalError;

/// One rate measured on each dataset split.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SplitRates {
    pub train: f64,
    pub test: f64,
}

/// Wall-clock cost of each pipeline stage, in seconds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
pub struct StageTimings {
    pub data_seconds: f64,
    pub transformer_seconds: f64,
    pub distill_seconds: f64,
    pub extraction_seconds: f64,
    pub evaluation_seconds: f64,
    pub total_seconds: f64,
}

/// Full outcome of one pipeline run.
///
/// Rate names pair the two classifiers compared: `c_lt` is ground-truth
/// language vs transformer, `c_td` transformer vs recurrent clone, `c_ta`
/// transformer vs extracted automaton, `c_la` language vs extracted
/// automaton. All four classifiers are evaluated on exactly the same item
/// list per split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub grammar: String,
    pub cell: DcsaKind,
    pub train_items: usize,
    pub test_items: usize,
    pub c_lt: SplitRates,
    pub c_td: SplitRates,
    pub c_ta: SplitRates,
    pub c_la: SplitRates,
    /// Mean L1 distance between transformer representations and final
    /// recurrent states over the test split.
    pub diff_1: f64,
    /// Mean L2 distance, same pairing.
    pub diff_2: f64,
    pub extracted_states: usize,
    /// Conjecture size before minimization.
    pub hypothesis_states: usize,
    /// Minimal automaton size of the target language, for scale.
    pub reference_states: usize,
    /// Test-split language agreement cleared `learnable_threshold`.
    pub learnable: bool,
    pub learnable_threshold: f64,
    /// Test-split language agreement cleared one half, the weakest bar.
    pub exceeds_chance: bool,
    pub extraction: ExtractionLog,
    pub refinement_warning: bool,
    pub timings: StageTimings,
    pub config: PipelineConfig,
}

impl ConsistencyReport {
    /// Agreement sets over one item list obey an inclusion-exclusion bound:
    /// items where L=T and T=A are a subset of items where L=A, so
    /// C(L,A) >= C(L,T) + C(T,A) - 1. A report violating it is internally
    /// inconsistent. The slack absorbs float division only.
    pub fn check_coherence(&self) -> Result<(), EvalError> {
        for (name, lt, ta, la) in [
            ("train", self.c_lt.train, self.c_ta.train, self.c_la.train),
            ("test", self.c_lt.test, self.c_ta.test, self.c_la.test),
        ] {
            if la < lt + ta - 1.0 - 1e-9 {
                return Err(EvalError::Coherence(format!(
                    "{name}: C(L,A)={la:.6} < C(L,T)={lt:.6} + C(T,A)={ta:.6} - 1"
                )));
            }
        }
        Ok(())
    }

    /// All rates land in [0, 1] and the coherence bound holds.
    pub fn validate(&self) -> Result<(), EvalError> {
        for (name, rates) in [
            ("c_lt", self.c_lt),
            ("c_td", self.c_td),
            ("c_ta", self.c_ta),
            ("c_la", self.c_la),
        ] {
            for (split, rate) in [("train", rates.train), ("test", rates.test)] {
                if !(0.0..=1.0).contains(&rate) {
                    return Err(EvalError::Coherence(format!(
                        "{name}.{split}={rate} outside [0, 1]"
                    )));
                }
            }
        }
        self.check_coherence()
    }

    pub fn to_json(&self) -> Result<String, EvalError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<ConsistencyReport, EvalError> {
        let report: ConsistencyReport = serde_json::from_str(text)?;
        report.validate()?;
        Ok(report)
    }

    /// One-screen human summary, used by the CLI after a pipeline run.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("grammar            {}\n", self.grammar));
        out.push_str(&format!("cell               {}\n", self.cell));
        out.push_str(&format!(
            "items              {} train / {} test\n",
            self.train_items, self.test_items
        ));
        for (name, rates) in [
            ("C(L,T)", self.c_lt),
            ("C(T,D)", self.c_td),
            ("C(T,A)", self.c_ta),
            ("C(L,A)", self.c_la),
        ] {
            out.push_str(&format!(
                "{name}             train {:.4}  test {:.4}\n",
                rates.train, rates.test
            ));
        }
        out.push_str(&format!(
            "diff               L1 {:.4}  L2 {:.4}\n",
            self.diff_1, self.diff_2
        ));
        out.push_str(&format!(
            "automaton          {} states extracted ({} before minimization), reference {}\n",
            self.extracted_states, self.hypothesis_states, self.reference_states
        ));
        out.push_str(&format!(
            "learnable          {} (test C(L,T) vs threshold {}); exceeds chance: {}\n",
            self.learnable, self.learnable_threshold, self.exceeds_chance
        ));
        if self.refinement_warning {
            out.push_str("warning            abstraction refinement hit its budget\n");
        }
        out.push_str(&format!("wall time          {:.1}s\n", self.timings.total_seconds));
        out
    }
}
