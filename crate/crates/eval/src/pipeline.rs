//! The end-to-end run: language to dataset to transformer to recurrent
//! clone to extracted automaton, then the agreement rates between them.

use std::fs;
use std::path::Path;
use std::time::Instant;

use dfax_automata::{to_dot, Dfa};
use dfax_data::{generate_dataset, SequenceDataset, Split};
use dfax_extract::{extract_dfa_from_dcsa, Extraction};
use dfax_model::{
    build_dcsa, build_transformer, distill, rep_state_diff, train_transformer, DcsaModel,
    TransformerModel,
};

use crate::config::PipelineConfig;
use crate::error::EvalError;
use crate::metrics::{agreement_count, labels_of};
use crate::report::{ConsistencyReport, SplitRates, StageTimings};

/// Everything a finished run produced, in memory. Files are additionally
/// written when the config names an output directory.
pub struct PipelineArtifacts {
    pub report: ConsistencyReport,
    pub target: Dfa,
    pub dataset: SequenceDataset,
    pub transformer: TransformerModel,
    pub dcsa: DcsaModel,
    pub extraction: Extraction,
}

/// The teacher side of a run: language, sampled data, trained transformer.
/// Several distillation variants (cell kind, alignment weight) can finish
/// from one base without retraining it.
pub struct PipelineBase {
    pub target: Dfa,
    pub dataset: SequenceDataset,
    pub transformer: TransformerModel,
    timings: StageTimings,
}

fn stage<T, E: std::fmt::Display>(
    name: &'static str,
    result: Result<T, E>,
) -> Result<T, EvalError> {
    result.map_err(|e| EvalError::at_stage(name, e))
}

fn write_artifact(
    dir: Option<&Path>,
    name: &str,
    content: impl FnOnce() -> Result<String, EvalError>,
) -> Result<(), EvalError> {
    if let Some(dir) = dir {
        let text = content()?;
        stage("persist", fs::write(dir.join(name), text))?;
    }
    Ok(())
}

/// Compiles the language, samples the dataset, and trains the transformer.
pub fn prepare_base(config: &PipelineConfig) -> Result<PipelineBase, EvalError> {
    config.validate()?;
    let seeds = config.stage_seeds();
    let out_dir = config.output_dir.as_deref();
    if let Some(dir) = out_dir {
        stage("persist", fs::create_dir_all(dir))?;
    }
    let mut timings = StageTimings::default();

    let target = stage("grammar", config.grammar.compile())?;
    if config.transformer.max_symbols() < config.dataset.max_len {
        return Err(EvalError::InvalidConfig(format!(
            "dataset words up to {} symbols exceed the transformer frame budget {}",
            config.dataset.max_len,
            config.transformer.max_symbols()
        )));
    }

    let clock = Instant::now();
    let mut dataset_config = config.dataset.clone();
    dataset_config.seed = seeds.data;
    let dataset = stage("dataset", generate_dataset(&target, &dataset_config))?;
    timings.data_seconds = clock.elapsed().as_secs_f64();
    if let Some(dir) = out_dir {
        stage("persist", dataset.save(dir.join("dataset.jsonl")))?;
    }

    let clock = Instant::now();
    let mut transformer = stage(
        "transformer",
        build_transformer(config.transformer.clone(), dataset.alphabet(), seeds.transformer),
    )?;
    let mut train_config = config.training.clone();
    train_config.seed = seeds.transformer;
    stage("transformer", train_transformer(&mut transformer, &dataset, &train_config))?;
    timings.transformer_seconds = clock.elapsed().as_secs_f64();
    if let Some(dir) = out_dir {
        stage("persist", transformer.save(dir.join("transformer.json")))?;
    }

    Ok(PipelineBase { target, dataset, transformer, timings })
}

/// Distills, extracts, and evaluates on top of an already-trained base.
/// The base must come from the same grammar and dataset settings; the
/// distillation and extraction knobs are free to differ.
pub fn finish_pipeline(
    config: &PipelineConfig,
    base: &PipelineBase,
) -> Result<PipelineArtifacts, EvalError> {
    let seeds = config.stage_seeds();
    let out_dir = config.output_dir.as_deref();
    let started = Instant::now();
    let mut timings = base.timings;

    let clock = Instant::now();
    let mut dcsa = stage("distill", build_dcsa(config.cell, &base.transformer, seeds.dcsa))?;
    let mut distill_config = config.distill.clone();
    distill_config.seed = seeds.dcsa;
    stage("distill", distill(&mut dcsa, &base.transformer, &base.dataset, &distill_config))?;
    timings.distill_seconds = clock.elapsed().as_secs_f64();
    if let Some(dir) = out_dir {
        stage("persist", dcsa.save(dir.join("dcsa.json")))?;
    }

    let clock = Instant::now();
    let extraction = stage(
        "extract",
        extract_dfa_from_dcsa(&dcsa, &config.extraction, config.probe_len(), seeds.extraction),
    )?;
    timings.extraction_seconds = clock.elapsed().as_secs_f64();
    write_artifact(out_dir, "extracted.json", || {
        Ok(serde_json::to_string_pretty(&extraction.dfa)?)
    })?;
    write_artifact(out_dir, "extracted.dot", || Ok(to_dot(&extraction.dfa)))?;
    write_artifact(out_dir, "extraction_log.json", || {
        Ok(serde_json::to_string_pretty(&extraction.log)?)
    })?;

    let clock = Instant::now();
    let mut report = stage(
        "evaluate",
        evaluate_run(
            config,
            &base.target,
            &base.dataset,
            &base.transformer,
            &dcsa,
            &extraction,
            timings,
        ),
    )?;
    report.timings.evaluation_seconds = clock.elapsed().as_secs_f64();
    report.timings.total_seconds =
        timings.data_seconds + timings.transformer_seconds + started.elapsed().as_secs_f64();
    report.validate()?;
    write_artifact(out_dir, "report.json", || report.to_json())?;

    Ok(PipelineArtifacts {
        report,
        target: base.target.clone(),
        dataset: base.dataset.clone(),
        transformer: base.transformer.clone(),
        dcsa,
        extraction,
    })
}

/// Runs every stage in order and reports the agreement rates. Artifacts are
/// written as soon as their stage finishes, so a failed run keeps everything
/// produced before the failure.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineArtifacts, EvalError> {
    let base = prepare_base(config)?;
    finish_pipeline(config, &base)
}

/// Rates for all classifier pairs on one word list, with the agreement
/// bound checked on exact counts.
struct SplitMetrics {
    n: usize,
    lt: usize,
    td: usize,
    ta: usize,
    la: usize,
}

fn split_metrics(
    words: &[Vec<usize>],
    target: &Dfa,
    transformer: &TransformerModel,
    dcsa: &DcsaModel,
    extracted: &Dfa,
) -> Result<SplitMetrics, EvalError> {
    if words.is_empty() {
        return Err(EvalError::EmptyItems);
    }
    let l = labels_of(target, words)?;
    let t = labels_of(transformer, words)?;
    let d = labels_of(dcsa, words)?;
    let a = labels_of(extracted, words)?;
    let metrics = SplitMetrics {
        n: words.len(),
        lt: agreement_count(&l, &t),
        td: agreement_count(&t, &d),
        ta: agreement_count(&t, &a),
        la: agreement_count(&l, &a),
    };
    // Counting argument: an item agreeing in (L,T) and in (T,A) agrees in
    // (L,A), so |LA| >= |LT| + |TA| - n. Exact in integers.
    if metrics.la + metrics.n < metrics.lt + metrics.ta {
        return Err(EvalError::Coherence(format!(
            "counts n={} lt={} ta={} la={}",
            metrics.n, metrics.lt, metrics.ta, metrics.la
        )));
    }
    Ok(metrics)
}

fn evaluate_run(
    config: &PipelineConfig,
    target: &Dfa,
    dataset: &SequenceDataset,
    transformer: &TransformerModel,
    dcsa: &DcsaModel,
    extraction: &Extraction,
    timings: StageTimings,
) -> Result<ConsistencyReport, EvalError> {
    let train_words: Vec<Vec<usize>> =
        dataset.split_items(Split::Train).map(|item| item.tokens.clone()).collect();
    let test_words: Vec<Vec<usize>> =
        dataset.split_items(Split::Test).map(|item| item.tokens.clone()).collect();

    let train = split_metrics(&train_words, target, transformer, dcsa, &extraction.dfa)?;
    let test = split_metrics(&test_words, target, transformer, dcsa, &extraction.dfa)?;
    let rate = |count: usize, n: usize| count as f64 / n as f64;

    let c_lt = SplitRates { train: rate(train.lt, train.n), test: rate(test.lt, test.n) };
    let c_td = SplitRates { train: rate(train.td, train.n), test: rate(test.td, test.n) };
    let c_ta = SplitRates { train: rate(train.ta, train.n), test: rate(test.ta, test.n) };
    let c_la = SplitRates { train: rate(train.la, train.n), test: rate(test.la, test.n) };

    let diff_1 = rep_state_diff(transformer, dcsa, dataset, 1)?;
    let diff_2 = rep_state_diff(transformer, dcsa, dataset, 2)?;

    Ok(ConsistencyReport {
        grammar: config.grammar.display_name(),
        cell: config.cell,
        train_items: train.n,
        test_items: test.n,
        c_lt,
        c_td,
        c_ta,
        c_la,
        diff_1,
        diff_2,
        extracted_states: extraction.dfa.n_states(),
        hypothesis_states: extraction.log.hypothesis_states,
        reference_states: target.minimize().n_states(),
        learnable: c_lt.test > config.learnable_threshold,
        learnable_threshold: config.learnable_threshold,
        exceeds_chance: c_lt.test > 0.5,
        extraction: extraction.log.clone(),
        refinement_warning: extraction.refinement_warning,
        timings,
        config: config.clone(),
    })
}
