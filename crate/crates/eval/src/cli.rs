//! Command-line front end over the pipeline stages.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{ArgGroup, Parser, Subcommand};
use dfax_automata::{to_dot, Dfa, Grammar};
use dfax_data::{generate_dataset, DatasetConfig, SequenceDataset, Split};
use dfax_extract::{extract_dfa_from_dcsa, ExtractionBudget};
use dfax_model::{
    build_dcsa, build_transformer, distill, train_transformer, DcsaKind, DcsaModel,
    DistillConfig, TrainConfig, TransformerConfig, TransformerModel,
};

use crate::config::{GrammarSpec, PipelineConfig};
use crate::error::EvalError;
use crate::metrics::agreement_count;
use crate::pipeline::run_pipeline;

#[derive(Parser)]
#[command(
    name = "dfax",
    about = "Train sequence acceptors and extract automata from them",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_cell(s: &str) -> Result<DcsaKind, String> {
    s.parse::<DcsaKind>().map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// List the builtin grammars with their definitions.
    ListGrammars,
    /// Sample a labeled, balanced, deduplicated dataset from a language.
    #[command(group(ArgGroup::new("language").required(true).args(["grammar", "regex"])))]
    GenData {
        /// Builtin grammar name (see list-grammars).
        #[arg(long)]
        grammar: Option<String>,
        /// Regular expression defining the language instead.
        #[arg(long)]
        regex: Option<String>,
        /// Alphabet symbols for --regex, one character each.
        #[arg(long, default_value = "01", requires = "regex")]
        alphabet: String,
        #[arg(long, default_value_t = 200)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        min_len: usize,
        #[arg(long, default_value_t = 16)]
        max_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path for the dataset (JSON lines).
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the attention-based acceptor on a dataset.
    TrainTransformer {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 5e-4)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Model width; other shape knobs keep their defaults.
        #[arg(long)]
        d_model: Option<usize>,
        /// Longest framed input the model will accept.
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Clone a trained transformer into a recurrent model.
    Distill {
        #[arg(long)]
        transformer: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Recurrent cell family: rnn, gru, or lstm.
        #[arg(long, default_value = "rnn", value_parser = parse_cell)]
        cell: DcsaKind,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        learning_rate: f64,
        /// Weight of the representation-alignment term.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Learn a finite automaton mirroring a recurrent model.
    Extract {
        #[arg(long)]
        dcsa: PathBuf,
        /// Output path for the learned automaton (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Optional DOT rendering of the same automaton.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Optional run log (queries, refinements, counterexamples).
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        probe_max_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_abstract_states: Option<usize>,
        #[arg(long)]
        max_refinements: Option<usize>,
        #[arg(long)]
        random_probes: Option<usize>,
        #[arg(long)]
        max_states: Option<usize>,
        #[arg(long)]
        wall_clock_seconds: Option<u64>,
    },
    /// Compare a model's labels against a dataset's stored labels.
    Evaluate {
        /// Transformer, recurrent model, or automaton JSON file.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        against: PathBuf,
        /// Which split to score: train, test, or all.
        #[arg(long, default_value = "all")]
        split: String,
    },
    /// Run every stage from a config file and write all artifacts.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a stored automaton as DOT.
    ExportDot {
        #[arg(long)]
        dfa: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses and runs one invocation. Exit codes: 0 success, 1 usage error,
/// 2 runtime failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = err.print();
                    0
                }
                _ => {
                    eprint!("{}", err.render());
                    1
                }
            }
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

/// A model file of any of the three kinds that can label words.
pub enum LoadedModel {
    Automaton(Dfa),
    Transformer(TransformerModel),
    Dcsa(DcsaModel),
}

impl LoadedModel {
    pub fn label(&self, word: &[usize]) -> Result<u8, EvalError> {
        match self {
            LoadedModel::Automaton(dfa) => Ok(u8::from(dfa.accepts(word)?)),
            LoadedModel::Transformer(model) => Ok(model.classify_word(word)?.0),
            LoadedModel::Dcsa(model) => Ok(model.classify_word(word)?.0),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LoadedModel::Automaton(_) => "automaton",
            LoadedModel::Transformer(_) => "transformer",
            LoadedModel::Dcsa(_) => "dcsa",
        }
    }
}

/// Loads a model file, telling the three formats apart by their
/// discriminating fields.
pub fn load_model(path: &std::path::Path) -> Result<LoadedModel, EvalError> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let unknown = |reason: &str| EvalError::UnknownModel {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    match value.get("model_kind").and_then(|v| v.as_str()) {
        Some("transformer") => Ok(LoadedModel::Transformer(TransformerModel::from_json(&text)?)),
        Some("dcsa") => Ok(LoadedModel::Dcsa(DcsaModel::from_json(&text)?)),
        Some(other) => Err(unknown(&format!("unsupported model_kind {other:?}"))),
        None => {
            if value.get("delta").is_some() {
                Ok(LoadedModel::Automaton(serde_json::from_str(&text)?))
            } else {
                Err(unknown("no model_kind field and no transition table"))
            }
        }
    }
}

fn dispatch(command: Command) -> Result<(), EvalError> {
    match command {
        Command::ListGrammars => {
            for grammar in Grammar::ALL {
                println!("{:<10} {}", grammar.name(), grammar.description());
            }
            Ok(())
        }
        Command::GenData { grammar, regex, alphabet, size, min_len, max_len, seed, out } => {
            let spec = match (grammar, regex) {
                (Some(name), None) => GrammarSpec::Builtin(name),
                (None, Some(pattern)) => GrammarSpec::Regex { pattern, alphabet },
                _ => unreachable!("clap enforces exactly one language source"),
            };
            let dfa = spec.compile()?;
            let config = DatasetConfig {
                size,
                min_len,
                max_len,
                seed,
                ..DatasetConfig::default()
            };
            let dataset = generate_dataset(&dfa, &config)?;
            dataset.save(&out)?;
            println!(
                "wrote {} items ({} train / {} test) to {}",
                dataset.len(),
                dataset.split_items(Split::Train).count(),
                dataset.split_items(Split::Test).count(),
                out.display()
            );
            Ok(())
        }
        Command::TrainTransformer { data, out, epochs, learning_rate, seed, d_model, max_len } => {
            let dataset = SequenceDataset::load(&data)?;
            let mut config = TransformerConfig::default();
            if let Some(d) = d_model {
                config.d_model = d;
            }
            if let Some(m) = max_len {
                config.max_len = m;
            }
            let mut model = build_transformer(config, dataset.alphabet(), seed)?;
            let train_config = TrainConfig { epochs, learning_rate, seed };
            let history = train_transformer(&mut model, &dataset, &train_config)?;
            model.save(&out)?;
            let last = history.last().copied().unwrap_or(f64::NAN);
            println!("trained {epochs} epochs, final loss {last:.6}, saved {}", out.display());
            Ok(())
        }
        Command::Distill { transformer, data, out, cell, epochs, learning_rate, alpha, seed } => {
            let teacher = TransformerModel::load(&transformer)?;
            let dataset = SequenceDataset::load(&data)?;
            let mut dcsa = build_dcsa(cell, &teacher, seed)?;
            let config = DistillConfig {
                epochs,
                learning_rate,
                alpha,
                seed,
                ..DistillConfig::default()
            };
            distill(&mut dcsa, &teacher, &dataset, &config)?;
            dcsa.save(&out)?;
            println!("distilled {cell} model for {epochs} epochs, saved {}", out.display());
            Ok(())
        }
        Command::Extract {
            dcsa,
            out,
            dot,
            log,
            probe_max_len,
            seed,
            max_abstract_states,
            max_refinements,
            random_probes,
            max_states,
            wall_clock_seconds,
        } => {
            let model = DcsaModel::load(&dcsa)?;
            let mut budget = ExtractionBudget::default();
            if let Some(v) = max_abstract_states {
                budget.max_abstract_states = v;
            }
            if let Some(v) = max_refinements {
                budget.max_refinements = v;
            }
            if let Some(v) = random_probes {
                budget.random_probe_count = v;
            }
            if let Some(v) = max_states {
                budget.max_hypothesis_states = v;
            }
            if let Some(v) = wall_clock_seconds {
                budget.wall_clock_seconds = v;
            }
            let extraction = extract_dfa_from_dcsa(&model, &budget, probe_max_len, seed)?;
            fs::write(&out, serde_json::to_string_pretty(&extraction.dfa)?)?;
            if let Some(path) = dot {
                fs::write(path, to_dot(&extraction.dfa))?;
            }
            if let Some(path) = log {
                fs::write(path, serde_json::to_string_pretty(&extraction.log)?)?;
            }
            println!(
                "extracted {} states in {} equivalence rounds{}",
                extraction.dfa.n_states(),
                extraction.log.equivalence_rounds,
                if extraction.log.incomplete { " (incomplete)" } else { "" }
            );
            Ok(())
        }
        Command::Evaluate { model, against, split } => {
            let loaded = load_model(&model)?;
            let dataset = SequenceDataset::load(&against)?;
            let wanted = match split.as_str() {
                "train" => Some(Split::Train),
                "test" => Some(Split::Test),
                "all" => None,
                other => {
                    return Err(EvalError::InvalidConfig(format!(
                        "unknown split {other:?}; expected train, test, or all"
                    )))
                }
            };
            let items: Vec<_> = dataset
                .items()
                .iter()
                .filter(|item| wanted.is_none_or(|s| item.split == s))
                .collect();
            if items.is_empty() {
                return Err(EvalError::EmptyItems);
            }
            let model_labels: Vec<u8> = items
                .iter()
                .map(|item| loaded.label(&item.tokens))
                .collect::<Result<_, _>>()?;
            let truth: Vec<u8> = items.iter().map(|item| item.label).collect();
            let agree = agreement_count(&model_labels, &truth);
            println!(
                "consistency of {} vs dataset labels ({split}): {:.4} ({agree}/{} items)",
                loaded.kind_name(),
                agree as f64 / items.len() as f64,
                items.len()
            );
            Ok(())
        }
        Command::Pipeline { config, out } => {
            let text = fs::read_to_string(&config)?;
            let mut config = PipelineConfig::from_json(&text)?;
            if let Some(dir) = out {
                config.output_dir = Some(dir);
            }
            if config.output_dir.is_none() {
                return Err(EvalError::InvalidConfig(
                    "no output directory; pass --out or set output_dir".into(),
                ));
            }
            let artifacts = run_pipeline(&config)?;
            print!("{}", artifacts.report.summary());
            println!(
                "artifacts in       {}",
                config.output_dir.expect("checked above").display()
            );
            Ok(())
        }
        Command::ExportDot { dfa, out } => {
            let automaton: Dfa = serde_json::from_str(&fs::read_to_string(&dfa)?)?;
            let rendered = to_dot(&automaton);
            match out {
                Some(path) => fs::write(path, rendered)?,
                None => print!("{rendered}"),
            }
            Ok(())
        }
    }
}
