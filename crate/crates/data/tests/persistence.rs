use dfax_automata::Grammar;
use dfax_data::{generate_dataset, DatasetConfig, SequenceDataset};
use std::path::PathBuf;

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("dfax-data-{}-{name}", std::process::id()));
    p
}

#[test]
fn save_then_load_preserves_everything() {
    let dfa = Grammar::Tomita1.dfa();
    let config = DatasetConfig {
        size: 40,
        min_len: 1,
        max_len: 20,
        balance_tolerance: 0.02,
        test_fraction: 0.25,
        seed: 9,
    };
    let ds = generate_dataset(&dfa, &config).unwrap();

    let path = temp_path("roundtrip.jsonl");
    ds.save(&path).unwrap();
    let loaded = SequenceDataset::load(&path).unwrap();
    std::fs::remove_file(&path).unwrap();

    assert_eq!(loaded, ds);
    assert_eq!(loaded.seed(), 9);
    assert_eq!(loaded.alphabet(), dfa.alphabet());
}

#[test]
fn missing_file_reports_io_error() {
    let err = SequenceDataset::load(temp_path("no-such-file.jsonl")).unwrap_err();
    assert!(matches!(err, dfax_data::DataError::Io(_)));
}
