//! End-to-end pipeline behavior on the bundled toy corpus.

use std::fs;
use std::path::{Path, PathBuf};

use dpnote_core::corpus::{load_corpus, CorpusRole};
use dpnote_core::pipeline::{
    accountant_plan, run_pipeline, ConfigOverrides, PipelineConfig, PipelineError,
};
use dpnote_core::privacy::compose;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn toy_config(out: &Path) -> PipelineConfig {
    let mut config = PipelineConfig::default();
    config.paths.public = fixture("toy_public.jsonl");
    config.paths.private_train = fixture("toy_train.jsonl");
    config.paths.private_test = fixture("toy_test.jsonl");
    config.paths.lexicon = fixture("toy_lexicon.txt");
    config.paths.output_dir = out.to_path_buf();
    config.budgets.epsilon_n = 8.0;
    config.budgets.epsilon_t = Some(5.0);
    config.generation.max_tokens = 96;
    config.run.seed = 1234;
    config
}

#[test]
fn full_run_produces_corpus_reports_and_budget() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_config(dir.path());
    let (synthetic, report) = run_pipeline(&config).unwrap();

    // One synthetic note per private-test note, ids and labels carried over.
    let test = load_corpus(fixture("toy_test.jsonl"), CorpusRole::PrivateTest).unwrap();
    assert_eq!(synthetic.len(), test.len());
    for (s, t) in synthetic.notes.iter().zip(test.notes.iter()) {
        assert_eq!(s.id, t.id);
        assert_eq!(s.labels, t.labels);
        assert!(!s.text.is_empty());
    }

    // Ledger: note-generation on train, term-generation on test; overall
    // budget is the componentwise max and matches compose exactly.
    assert_eq!(report.ledger.len(), 2);
    assert_eq!(report.overall_budget, compose(&report.ledger).unwrap());
    assert_eq!(report.overall_budget.epsilon, 8.0);
    let deltas: Vec<f64> = report
        .ledger
        .entries()
        .iter()
        .map(|e| e.budget.delta)
        .collect();
    assert_eq!(
        report.overall_budget.delta,
        deltas.iter().cloned().fold(0.0, f64::max)
    );

    // Outputs on disk.
    let synth_path = dir.path().join("synthetic.jsonl");
    let report_path = dir.path().join("run_report.json");
    assert!(synth_path.exists());
    assert!(report_path.exists());
    let reloaded = load_corpus(&synth_path, CorpusRole::Synthetic).unwrap();
    assert_eq!(reloaded.notes, synthetic.notes);
    let report_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report_json.get("evaluation").is_some());
    assert!(report_json.get("ledger").is_some());

    // Evaluation ran, probe attached.
    assert!(report.evaluation.length.kl.is_finite());
    assert!(report.evaluation.privacy_probe.is_some());
    assert!(report.evaluation.mauve.is_none());
    // Stage timings recorded for every stage.
    for stage in ["load", "split", "train", "terms", "generate", "evaluate"] {
        assert!(report.stage_seconds.contains_key(stage), "missing {stage}");
    }
}

#[test]
fn same_seed_reproduces_bytes_different_seed_differs() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let dir_c = tempfile::tempdir().unwrap();
    run_pipeline(&toy_config(dir_a.path())).unwrap();
    run_pipeline(&toy_config(dir_b.path())).unwrap();
    let bytes_a = fs::read(dir_a.path().join("synthetic.jsonl")).unwrap();
    let bytes_b = fs::read(dir_b.path().join("synthetic.jsonl")).unwrap();
    assert_eq!(bytes_a, bytes_b, "same seed must reproduce bytes");

    let mut other = toy_config(dir_c.path());
    other.run.seed = 99;
    run_pipeline(&other).unwrap();
    let bytes_c = fs::read(dir_c.path().join("synthetic.jsonl")).unwrap();
    assert_ne!(bytes_a, bytes_c, "different seed should change output");
}

#[test]
fn term_privatization_disabled_costs_only_note_budget() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = toy_config(dir.path());
    config.budgets.epsilon_t = None;
    config.evaluation.run_probe = false;
    let (_, report) = run_pipeline(&config).unwrap();
    assert_eq!(report.ledger.len(), 1);
    assert_eq!(report.overall_budget.epsilon, 8.0);
    assert!(report
        .caveats
        .iter()
        .any(|c| c.contains("term privatization is disabled")));
}

#[test]
fn failed_run_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = toy_config(dir.path());
    config.paths.lexicon = fixture("does_not_exist.txt");
    let err = run_pipeline(&config).unwrap_err();
    match &err {
        PipelineError::Stage { stage, .. } => assert_eq!(*stage, "load"),
        other => panic!("unexpected error {other}"),
    }
    assert!(!dir.path().join("synthetic.jsonl").exists());
    assert!(!dir.path().join("run_report.json").exists());
}

#[test]
fn overrides_change_effective_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = toy_config(dir.path());
    config.apply_overrides(&ConfigOverrides {
        epsilon_n: Some(2.0),
        epsilon_t: None,
        seed: Some(5),
        output_dir: None,
    });
    let plan = accountant_plan(&config, 30, 10).unwrap();
    assert_eq!(plan.overall_budget.epsilon, 5.0f64.max(2.0));
    assert!(plan
        .caveats
        .iter()
        .any(|c| c.contains("epsilon = 5") || c.contains("epsilon = 2")));
}

#[test]
fn accountant_plan_matches_run_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = toy_config(dir.path());
    config.evaluation.run_probe = false;
    let plan = accountant_plan(&config, 30, 10).unwrap();
    let (_, report) = run_pipeline(&config).unwrap();
    assert_eq!(plan.ledger, report.ledger);
    assert_eq!(plan.overall_budget, report.overall_budget);
}
