//! The pipeline run: stage ordering, the accountant, and output files.

use std::collections::BTreeMap;
use std::fs;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::{at_stage, PipelineError, StageError};
use crate::corpus::{load_corpus, save_corpus, Corpus, CorpusRole, Note, SectionedNote};
use crate::eval::{evaluate_corpora, privacy_probe, EvalConfig, EvalReport};
use crate::generation::{
    build_universe, generate_candidates, tokenize, train_dp_ngram, DecodingParams, DpNgramModel,
    NoteSections,
};
use crate::privacy::{
    clip_rows, compose, dprp_perturb, per_section_budget, AccountantLedger, DataPartition,
    DprpParams, EmbeddingMatrix, PrivacyBudget,
};
use crate::quality::{reject_long_sentences, select_best, NgramScorer};
use crate::rng::SeedSource;
use crate::structuring::{default_rules, load_rules, split_sections, TitleRule};
use crate::terms::{decode_terms, embed_terms, extract_terms, Lexicon, LexiconEmbeddings, TermList};

/// Basic shape statistics of one corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub notes: usize,
    pub mean_tokens: f64,
    pub mean_sections: f64,
}

/// Everything a run produced besides the synthetic corpus itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub overall_budget: PrivacyBudget,
    pub ledger: AccountantLedger,
    pub config: PipelineConfig,
    pub corpus_stats: BTreeMap<String, CorpusStats>,
    pub evaluation: EvalReport,
    pub stage_seconds: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub caveats: Vec<String>,
}

/// The budget plan for a configuration: the ledger entries a run would
/// record and their composition, for inspection before spending anything.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccountantPlan {
    pub ledger: AccountantLedger,
    pub overall_budget: PrivacyBudget,
    pub caveats: Vec<String>,
}

fn corpus_stats(corpus: &Corpus, sectioned: &[SectionedNote]) -> CorpusStats {
    let n = corpus.len().max(1);
    let tokens: usize = corpus.notes.iter().map(|x| tokenize(&x.text).len()).sum();
    let sections: usize = sectioned.iter().map(|s| s.sections.len()).sum();
    CorpusStats {
        notes: corpus.len(),
        mean_tokens: tokens as f64 / n as f64,
        mean_sections: sections as f64 / n as f64,
    }
}

fn gaussian_regime_caveat(name: &str, budget: PrivacyBudget) -> Option<String> {
    (budget.epsilon.is_finite() && budget.epsilon > 1.0).then(|| {
        format!(
            "{name} runs at epsilon = {} > 1; the classical Gaussian-mechanism \
             calibration is kept as the mechanism's convention in that regime",
            budget.epsilon
        )
    })
}

fn build_caveats(note_budget: PrivacyBudget, term_budget: Option<PrivacyBudget>) -> Vec<String> {
    let mut caveats = Vec::new();
    if let Some(c) = gaussian_regime_caveat("note generation", note_budget) {
        caveats.push(c);
    }
    match term_budget {
        Some(b) => {
            if let Some(c) = gaussian_regime_caveat("term generation", b) {
                caveats.push(c);
            }
        }
        None => caveats.push(
            "term privatization is disabled: synthetic notes condition on the source \
             notes' extracted terms and the guarantee covers the note-generation \
             training partition only"
                .to_string(),
        ),
    }
    caveats
}

fn planned_ledger(
    note_budget: PrivacyBudget,
    term_budget: Option<PrivacyBudget>,
) -> AccountantLedger {
    let mut ledger = AccountantLedger::new();
    ledger.record_mechanism(
        "note-generation",
        note_budget,
        DataPartition::new(CorpusRole::PrivateTrain, "train"),
    );
    if let Some(b) = term_budget {
        ledger.record_mechanism(
            "term-generation",
            b,
            DataPartition::new(CorpusRole::PrivateTest, "test"),
        );
    }
    ledger
}

/// Computes the budget plan without touching any data beyond corpus sizes.
pub fn accountant_plan(
    config: &PipelineConfig,
    train_size: usize,
    test_size: usize,
) -> Result<AccountantPlan, PipelineError> {
    let note_budget = config.note_budget(train_size)?;
    let term_budget = config.term_budget(test_size)?;
    let ledger = planned_ledger(note_budget, term_budget);
    let overall_budget = compose(&ledger)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    Ok(AccountantPlan {
        ledger,
        overall_budget,
        caveats: build_caveats(note_budget, term_budget),
    })
}

struct StageClock {
    seconds: BTreeMap<String, f64>,
}

impl StageClock {
    fn new() -> Self {
        Self {
            seconds: BTreeMap::new(),
        }
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.seconds
            .insert(stage.to_string(), start.elapsed().as_secs_f64());
        out
    }
}

/// Term lists for one note's sections, privatised when a term budget is
/// present.
fn note_term_lists(
    sectioned: &SectionedNote,
    lexicon: &Lexicon,
    lexicon_embeddings: Option<&LexiconEmbeddings>,
    term_budget: Option<PrivacyBudget>,
    decode_count: usize,
    config: &PipelineConfig,
    seeds: &SeedSource,
) -> Result<Vec<TermList>, StageError> {
    let source_lists: Vec<TermList> = sectioned
        .sections
        .iter()
        .map(|sec| extract_terms(&sec.body, lexicon, config.terms.threshold, sec.group))
        .collect();
    let Some(budget) = term_budget else {
        return Ok(source_lists);
    };
    if source_lists.is_empty() {
        return Ok(source_lists);
    }
    let embeddings = lexicon_embeddings.expect("embeddings built when term budget set");
    let dim = config.terms.embedding_dim;
    let mut rows = Vec::with_capacity(source_lists.len());
    for list in &source_lists {
        rows.push(embed_terms(list, dim)?);
    }
    let matrix = EmbeddingMatrix::from_rows(&rows).expect("rows share dimension");
    let clipped = clip_rows(&matrix, 1.0);
    let section_budget = per_section_budget(budget, source_lists.len())?;
    let params = DprpParams {
        rank_fraction: config.terms.rank_fraction,
        allocation: config.terms.allocation,
    };
    let mut rng = seeds.note_stream("dprp", &sectioned.note_id);
    let perturbed = dprp_perturb(&clipped, section_budget, params, &mut rng)?;
    let mut out = Vec::with_capacity(source_lists.len());
    for (i, list) in source_lists.iter().enumerate() {
        out.push(decode_terms(
            perturbed.row(i),
            embeddings,
            decode_count,
            list.section_group,
        )?);
    }
    Ok(out)
}

/// Generates, filters, and selects one synthetic note.
fn synthesize_note(
    source: &Note,
    term_lists: &[TermList],
    model: &DpNgramModel,
    scorer: &NgramScorer,
    config: &PipelineConfig,
    seeds: &SeedSource,
) -> Result<(Note, Vec<String>), StageError> {
    let mut warnings = Vec::new();
    if source.is_degenerate() || term_lists.is_empty() {
        warnings.push(format!(
            "note {}: no text or no detected sections; emitted an empty synthetic note",
            source.id
        ));
        return Ok((
            Note {
                id: source.id.clone(),
                text: String::new(),
                labels: source.labels.clone(),
            },
            warnings,
        ));
    }
    let params = DecodingParams {
        max_tokens: config.generation.max_tokens,
        temperature: config.generation.temperature,
        repetition_penalty: config.generation.repetition_penalty,
        term_bias: config.generation.term_bias,
        eos_bias: config.generation.eos_bias,
    };
    let mut candidates = Vec::with_capacity(config.generation.candidates);
    for slot in 0..config.generation.candidates {
        let mut accepted = None;
        for attempt in 0..=config.quality.retry_cap {
            let key = format!("{}/c{slot}/a{attempt}", source.id);
            let candidate = generate_candidates(
                model,
                term_lists,
                1,
                seeds,
                &key,
                &config.generation.instruction_template,
                &params,
            )?
            .remove(0);
            if reject_long_sentences(&candidate, config.quality.max_sentence_chars) {
                accepted = Some(candidate);
                break;
            }
            if attempt == config.quality.retry_cap {
                warnings.push(format!(
                    "note {}: candidate {slot} still has an over-long sentence after {} \
                     attempts; accepted best-effort",
                    source.id, config.quality.retry_cap
                ));
                accepted = Some(candidate);
            }
        }
        candidates.push(accepted.expect("loop always accepts"));
    }
    let (_, best) = select_best(&candidates, scorer)?;
    Ok((
        Note {
            id: source.id.clone(),
            text: best.to_string(),
            labels: source.labels.clone(),
        },
        warnings,
    ))
}

fn thread_pool(config: &PipelineConfig) -> Result<rayon::ThreadPool, PipelineError> {
    let mut threads = config.run.threads;
    if let Ok(value) = std::env::var("DPNOTE_THREADS") {
        let cap: usize = value.parse().map_err(|_| {
            PipelineError::Config(format!("DPNOTE_THREADS must be an integer, got {value:?}"))
        })?;
        if cap > 0 {
            threads = if threads == 0 { cap } else { threads.min(cap) };
        }
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))
}

/// Runs the full pipeline and writes `synthetic.jsonl` plus
/// `run_report.json` into the output directory. Any stage failure aborts
/// with a stage-tagged error and removes partial outputs.
pub fn run_pipeline(config: &PipelineConfig) -> Result<(Corpus, RunReport), PipelineError> {
    config.validate()?;
    let result = run_stages(config);
    if result.is_err() {
        for name in ["synthetic.jsonl", "run_report.json"] {
            let _ = fs::remove_file(config.paths.output_dir.join(name));
        }
    }
    result
}

fn run_stages(config: &PipelineConfig) -> Result<(Corpus, RunReport), PipelineError> {
    let mut clock = StageClock::new();
    let mut warnings: Vec<String> = Vec::new();
    let seeds = SeedSource::new(config.run.seed);
    let pool = thread_pool(config)?;

    // Load corpora, lexicon, and section rules.
    let loaded = clock.time("load", || -> Result<_, StageError> {
        let public = load_corpus(&config.paths.public, CorpusRole::Public)?;
        let train = load_corpus(&config.paths.private_train, CorpusRole::PrivateTrain)?;
        let test = load_corpus(&config.paths.private_test, CorpusRole::PrivateTest)?;
        let lexicon = Lexicon::load(&config.paths.lexicon)?;
        let rules: Vec<TitleRule> = match &config.paths.rules {
            Some(path) => load_rules(path)?,
            None => default_rules(),
        };
        Ok((public, train, test, lexicon, rules))
    });
    let (public, train, test, lexicon, rules) = at_stage("load", loaded)?;
    let unlabeled = test.notes.iter().filter(|n| n.labels.is_none()).count();
    if unlabeled > 0 {
        warnings.push(format!(
            "{unlabeled} private-test note(s) carry no labels; kept per configuration"
        ));
    }

    // Section every corpus.
    let (public_split, train_split, test_split) = clock.time("split", || {
        let split_all = |c: &Corpus| -> Vec<SectionedNote> {
            c.notes.iter().map(|n| split_sections(n, &rules)).collect()
        };
        (split_all(&public), split_all(&train), split_all(&test))
    });
    for (name, split) in [("public", &public_split), ("private-train", &train_split)] {
        let degenerate = split.iter().filter(|s| s.degenerate).count();
        if degenerate > 0 {
            warnings.push(format!(
                "{degenerate} {name} note(s) have no detected sections and are skipped in training"
            ));
        }
    }

    let note_budget = config.note_budget(train.len())?;
    let term_budget = config.term_budget(test.len())?;
    let mut ledger = AccountantLedger::new();

    // Train the DP generator on private-train and the public scorer.
    let trained = clock.time("train", || -> Result<_, StageError> {
        let to_sections = |split: &[SectionedNote]| -> Vec<NoteSections> {
            split
                .iter()
                .filter(|s| !s.degenerate && !s.sections.is_empty())
                .map(NoteSections::from_sectioned)
                .collect()
        };
        let public_sections = to_sections(&public_split);
        let train_sections = to_sections(&train_split);
        let universe = build_universe(&public_sections, config.generation.ngram_order)?;
        let mut rng = seeds.stream(&["train-note-generator"]);
        let model = train_dp_ngram(
            &universe,
            &train_sections,
            note_budget,
            config.generation.clip,
            &mut rng,
        )?;
        let public_texts: Vec<&str> = public.notes.iter().map(|n| n.text.as_str()).collect();
        let scorer = NgramScorer::train(
            public_texts.iter().copied(),
            config.quality.scorer_order,
            config.quality.add_k,
        )?;
        Ok((model, scorer, public_sections))
    });
    let (model, scorer, public_sections) = at_stage("train", trained)?;
    ledger.record_mechanism(
        "note-generation",
        note_budget,
        DataPartition::new(CorpusRole::PrivateTrain, "train"),
    );

    // Per-note term lists, privatised when a term budget is configured.
    let term_stage = clock.time("terms", || -> Result<_, StageError> {
        let lexicon_embeddings = match term_budget {
            Some(_) => Some(LexiconEmbeddings::from_lexicon(
                &lexicon,
                config.terms.embedding_dim,
            )?),
            None => None,
        };
        let decode_count = match (term_budget, config.terms.decode_count) {
            (None, _) => 0,
            (Some(_), explicit) if explicit > 0 => explicit.min(lexicon.len()).max(1),
            (Some(_), _) => public_mean_terms_per_section(
                &public_sections,
                &lexicon,
                config.terms.threshold,
            )
            .min(lexicon.len())
            .max(1),
        };
        let lists: Vec<Vec<TermList>> = pool.install(|| {
            test_split
                .par_iter()
                .map(|sectioned| {
                    note_term_lists(
                        sectioned,
                        &lexicon,
                        lexicon_embeddings.as_ref(),
                        term_budget,
                        decode_count,
                        config,
                        &seeds,
                    )
                })
                .collect::<Result<_, StageError>>()
        })?;
        Ok(lists)
    });
    let term_lists = at_stage("terms", term_stage)?;
    if let Some(budget) = term_budget {
        ledger.record_mechanism(
            "term-generation",
            budget,
            DataPartition::new(CorpusRole::PrivateTest, "test"),
        );
    }

    // Generate candidates, filter, and select; pure post-processing, so
    // the ledger is fixed from here on.
    let ledger_len_before_scoring = ledger.len();
    let generated = clock.time("generate", || -> Result<_, StageError> {
        pool.install(|| {
            test.notes
                .par_iter()
                .zip(test_split.par_iter())
                .zip(term_lists.par_iter())
                .map(|((source, _), lists)| {
                    synthesize_note(source, lists, &model, &scorer, config, &seeds)
                })
                .collect::<Result<Vec<_>, StageError>>()
        })
    });
    let outcomes = at_stage("generate", generated)?;
    assert_eq!(
        ledger.len(),
        ledger_len_before_scoring,
        "scoring must not touch the accountant"
    );
    let mut synthetic_notes = Vec::with_capacity(outcomes.len());
    for (note, note_warnings) in outcomes {
        synthetic_notes.push(note);
        warnings.extend(note_warnings);
    }
    let synthetic = Corpus::new(synthetic_notes, CorpusRole::Synthetic);

    // Evaluate the synthetic corpus against the real test notes.
    let eval_stage = clock.time("evaluate", || -> Result<_, StageError> {
        let eval_config = EvalConfig {
            bin_width: config.evaluation.bin_width,
            term_threshold: config.terms.threshold,
            ngram_sizes: config.evaluation.ngram_sizes.clone(),
            embedding_dim: config.terms.embedding_dim,
        };
        let mut report = evaluate_corpora(&test, &synthetic, &lexicon, &eval_config)?;
        if config.evaluation.run_probe {
            report.privacy_probe =
                Some(privacy_probe(&synthetic, &train, config.terms.embedding_dim)?);
        }
        Ok(report)
    });
    let evaluation = at_stage("evaluate", eval_stage)?;

    let overall_budget =
        compose(&ledger).map_err(|e| PipelineError::Config(e.to_string()))?;
    let synthetic_split: Vec<SectionedNote> = synthetic
        .notes
        .iter()
        .map(|n| split_sections(n, &rules))
        .collect();
    let mut corpus_stats_map = BTreeMap::new();
    corpus_stats_map.insert("public".to_string(), corpus_stats(&public, &public_split));
    corpus_stats_map.insert(
        "private-train".to_string(),
        corpus_stats(&train, &train_split),
    );
    corpus_stats_map.insert("private-test".to_string(), corpus_stats(&test, &test_split));
    corpus_stats_map.insert(
        "synthetic".to_string(),
        corpus_stats(&synthetic, &synthetic_split),
    );

    let report = RunReport {
        overall_budget,
        ledger,
        config: config.clone(),
        corpus_stats: corpus_stats_map,
        evaluation,
        stage_seconds: clock.seconds,
        warnings,
        caveats: build_caveats(note_budget, term_budget),
    };

    let write_result = (|| -> Result<(), StageError> {
        fs::create_dir_all(&config.paths.output_dir)?;
        save_corpus(&synthetic, config.paths.output_dir.join("synthetic.jsonl"))?;
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        fs::write(config.paths.output_dir.join("run_report.json"), json)?;
        Ok(())
    })();
    at_stage("write", write_result)?;

    Ok((synthetic, report))
}

/// Rounded mean extracted-terms-per-section over the public corpus, the
/// default decoded-list length. Public data only, so no privacy cost.
fn public_mean_terms_per_section(
    public_sections: &[NoteSections],
    lexicon: &Lexicon,
    threshold: f64,
) -> usize {
    let mut sections = 0usize;
    let mut terms = 0usize;
    for note in public_sections {
        for (group, body) in &note.sections {
            sections += 1;
            terms += extract_terms(body, lexicon, threshold, *group).len();
        }
    }
    if sections == 0 {
        return 1;
    }
    ((terms as f64 / sections as f64).round() as usize).max(1)
}
