//! Note and corpus data model plus JSON-Lines ingestion.
//!
//! A corpus file holds one JSON object per line with keys `id`, `text`,
//! `labels` (in that order; `labels` omitted when absent). Text bytes are
//! preserved exactly at load time; any normalization happens inside the
//! consumers, which keeps the section-reconstruction invariant exact.
//! Canonically formatted files (the output of [`save_corpus`]) round-trip
//! byte-for-byte; label sets are stored sorted and deduplicated.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::structuring::SectionGroup;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: duplicate note id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: empty note id")]
    EmptyId { line: usize },
    #[error("corpus file is empty: {path}")]
    EmptyFile { path: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Which slice of the data a corpus represents. The role is fixed at load
/// time and propagated to the privacy accountant; public data never incurs
/// a privacy cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusRole {
    Public,
    PrivateTrain,
    PrivateTest,
    Synthetic,
}

impl CorpusRole {
    pub fn is_private(&self) -> bool {
        matches!(self, CorpusRole::PrivateTrain | CorpusRole::PrivateTest)
    }
}

impl std::fmt::Display for CorpusRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CorpusRole::Public => "public",
            CorpusRole::PrivateTrain => "private-train",
            CorpusRole::PrivateTest => "private-test",
            CorpusRole::Synthetic => "synthetic",
        };
        f.write_str(s)
    }
}

/// A single document. `labels` stands in for diagnosis-code groups and is
/// only consumed by the utility evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeSet<String>>,
}

impl Note {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            labels: None,
        }
    }

    /// Empty-text notes are accepted but flagged; downstream stages skip
    /// them with a warning.
    pub fn is_degenerate(&self) -> bool {
        self.text.is_empty()
    }
}

/// An ordered collection of notes with unique ids and a fixed role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub notes: Vec<Note>,
    pub role: CorpusRole,
}

impl Corpus {
    pub fn new(notes: Vec<Note>, role: CorpusRole) -> Self {
        Self { notes, role }
    }

    pub fn len(&self) -> usize {
        self.notes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }
}

/// One section of a note: its group, the exact matched title bytes, and the
/// body running up to the next title. `char_span` is the byte range
/// `[start, end)` of `title_text + body` within the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionSpan {
    pub group: SectionGroup,
    pub title_text: String,
    pub body: String,
    pub char_span: (usize, usize),
}

/// A note decomposed into at most six group sections. Concatenating
/// `residual_prefix` with every section's `title_text + body` reproduces
/// the source text byte-for-byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionedNote {
    pub note_id: String,
    pub residual_prefix: String,
    pub sections: Vec<SectionSpan>,
    /// Set when no section title was detected at all.
    pub degenerate: bool,
}

impl SectionedNote {
    /// Rebuilds the original text from the decomposition.
    pub fn reconstruct(&self) -> String {
        let mut out = self.residual_prefix.clone();
        for sec in &self.sections {
            out.push_str(&sec.title_text);
            out.push_str(&sec.body);
        }
        out
    }
}

fn parse_record(line_no: usize, line: &str) -> Result<Note, CorpusError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| CorpusError::MalformedLine {
            line: line_no,
            reason: e.to_string(),
        })?;
    let obj = value.as_object().ok_or_else(|| CorpusError::MalformedLine {
        line: line_no,
        reason: "record is not a JSON object".into(),
    })?;
    for key in obj.keys() {
        if key != "id" && key != "text" && key != "labels" {
            return Err(CorpusError::MalformedLine {
                line: line_no,
                reason: format!("unknown key {key:?}"),
            });
        }
    }
    let note: Note = serde_json::from_value(value).map_err(|e| CorpusError::MalformedLine {
        line: line_no,
        reason: e.to_string(),
    })?;
    if note.id.is_empty() {
        return Err(CorpusError::EmptyId { line: line_no });
    }
    Ok(note)
}

/// Loads a JSON-Lines corpus, preserving note order. Rejects duplicate ids
/// (reporting the line of the second occurrence) and empty files.
pub fn load_corpus(path: impl AsRef<Path>, role: CorpusRole) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let corpus = parse_corpus_str(&contents, role)?;
    if corpus.is_empty() {
        return Err(CorpusError::EmptyFile {
            path: path.display().to_string(),
        });
    }
    Ok(corpus)
}

/// Parses corpus records from an in-memory string. Blank lines are ignored;
/// an input with no records yields an empty corpus (only [`load_corpus`]
/// treats that as an error).
pub fn parse_corpus_str(contents: &str, role: CorpusRole) -> Result<Corpus, CorpusError> {
    let mut notes = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (idx, line) in contents.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let note = parse_record(line_no, line)?;
        if !seen.insert(note.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: note.id,
            });
        }
        notes.push(note);
    }
    Ok(Corpus::new(notes, role))
}

/// Renders a corpus in canonical form: one record per line, keys in the
/// fixed order `id`, `text`, `labels`, LF endings.
pub fn corpus_to_string(corpus: &Corpus) -> String {
    let mut out = String::new();
    for note in &corpus.notes {
        // serde emits struct fields in declaration order, which matches the
        // schema's fixed key order.
        out.push_str(&serde_json::to_string(note).expect("note serialization cannot fail"));
        out.push('\n');
    }
    out
}

/// Writes a corpus to disk in the canonical JSON-Lines form.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let rendered = corpus_to_string(corpus);
    let mut file = fs::File::create(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(rendered.as_bytes())
        .map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn fixture_corpus() -> Corpus {
        let mut labels = BTreeSet::new();
        labels.insert("c01".to_string());
        labels.insert("c07".to_string());
        Corpus::new(
            vec![
                Note {
                    id: "n1".into(),
                    text: "Chief Complaint: chest pain\n".into(),
                    labels: Some(labels),
                },
                Note::new("n2", "Physical Exam: clear lungs\n"),
                Note::new("n3", ""),
                Note::new("n4", "plain text, no sections"),
                Note::new("n5", "unicode: müde, 37.5°C"),
            ],
            CorpusRole::PrivateTrain,
        )
    }

    #[test]
    fn load_two_records_in_order() {
        let input = r#"{"id":"a","text":"first"}
{"id":"b","text":"second","labels":["x"]}
"#;
        let corpus = parse_corpus_str(input, CorpusRole::Public).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.notes[0].id, "a");
        assert_eq!(corpus.notes[1].id, "b");
        assert_eq!(
            corpus.notes[1].labels.as_ref().unwrap().iter().next().unwrap(),
            "x"
        );
    }

    #[test]
    fn duplicate_id_names_second_line() {
        let input = "{\"id\":\"n1\",\"text\":\"a\"}\n{\"id\":\"n2\",\"text\":\"b\"}\n{\"id\":\"n1\",\"text\":\"c\"}\n";
        let err = parse_corpus_str(input, CorpusRole::Public).unwrap_err();
        match err {
            CorpusError::DuplicateId { line, id } => {
                assert_eq!(line, 3);
                assert_eq!(id, "n1");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = "{\"id\":\"n1\",\"text\":\"a\"}\nnot json\n";
        let err = parse_corpus_str(input, CorpusRole::Public).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedLine { line: 2, .. }));
    }

    #[test]
    fn unknown_key_rejected() {
        let input = "{\"id\":\"n1\",\"text\":\"a\",\"extra\":1}\n";
        let err = parse_corpus_str(input, CorpusRole::Public).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn empty_file_rejected_on_load() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        fs::write(&path, "").unwrap();
        let err = load_corpus(&path, CorpusRole::Public).unwrap_err();
        assert!(matches!(err, CorpusError::EmptyFile { .. }));
    }

    #[test]
    fn save_empty_corpus_is_empty_file() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        save_corpus(&Corpus::new(vec![], CorpusRole::Synthetic), &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
    }

    #[test]
    fn save_one_note_is_one_line() {
        let corpus = Corpus::new(vec![Note::new("a", "hi")], CorpusRole::Synthetic);
        let rendered = corpus_to_string(&corpus);
        assert_eq!(rendered.lines().count(), 1);
        assert_eq!(rendered, "{\"id\":\"a\",\"text\":\"hi\"}\n");
    }

    // Golden-file oracle: the canonical rendering of the 5-note fixture,
    // written out by hand from the schema (id, text, labels; LF endings).
    const GOLDEN: &str = concat!(
        "{\"id\":\"n1\",\"text\":\"Chief Complaint: chest pain\\n\",\"labels\":[\"c01\",\"c07\"]}\n",
        "{\"id\":\"n2\",\"text\":\"Physical Exam: clear lungs\\n\"}\n",
        "{\"id\":\"n3\",\"text\":\"\"}\n",
        "{\"id\":\"n4\",\"text\":\"plain text, no sections\"}\n",
        "{\"id\":\"n5\",\"text\":\"unicode: müde, 37.5°C\"}\n",
    );

    #[test]
    fn round_trip_is_byte_identical_on_golden_fixture() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("golden.jsonl");
        fs::write(&path, GOLDEN).unwrap();
        let corpus = load_corpus(&path, CorpusRole::PrivateTrain).unwrap();
        assert_eq!(corpus, fixture_corpus());
        let out = dir.path().join("resaved.jsonl");
        save_corpus(&corpus, &out).unwrap();
        assert_eq!(fs::read(&out).unwrap(), GOLDEN.as_bytes());
    }

    #[test]
    fn degenerate_flag_tracks_empty_text() {
        assert!(Note::new("x", "").is_degenerate());
        assert!(!Note::new("x", "a").is_degenerate());
    }
}
