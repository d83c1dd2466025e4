//! Rule-based segmentation of a note into at most six section groups.
//!
//! Titles are matched case-insensitively at line starts and must be
//! followed by a colon or the end of the line, which keeps inline mentions
//! ("the chief complaint was...") from opening sections. Each raw section
//! runs greedily from its title to the next detected title. Consecutive raw
//! sections of the same group merge by span extension, so absorbed titles
//! stay in the merged body and reconstruction remains byte-exact. A title
//! whose group already closed earlier in the note is not treated as a new
//! boundary: its text stays in the enclosing section's body. Together these
//! rules guarantee at most one section per group and exact byte
//! reconstruction for every input.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Note, SectionSpan, SectionedNote};

#[derive(Debug, thiserror::Error)]
pub enum RulesError {
    #[error("line {line}: expected `<group-key>TAB<title>`")]
    MalformedRule { line: usize },
    #[error("line {line}: unknown group key {key:?}")]
    UnknownGroup { line: usize, key: String },
    #[error("line {line}: empty title")]
    EmptyTitle { line: usize },
    #[error("rules file has no rules")]
    NoRules,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The six standardized section groups, in taxonomy order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum SectionGroup {
    PatientInformation,
    ClinicalCourseHistory,
    ExaminationsFindings,
    LaboratoryImagingResults,
    HospitalStayTreatment,
    MedicationsDischargePlan,
}

impl SectionGroup {
    pub const ALL: [SectionGroup; 6] = [
        SectionGroup::PatientInformation,
        SectionGroup::ClinicalCourseHistory,
        SectionGroup::ExaminationsFindings,
        SectionGroup::LaboratoryImagingResults,
        SectionGroup::HospitalStayTreatment,
        SectionGroup::MedicationsDischargePlan,
    ];

    /// Canonical display name.
    pub fn display_name(&self) -> &'static str {
        match self {
            SectionGroup::PatientInformation => "Patient Information",
            SectionGroup::ClinicalCourseHistory => "Clinical Course & History",
            SectionGroup::ExaminationsFindings => "Examinations & Findings",
            SectionGroup::LaboratoryImagingResults => "Laboratory & Imaging Results",
            SectionGroup::HospitalStayTreatment => "Hospital Stay & Treatment",
            SectionGroup::MedicationsDischargePlan => "Medications & Discharge Plan",
        }
    }

    /// Identifier used in rules files.
    pub fn key(&self) -> &'static str {
        match self {
            SectionGroup::PatientInformation => "patient_information",
            SectionGroup::ClinicalCourseHistory => "clinical_course_history",
            SectionGroup::ExaminationsFindings => "examinations_findings",
            SectionGroup::LaboratoryImagingResults => "laboratory_imaging_results",
            SectionGroup::HospitalStayTreatment => "hospital_stay_treatment",
            SectionGroup::MedicationsDischargePlan => "medications_discharge_plan",
        }
    }

    pub fn from_key(key: &str) -> Option<SectionGroup> {
        SectionGroup::ALL.into_iter().find(|g| g.key() == key)
    }
}

impl std::fmt::Display for SectionGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.display_name())
    }
}

/// A literal section title mapped to its group. Matching is
/// case-insensitive and tolerant of repeated internal whitespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TitleRule {
    pub title: String,
    pub group: SectionGroup,
    /// Lowercased whitespace-split words, precomputed for matching.
    words: Vec<String>,
}

impl TitleRule {
    pub fn new(title: impl Into<String>, group: SectionGroup) -> Self {
        let title = title.into();
        let words = title
            .split_whitespace()
            .map(|w| w.to_lowercase())
            .collect();
        Self { title, group, words }
    }
}

/// Default rule set: the grouped section titles of the standard taxonomy.
pub fn default_rules() -> Vec<TitleRule> {
    use SectionGroup::*;
    let table: &[(SectionGroup, &[&str])] = &[
        (
            PatientInformation,
            &[
                "Name",
                "Unit No",
                "Admission Date",
                "Discharge Date",
                "Date of Birth",
                "Sex",
                "Service",
                "Allergies",
                "Attending",
            ],
        ),
        (
            ClinicalCourseHistory,
            &[
                "Chief Complaint",
                "Major Surgical or Invasive Procedure",
                "History of Present Illness",
                "Review of Systems",
                "Past Medical History",
                "Social History",
                "Family History",
            ],
        ),
        (ExaminationsFindings, &["Physical Exam"]),
        (LaboratoryImagingResults, &["Pertinent Results"]),
        (HospitalStayTreatment, &["Brief Hospital Course"]),
        (
            MedicationsDischargePlan,
            &[
                "Medications on Admission",
                "Discharge Medications",
                "Discharge Disposition",
                "Discharge Diagnosis",
                "Discharge Condition",
                "Discharge Instructions",
                "Followup Instructions",
            ],
        ),
    ];
    let mut rules = Vec::new();
    for (group, titles) in table {
        for title in *titles {
            rules.push(TitleRule::new(*title, *group));
        }
    }
    rules
}

/// Loads rules from a UTF-8 file of `<group-key>TAB<title>` lines.
/// `#` lines and blank lines are ignored.
pub fn load_rules(path: impl AsRef<Path>) -> Result<Vec<TitleRule>, RulesError> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|source| RulesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_rules_str(&contents)
}

pub fn parse_rules_str(contents: &str) -> Result<Vec<TitleRule>, RulesError> {
    let mut rules = Vec::new();
    for (idx, raw) in contents.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, title) = raw
            .split_once('\t')
            .ok_or(RulesError::MalformedRule { line })?;
        let group = SectionGroup::from_key(key.trim())
            .ok_or_else(|| RulesError::UnknownGroup {
                line,
                key: key.trim().to_string(),
            })?;
        let title = title.trim();
        if title.is_empty() {
            return Err(RulesError::EmptyTitle { line });
        }
        rules.push(TitleRule::new(title, group));
    }
    if rules.is_empty() {
        return Err(RulesError::NoRules);
    }
    Ok(rules)
}

/// Case-insensitive, whitespace-normalized lookup of a title's group.
pub fn group_of_title(title: &str, rules: &[TitleRule]) -> Option<SectionGroup> {
    let normalized: Vec<String> = title
        .split_whitespace()
        .map(|w| w.to_lowercase())
        .collect();
    if normalized.is_empty() {
        return None;
    }
    rules
        .iter()
        .find(|r| r.words == normalized)
        .map(|r| r.group)
}

/// A detected title occurrence: the byte range of the matched text
/// (including a trailing colon when present) and its group.
#[derive(Debug, Clone, Copy)]
struct TitleMatch {
    start: usize,
    title_end: usize,
    rule_idx: usize,
}

/// Tries to match any rule at `pos` (a line start). Returns the longest
/// match; ties go to the earlier rule.
fn match_title_at(text: &str, pos: usize, rules: &[TitleRule]) -> Option<TitleMatch> {
    let mut best: Option<TitleMatch> = None;
    for (rule_idx, rule) in rules.iter().enumerate() {
        let mut cursor = pos;
        let mut matched = true;
        for (wi, word) in rule.words.iter().enumerate() {
            if wi > 0 {
                // One or more spaces/tabs between title words.
                let ws_start = cursor;
                while text[cursor..].starts_with(' ') || text[cursor..].starts_with('\t') {
                    cursor += 1;
                }
                if cursor == ws_start {
                    matched = false;
                    break;
                }
            }
            let rest = &text[cursor..];
            if rest.len() >= word.len()
                && rest.is_char_boundary(word.len())
                && rest[..word.len()].to_lowercase() == *word
            {
                cursor += word.len();
            } else {
                matched = false;
                break;
            }
        }
        if !matched {
            continue;
        }
        // Optional horizontal whitespace, then a colon or end of line.
        let mut end = cursor;
        while text[end..].starts_with(' ') || text[end..].starts_with('\t') {
            end += 1;
        }
        let title_end = if text[end..].starts_with(':') {
            end + 1
        } else if text[end..].is_empty() || text[end..].starts_with('\n') || text[end..].starts_with('\r') {
            // Bare-line form: the line break belongs to the body.
            cursor
        } else {
            continue;
        };
        let better = match best {
            None => true,
            Some(b) => title_end - pos > b.title_end - b.start,
        };
        if better {
            best = Some(TitleMatch {
                start: pos,
                title_end,
                rule_idx,
            });
        }
    }
    best
}

fn line_starts(text: &str) -> Vec<usize> {
    let mut starts = vec![0];
    for (i, b) in text.bytes().enumerate() {
        if b == b'\n' && i + 1 < text.len() {
            starts.push(i + 1);
        }
    }
    starts
}

/// Splits a note into section-group spans. Never fails: a note with no
/// recognizable titles comes back with zero sections, the full text in
/// `residual_prefix`, and the degenerate flag set.
pub fn split_sections(note: &Note, rules: &[TitleRule]) -> SectionedNote {
    let text = note.text.as_str();
    let mut matches: Vec<TitleMatch> = Vec::new();
    for start in line_starts(text) {
        if let Some(m) = match_title_at(text, start, rules) {
            matches.push(m);
        }
    }

    if matches.is_empty() {
        return SectionedNote {
            note_id: note.id.clone(),
            residual_prefix: text.to_string(),
            sections: Vec::new(),
            degenerate: true,
        };
    }

    let residual_prefix = text[..matches[0].start].to_string();

    // (group, title span, full span end) per emitted section.
    struct Open {
        group: SectionGroup,
        title_start: usize,
        title_end: usize,
        end: usize,
    }
    let mut sections: Vec<Open> = Vec::new();
    let mut closed: BTreeMap<SectionGroup, ()> = BTreeMap::new();

    for (i, m) in matches.iter().enumerate() {
        let group = rules[m.rule_idx].group;
        let span_end = matches.get(i + 1).map(|n| n.start).unwrap_or(text.len());
        match sections.last_mut() {
            Some(last) if last.group == group => {
                // Consecutive same-group title: extend, absorbing the title
                // bytes into the body.
                last.end = span_end;
            }
            Some(last) if closed.contains_key(&group) => {
                // Group reappeared after closing; the title is not a
                // boundary and its bytes stay in the current body.
                last.end = span_end;
            }
            _ => {
                if let Some(prev) = sections.last() {
                    closed.insert(prev.group, ());
                }
                sections.push(Open {
                    group,
                    title_start: m.start,
                    title_end: m.title_end,
                    end: span_end,
                });
            }
        }
    }

    let sections = sections
        .into_iter()
        .map(|s| SectionSpan {
            group: s.group,
            title_text: text[s.title_start..s.title_end].to_string(),
            body: text[s.title_end..s.end].to_string(),
            char_span: (s.title_start, s.end),
        })
        .collect();

    SectionedNote {
        note_id: note.id.clone(),
        residual_prefix,
        sections,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn note(text: &str) -> Note {
        Note::new("t", text)
    }

    #[test]
    fn two_titles_two_sections() {
        let rules = default_rules();
        let n = note("Chief Complaint: chest pain\nPhysical Exam: clear lungs");
        let split = split_sections(&n, &rules);
        assert_eq!(split.sections.len(), 2);
        assert_eq!(split.sections[0].group, SectionGroup::ClinicalCourseHistory);
        assert_eq!(split.sections[1].group, SectionGroup::ExaminationsFindings);
        assert_eq!(split.sections[0].title_text, "Chief Complaint:");
        assert_eq!(split.sections[0].body, " chest pain\n");
        assert_eq!(split.reconstruct(), n.text);
    }

    #[test]
    fn no_titles_goes_to_residual() {
        let rules = default_rules();
        let n = note("just a narrative with the chief complaint mentioned inline");
        let split = split_sections(&n, &rules);
        assert!(split.sections.is_empty());
        assert!(split.degenerate);
        assert_eq!(split.residual_prefix, n.text);
        assert_eq!(split.reconstruct(), n.text);
    }

    #[test]
    fn inline_mention_is_not_a_title() {
        let rules = default_rules();
        // At line start but no colon and not alone on the line.
        let n = note("Chief Complaint was never recorded\nPhysical Exam: ok");
        let split = split_sections(&n, &rules);
        assert_eq!(split.sections.len(), 1);
        assert_eq!(split.sections[0].group, SectionGroup::ExaminationsFindings);
        assert_eq!(split.reconstruct(), n.text);
    }

    #[test]
    fn bare_line_title_matches() {
        let rules = default_rules();
        let n = note("Physical Exam\nclear lungs\n");
        let split = split_sections(&n, &rules);
        assert_eq!(split.sections.len(), 1);
        assert_eq!(split.sections[0].title_text, "Physical Exam");
        assert_eq!(split.sections[0].body, "\nclear lungs\n");
        assert_eq!(split.reconstruct(), n.text);
    }

    #[test]
    fn consecutive_same_group_titles_merge() {
        let rules = default_rules();
        let n = note("Name: A\nUnit No: 1\nSex: F\nChief Complaint: cough\n");
        let split = split_sections(&n, &rules);
        assert_eq!(split.sections.len(), 2);
        assert_eq!(split.sections[0].group, SectionGroup::PatientInformation);
        assert_eq!(split.sections[0].title_text, "Name:");
        assert!(split.sections[0].body.contains("Unit No: 1"));
        assert_eq!(split.reconstruct(), n.text);
    }

    #[test]
    fn reopened_group_does_not_split() {
        let rules = default_rules();
        let n = note("Name: A\nChief Complaint: cough\nSex: F\nmore history\n");
        let split = split_sections(&n, &rules);
        assert_eq!(split.sections.len(), 2);
        // "Sex: F" stays inside the clinical-course body.
        assert!(split.sections[1].body.contains("Sex: F"));
        let mut groups: Vec<_> = split.sections.iter().map(|s| s.group).collect();
        groups.dedup();
        assert_eq!(groups.len(), split.sections.len());
        assert_eq!(split.reconstruct(), n.text);
    }

    #[test]
    fn six_groups_in_taxonomy_order() {
        let rules = default_rules();
        let n = note(
            "Name: X\nHistory of Present Illness: fell ill\nPhysical Exam: stable\n\
             Pertinent Results: wbc 11\nBrief Hospital Course: improved\n\
             Discharge Medications: aspirin\n",
        );
        let split = split_sections(&n, &rules);
        assert_eq!(split.sections.len(), 6);
        let groups: Vec<_> = split.sections.iter().map(|s| s.group).collect();
        assert_eq!(groups, SectionGroup::ALL.to_vec());
        assert_eq!(split.reconstruct(), n.text);
    }

    #[test]
    fn preamble_text_preserved() {
        let rules = default_rules();
        let n = note("unstructured preamble\nPhysical Exam: fine\n");
        let split = split_sections(&n, &rules);
        assert_eq!(split.residual_prefix, "unstructured preamble\n");
        assert_eq!(split.reconstruct(), n.text);
    }

    #[test]
    fn idempotent_on_rendered_output() {
        let rules = default_rules();
        let n = note("Chief Complaint: pain\nPhysical Exam: ok\n");
        let first = split_sections(&n, &rules);
        let again = split_sections(&note(&first.reconstruct()), &rules);
        assert_eq!(first.sections.len(), again.sections.len());
        for (a, b) in first.sections.iter().zip(again.sections.iter()) {
            assert_eq!(a.group, b.group);
            assert_eq!(a.title_text, b.title_text);
            assert_eq!(a.body, b.body);
        }
    }

    #[test]
    fn group_lookup_matches_taxonomy() {
        let rules = default_rules();
        assert_eq!(
            group_of_title("Brief Hospital Course", &rules),
            Some(SectionGroup::HospitalStayTreatment)
        );
        assert_eq!(
            group_of_title("discharge   medications", &rules),
            Some(SectionGroup::MedicationsDischargePlan)
        );
        assert_eq!(group_of_title("Weather Report", &rules), None);
    }

    #[test]
    fn every_default_title_resolves_to_its_group() {
        let rules = default_rules();
        for rule in &rules {
            assert_eq!(group_of_title(&rule.title, &rules), Some(rule.group));
        }
        // One rule per table title, no duplicate patterns.
        let mut seen = std::collections::BTreeSet::new();
        for rule in &rules {
            assert!(seen.insert(rule.words.clone()), "duplicate rule {:?}", rule.title);
        }
    }

    #[test]
    fn rules_file_round_trip() {
        let rendered: String = default_rules()
            .iter()
            .map(|r| format!("{}\t{}\n", r.group.key(), r.title))
            .collect();
        let parsed = parse_rules_str(&format!("# comment\n\n{rendered}")).unwrap();
        assert_eq!(parsed, default_rules());
    }

    #[test]
    fn rules_file_errors() {
        assert!(matches!(
            parse_rules_str("no tab here").unwrap_err(),
            RulesError::MalformedRule { line: 1 }
        ));
        assert!(matches!(
            parse_rules_str("bogus_group\tTitle").unwrap_err(),
            RulesError::UnknownGroup { line: 1, .. }
        ));
        assert!(matches!(parse_rules_str("#only\n").unwrap_err(), RulesError::NoRules));
    }

    #[test]
    fn crlf_text_reconstructs() {
        let rules = default_rules();
        let n = note("Chief Complaint: pain\r\nPhysical Exam: ok\r\n");
        let split = split_sections(&n, &rules);
        assert_eq!(split.sections.len(), 2);
        assert_eq!(split.reconstruct(), n.text);
    }
}
