//! Append-only ledger of DP mechanism invocations and their composition.
//!
//! Every cost-bearing entry is tagged with the data partition it touched.
//! Mechanisms on disjoint partitions compose in parallel, so the overall
//! guarantee is the componentwise maximum of the entries, never the sum.
//! Post-processing entries document derived computations and carry zero
//! cost. Two cost-bearing entries on the same partition would require
//! sequential composition, which the pipeline never needs; the accountant
//! rejects that case outright.

use serde::{Deserialize, Serialize};

use super::budget::PrivacyBudget;
use super::PrivacyError;
use crate::corpus::CorpusRole;

/// A disjoint slice of the data, identified by corpus role plus a
/// free-form partition key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DataPartition {
    pub role: CorpusRole,
    pub key: String,
}

impl DataPartition {
    pub fn new(role: CorpusRole, key: impl Into<String>) -> Self {
        Self {
            role,
            key: key.into(),
        }
    }
}

impl std::fmt::Display for DataPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.role, self.key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    /// A randomized mechanism that consumed privacy budget.
    Mechanism,
    /// A function of already-released DP outputs; zero cost.
    PostProcessing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub mechanism: String,
    pub kind: EntryKind,
    pub budget: PrivacyBudget,
    pub partition: DataPartition,
}

/// Append-only record of the run's privacy-relevant events.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccountantLedger {
    entries: Vec<LedgerEntry>,
}

impl AccountantLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a cost-bearing mechanism invocation.
    pub fn record_mechanism(
        &mut self,
        mechanism: impl Into<String>,
        budget: PrivacyBudget,
        partition: DataPartition,
    ) {
        self.entries.push(LedgerEntry {
            mechanism: mechanism.into(),
            kind: EntryKind::Mechanism,
            budget,
            partition,
        });
    }

    /// Records a zero-cost post-processing step.
    pub fn record_post_processing(
        &mut self,
        mechanism: impl Into<String>,
        partition: DataPartition,
    ) {
        self.entries.push(LedgerEntry {
            mechanism: mechanism.into(),
            kind: EntryKind::PostProcessing,
            budget: PrivacyBudget {
                epsilon: 0.0,
                delta: 0.0,
            },
            partition,
        });
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Composes the ledger into the overall (ε, δ) guarantee: the componentwise
/// maximum over cost-bearing entries (parallel composition over disjoint
/// partitions). Post-processing entries are ignored. An empty ledger
/// composes to (0, 0): nothing private was ever read.
pub fn compose(ledger: &AccountantLedger) -> Result<PrivacyBudget, PrivacyError> {
    let cost_entries: Vec<&LedgerEntry> = ledger
        .entries
        .iter()
        .filter(|e| e.kind == EntryKind::Mechanism)
        .collect();
    for (i, a) in cost_entries.iter().enumerate() {
        for b in &cost_entries[i + 1..] {
            if a.partition == b.partition {
                return Err(PrivacyError::OverlappingPartitions {
                    first: a.mechanism.clone(),
                    second: b.mechanism.clone(),
                    partition: a.partition.to_string(),
                });
            }
        }
    }
    let mut overall = PrivacyBudget {
        epsilon: 0.0,
        delta: 0.0,
    };
    for entry in cost_entries {
        overall = overall.max(entry.budget);
    }
    Ok(overall)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train() -> DataPartition {
        DataPartition::new(CorpusRole::PrivateTrain, "train")
    }

    fn test_part() -> DataPartition {
        DataPartition::new(CorpusRole::PrivateTest, "test")
    }

    fn budget(e: f64, d: f64) -> PrivacyBudget {
        PrivacyBudget::new(e, d).unwrap()
    }

    #[test]
    fn max_over_disjoint_partitions() {
        let mut ledger = AccountantLedger::new();
        ledger.record_mechanism("note-gen", budget(8.0, 1e-6), train());
        ledger.record_mechanism("term-gen", budget(5.0, 2e-6), test_part());
        let overall = compose(&ledger).unwrap();
        assert_eq!(overall.epsilon, 8.0);
        assert_eq!(overall.delta, 2e-6);
    }

    #[test]
    fn single_entry_composes_to_itself() {
        let mut ledger = AccountantLedger::new();
        ledger.record_mechanism("note-gen", budget(2.0, 1e-6), train());
        assert_eq!(compose(&ledger).unwrap(), budget(2.0, 1e-6));
    }

    #[test]
    fn componentwise_max_not_sum() {
        let mut ledger = AccountantLedger::new();
        ledger.record_mechanism("a", budget(2.0, 1e-6), train());
        ledger.record_mechanism("b", budget(2.0, 2e-6), test_part());
        let overall = compose(&ledger).unwrap();
        assert_eq!(overall.epsilon, 2.0);
        assert_eq!(overall.delta, 2e-6);
    }

    #[test]
    fn post_processing_is_free() {
        let mut ledger = AccountantLedger::new();
        ledger.record_mechanism("note-gen", budget(3.0, 1e-6), train());
        ledger.record_post_processing("quality-select", train());
        assert_eq!(compose(&ledger).unwrap(), budget(3.0, 1e-6));
    }

    #[test]
    fn same_partition_rejected() {
        let mut ledger = AccountantLedger::new();
        ledger.record_mechanism("a", budget(1.0, 1e-6), train());
        ledger.record_mechanism("b", budget(1.0, 1e-6), train());
        assert!(matches!(
            compose(&ledger),
            Err(PrivacyError::OverlappingPartitions { .. })
        ));
    }

    #[test]
    fn empty_ledger_is_zero_cost() {
        assert_eq!(
            compose(&AccountantLedger::new()).unwrap(),
            PrivacyBudget {
                epsilon: 0.0,
                delta: 0.0
            }
        );
    }

    #[test]
    fn compose_is_order_insensitive_and_idempotent() {
        let mut fwd = AccountantLedger::new();
        fwd.record_mechanism("a", budget(1.0, 3e-6), train());
        fwd.record_mechanism("b", budget(4.0, 1e-6), test_part());
        let mut rev = AccountantLedger::new();
        rev.record_mechanism("b", budget(4.0, 1e-6), test_part());
        rev.record_mechanism("a", budget(1.0, 3e-6), train());
        assert_eq!(compose(&fwd).unwrap(), compose(&rev).unwrap());

        // Idempotent: duplicating an entry onto a fresh partition with the
        // same budget leaves the maximum unchanged.
        let mut dup = fwd.clone();
        dup.record_mechanism(
            "b2",
            budget(4.0, 1e-6),
            DataPartition::new(CorpusRole::PrivateTest, "test-2"),
        );
        assert_eq!(compose(&dup).unwrap(), compose(&fwd).unwrap());
    }

    #[test]
    fn split_then_parallel_compose_returns_the_larger_part() {
        // Splitting a budget and running the parts on disjoint partitions
        // costs max(parts), never the sum.
        let b = budget(1.0, 1e-5);
        let (hi, lo) = crate::privacy::split_budget(b, 0.85).unwrap();
        let mut ledger = AccountantLedger::new();
        ledger.record_mechanism("part-1", hi, train());
        ledger.record_mechanism("part-2", lo, test_part());
        let overall = compose(&ledger).unwrap();
        assert_eq!(overall.epsilon, hi.epsilon);
        assert!(overall.epsilon < b.epsilon);
    }
}
