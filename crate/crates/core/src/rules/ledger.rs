use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use super::RuleError;
use crate::model::ContextProfile;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LedgerEntry {
    pub context_key: String,
    pub assumption_id: String,
    pub run_id: String,
    pub success: bool,
    /// ISO-8601 UTC, supplied by the caller.
    pub timestamp: String,
}

/// Outcomes of assumptions per context. Value-semantic: recording returns a
/// new ledger.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidityLedger {
    entries: Vec<LedgerEntry>,
}

impl ValidityLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rejects entry lists that repeat a (context, assumption, run) triple.
    pub fn from_entries(entries: Vec<LedgerEntry>) -> Result<Self, RuleError> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert((&e.context_key, &e.assumption_id, &e.run_id)) {
                return Err(duplicate(e));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<LedgerEntry> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn duplicate(e: &LedgerEntry) -> RuleError {
    RuleError::DuplicateOutcome {
        context_key: e.context_key.clone(),
        assumption_id: e.assumption_id.clone(),
        run_id: e.run_id.clone(),
    }
}

pub fn record_outcome(
    ledger: ValidityLedger,
    ctx: &ContextProfile,
    assumption_id: &str,
    run_id: &str,
    success: bool,
    timestamp: &str,
) -> Result<ValidityLedger, RuleError> {
    let entry = LedgerEntry {
        context_key: ctx.canonical_key(),
        assumption_id: assumption_id.into(),
        run_id: run_id.into(),
        success,
        timestamp: timestamp.into(),
    };
    if ledger.entries.iter().any(|e| {
        e.context_key == entry.context_key
            && e.assumption_id == entry.assumption_id
            && e.run_id == entry.run_id
    }) {
        return Err(duplicate(&entry));
    }
    let mut entries = ledger.entries;
    entries.push(entry);
    Ok(ValidityLedger { entries })
}

/// Number of successful runs of the assumption in exactly this context.
pub fn get_validity(ledger: &ValidityLedger, ctx: &ContextProfile, assumption_id: &str) -> u32 {
    let key = ctx.canonical_key();
    ledger
        .entries
        .iter()
        .filter(|e| e.success && e.assumption_id == assumption_id && e.context_key == key)
        .count() as u32
}
