//! The validity ledger on disk: a JSON array of entries, guarded by an
//! advisory file lock (shared for reads, exclusive for appends).

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

use infocus_core::{record_outcome, ContextProfile, LedgerEntry, RuleError, ValidityLedger};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("ledger {path} is malformed: {message}")]
    Malformed { path: String, message: String },
    #[error(transparent)]
    Outcome(#[from] RuleError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LedgerError + '_ {
    move |source| LedgerError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn decode(path: &Path, text: &str) -> Result<ValidityLedger, LedgerError> {
    if text.trim().is_empty() {
        return Ok(ValidityLedger::new());
    }
    let malformed = |message: String| LedgerError::Malformed {
        path: path.display().to_string(),
        message,
    };
    let entries: Vec<LedgerEntry> =
        serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    ValidityLedger::from_entries(entries).map_err(|e| malformed(e.to_string()))
}

pub fn encode(ledger: &ValidityLedger) -> String {
    let mut s = serde_json::to_string_pretty(ledger.entries()).expect("ledger serializes");
    s.push('\n');
    s
}

/// Reads a ledger; a missing file is an empty ledger.
pub fn load(path: &Path) -> Result<ValidityLedger, LedgerError> {
    let mut file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(ValidityLedger::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    file.lock_shared().map_err(io_err(path))?;
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(io_err(path))?;
    decode(path, &text)
}

/// Appends one outcome under an exclusive lock. Fails without touching the
/// file when the (context, assumption, run) triple is already present.
pub fn append(
    path: &Path,
    ctx: &ContextProfile,
    assumption_id: &str,
    run_id: &str,
    success: bool,
    timestamp: &str,
) -> Result<ValidityLedger, LedgerError> {
    let mut file = OpenOptions::new()
        .read(true)
        .write(true)
        .create(true)
        .truncate(false)
        .open(path)
        .map_err(io_err(path))?;
    file.lock().map_err(io_err(path))?;
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(io_err(path))?;
    let ledger = decode(path, &text)?;
    let ledger = record_outcome(ledger, ctx, assumption_id, run_id, success, timestamp)?;
    file.set_len(0).map_err(io_err(path))?;
    file.seek(SeekFrom::Start(0)).map_err(io_err(path))?;
    file.write_all(encode(&ledger).as_bytes())
        .map_err(io_err(path))?;
    file.sync_all().map_err(io_err(path))?;
    Ok(ledger)
}

/// Current UTC time, second precision, e.g. `2024-05-01T12:00:00Z`.
pub fn now_timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
