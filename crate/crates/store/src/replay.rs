use std::fs;
use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use tracing::warn;

use crate::records::{MessageRecord, MetaRecord, TombstoneRecord, MESSAGES_LOG, META_LOG, TOMBSTONES_LOG};
use crate::{StoreError, StoreState};

/// Result of reading a data directory without modifying it.
#[derive(Debug, Clone)]
pub struct Replayed {
    pub state: StoreState,
    pub warnings: Vec<String>,
    /// Byte length of the intact prefix of each log, in the order
    /// messages, tombstones, meta.
    pub(crate) intact_len: [u64; 3],
}

struct Parsed<T> {
    records: Vec<(usize, T)>,
    intact_len: u64,
    warning: Option<String>,
}

/// Splits a log into records. A final line that is unterminated or does not
/// parse is a crash artifact and is dropped; any other bad line is fatal.
fn parse_log<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<Parsed<T>, StoreError> {
    let bytes = match fs::read(dir.join(name)) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(StoreError::Storage(e)),
    };
    let mut records = Vec::new();
    let mut offset = 0usize;
    let mut line_no = 0usize;
    while offset < bytes.len() {
        line_no += 1;
        let (line, terminated) = match bytes[offset..].iter().position(|&b| b == b'\n') {
            Some(i) => (&bytes[offset..offset + i], true),
            None => (&bytes[offset..], false),
        };
        let end = offset + line.len() + usize::from(terminated);
        let is_final = end >= bytes.len();
        let parsed = if terminated {
            serde_json::from_slice::<T>(line).map_err(|e| e.to_string())
        } else {
            Err("missing line terminator".to_owned())
        };
        match parsed {
            Ok(rec) => records.push((line_no, rec)),
            Err(reason) if is_final => {
                let warning =
                    format!("{name}: discarding truncated final line {line_no} ({} bytes): {reason}", line.len());
                warn!("{warning}");
                return Ok(Parsed { records, intact_len: offset as u64, warning: Some(warning) });
            }
            Err(reason) => return Err(StoreError::CorruptLog { file: name.to_owned(), line: line_no, reason }),
        }
        offset = end;
    }
    Ok(Parsed { records, intact_len: offset as u64, warning: None })
}

fn corrupt(file: &str, line: usize, reason: String) -> StoreError {
    StoreError::CorruptLog { file: file.to_owned(), line, reason }
}

/// Rebuilds state from `messages.log`, `tombstones.log` and `meta.log`, in
/// that order. Missing files count as empty.
pub fn replay(dir: &Path) -> Result<Replayed, StoreError> {
    let mut state = StoreState::default();
    let mut warnings = Vec::new();

    let messages = parse_log::<MessageRecord>(dir, MESSAGES_LOG)?;
    for (line, rec) in messages.records {
        state.apply_message(rec).map_err(|r| corrupt(MESSAGES_LOG, line, r))?;
    }
    warnings.extend(messages.warning);

    let tombstones = parse_log::<TombstoneRecord>(dir, TOMBSTONES_LOG)?;
    for (_, rec) in tombstones.records {
        state.apply_tombstone(rec);
    }
    warnings.extend(tombstones.warning);

    let meta = parse_log::<MetaRecord>(dir, META_LOG)?;
    for (line, rec) in meta.records {
        state.apply_meta(rec).map_err(|r| corrupt(META_LOG, line, r))?;
    }
    warnings.extend(meta.warning);

    Ok(Replayed { state, warnings, intact_len: [messages.intact_len, tombstones.intact_len, meta.intact_len] })
}
