//! Audit of what a data directory actually remembers about people.

use std::path::Path;

use serde_json::Value;

use anonroom_store::records::{MESSAGES_LOG, META_LOG, TOMBSTONES_LOG};

/// Every JSON key a persisted record may contain. Anything else (an email,
/// an address, a password hash, a session token) is a finding.
pub const ALLOWED_KEYS: &[&str] = &[
    "seq", "ts", "from", "scope", "kind", "pair", "id", "raw", "expanded", "owner", "upto", "type", "name", "creator",
    "group", "handle", "status",
];

/// Scans every log in `data_dir`. Returns one finding per disallowed key,
/// per unparseable line, per unexpected file and per occurrence of any of
/// `secrets` (session tokens handed out while the data was written).
pub fn audit_data_dir(data_dir: &Path, secrets: &[String]) -> std::io::Result<Vec<String>> {
    let mut findings = Vec::new();
    for entry in std::fs::read_dir(data_dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if ![MESSAGES_LOG, TOMBSTONES_LOG, META_LOG].contains(&name.as_str()) {
            findings.push(format!("unexpected file {name}"));
        }
        if !entry.file_type()?.is_file() {
            continue;
        }
        let text = String::from_utf8_lossy(&std::fs::read(entry.path())?).into_owned();
        for secret in secrets {
            if text.contains(secret.as_str()) {
                findings.push(format!("{name} contains a session token"));
            }
        }
        for (i, line) in text.lines().enumerate() {
            match serde_json::from_str::<Value>(line) {
                Ok(v) => keys(&v, &mut |k| {
                    if !ALLOWED_KEYS.contains(&k) {
                        findings.push(format!("{name}:{}: field {k:?}", i + 1));
                    }
                }),
                Err(e) => findings.push(format!("{name}:{}: not JSON: {e}", i + 1)),
            }
        }
    }
    Ok(findings)
}

fn keys(v: &Value, f: &mut impl FnMut(&str)) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                f(k);
                keys(v, f);
            }
        }
        Value::Array(a) => a.iter().for_each(|v| keys(v, f)),
        _ => {}
    }
}
