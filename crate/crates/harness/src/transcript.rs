//! What each client saw, what was sent, and the checks between them.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use anonroom_core::{Handle, Scope};

use crate::report::Counters;

#[derive(Debug, Clone)]
pub struct Received {
    pub seq: u64,
    pub scope: Scope,
    pub from: Handle,
    pub raw: String,
    pub at: Instant,
}

#[derive(Debug, Clone)]
pub struct Transcript {
    pub handle: Handle,
    pub entries: Vec<Received>,
    /// Polls whose returned cursor was below the requested one.
    pub cursor_regressions: u64,
}

impl Transcript {
    pub fn new(handle: Handle) -> Self {
        Transcript { handle, entries: Vec::new(), cursor_regressions: 0 }
    }

    /// Number of adjacent entries that are not strictly increasing in seq.
    pub fn order_violations(&self) -> u64 {
        self.entries.windows(2).filter(|w| w[1].seq <= w[0].seq).count() as u64
    }

    /// Private messages this client should never have seen.
    pub fn leaks(&self) -> u64 {
        self.entries
            .iter()
            .filter(|e| matches!(&e.scope, Scope::Private { pair } if !pair.contains(&self.handle)))
            .count() as u64
    }
}

#[derive(Debug, Clone)]
pub struct SendRecord {
    pub from: Handle,
    pub scope: Scope,
    pub raw: String,
    pub sent_at: Instant,
}

/// Every acknowledged send, keyed by the seq the server assigned.
#[derive(Debug, Clone, Default)]
pub struct Ledger(pub BTreeMap<u64, SendRecord>);

impl Ledger {
    pub fn record(&mut self, seq: u64, rec: SendRecord) {
        self.0.insert(seq, rec);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn audience(&self, rec: &SendRecord, everyone: &[Handle]) -> Vec<Handle> {
        match &rec.scope {
            Scope::Private { pair } => vec![pair.first().clone(), pair.second().clone()],
            _ => everyone.to_vec(),
        }
    }
}

#[derive(Debug, Default)]
pub struct Verdict {
    pub counters: Counters,
    pub failures: Vec<String>,
    pub latencies_ms: Vec<f64>,
}

/// Compares transcripts to the ledger. Each ledger entry must appear exactly
/// once in the transcript of every handle in its audience (all participants
/// for public and group sends, the two parties for private ones) and in no
/// other transcript. Entries not in the ledger are foreign traffic and are
/// ignored except for the leak scan. With `same_order`, every transcript's
/// ledger subsequence must equal the first one's.
pub fn verify(transcripts: &[Transcript], ledger: &Ledger, same_order: bool) -> Verdict {
    let mut v = Verdict::default();
    v.counters.sent = ledger.len() as u64;
    let everyone: Vec<Handle> = transcripts.iter().map(|t| t.handle.clone()).collect();
    let mut expected: HashMap<&Handle, Vec<u64>> = HashMap::new();
    for (seq, rec) in &ledger.0 {
        for h in ledger.audience(rec, &everyone) {
            if let Some(key) = everyone.iter().find(|e| **e == h) {
                expected.entry(key).or_default().push(*seq);
            }
        }
    }

    let mut reference: Option<Vec<u64>> = None;
    for t in transcripts {
        v.counters.leaks += t.leaks();
        let order = t.order_violations() + t.cursor_regressions;
        if order > 0 {
            v.counters.mismatches += 1;
            v.failures.push(format!("{}: {order} ordering violations", t.handle));
        }

        let mut seen: BTreeMap<u64, usize> = BTreeMap::new();
        let mut ledger_order = Vec::new();
        for e in &t.entries {
            let Some(rec) = ledger.0.get(&e.seq) else { continue };
            *seen.entry(e.seq).or_default() += 1;
            ledger_order.push(e.seq);
            v.counters.delivered += 1;
            if rec.raw != e.raw || rec.scope != e.scope || rec.from != e.from {
                v.counters.mismatches += 1;
                v.failures.push(format!("{}: seq {} content differs from ledger", t.handle, e.seq));
            }
            v.latencies_ms.push(e.at.saturating_duration_since(rec.sent_at).as_secs_f64() * 1e3);
        }
        v.counters.duplicates += seen.values().map(|&n| n as u64 - 1).sum::<u64>();

        let want = expected.get(&t.handle).map(Vec::as_slice).unwrap_or(&[]);
        let missing = want.iter().filter(|s| !seen.contains_key(s)).count() as u64;
        v.counters.gaps += missing;
        // Private misdeliveries are already counted by the scope scan above.
        v.counters.leaks += seen
            .keys()
            .filter(|s| want.binary_search(s).is_err())
            .filter(|s| !matches!(ledger.0[*s].scope, Scope::Private { .. }))
            .count() as u64;

        if same_order {
            ledger_order.dedup();
            match &reference {
                None => reference = Some(ledger_order),
                Some(r) if *r != ledger_order => {
                    v.counters.mismatches += 1;
                    v.failures.push(format!("{}: delivery order differs from first client", t.handle));
                }
                Some(_) => {}
            }
        }
    }
    v
}
