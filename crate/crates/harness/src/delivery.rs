//! The per-client loop shared by the broadcast and privacy scenarios.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use tokio::sync::Mutex;

use anonroom_core::wire::ScopeSpec;
use anonroom_core::{Handle, Scope};

use crate::transcript::{Ledger, Received, SendRecord, Transcript};
use crate::{Client, HarnessError, Options};

/// Consecutive empty polls, after every client finished sending, that
/// count as quiescence.
pub const QUIET_POLLS: usize = 3;

#[derive(Debug, Clone)]
pub struct Participant {
    pub token: String,
    pub handle: Handle,
}

pub struct Outgoing {
    pub spec: ScopeSpec,
    pub scope: Scope,
    pub text: String,
}

pub struct Shared {
    pub ledger: Mutex<Ledger>,
    finished: AtomicUsize,
    senders: usize,
    deadline: Instant,
    quiet_wait_ms: u64,
}

impl Shared {
    pub fn new(senders: usize, opts: &Options) -> Arc<Self> {
        Arc::new(Shared {
            ledger: Mutex::new(Ledger::default()),
            finished: AtomicUsize::new(0),
            senders,
            deadline: Instant::now() + opts.deadline,
            quiet_wait_ms: opts.quiet_wait_ms,
        })
    }

    fn all_sent(&self) -> bool {
        self.finished.load(Ordering::SeqCst) >= self.senders
    }
}

pub async fn join_all(client: &Client, n: usize) -> Result<Vec<Participant>, HarnessError> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let j = client.join(None).await?;
        out.push(Participant { token: j.token, handle: j.handle });
    }
    Ok(out)
}

/// Poll, record, maybe send one message; repeat until every client has
/// sent everything and this client saw [`QUIET_POLLS`] empty polls in a row.
pub async fn drive(
    client: Client,
    me: Participant,
    outbox: Vec<Outgoing>,
    shared: Arc<Shared>,
) -> Result<Transcript, HarnessError> {
    let mut transcript = Transcript::new(me.handle.clone());
    let mut outbox = outbox.into_iter().peekable();
    if outbox.peek().is_none() {
        shared.finished.fetch_add(1, Ordering::SeqCst);
    }
    let mut cursor = 0u64;
    let mut quiet = 0usize;
    loop {
        if Instant::now() > shared.deadline {
            return Err(HarnessError::Timeout(format!("{} did not reach quiescence", me.handle)));
        }
        let wait = if outbox.peek().is_some() { 0 } else { shared.quiet_wait_ms };
        let resp = client.poll(&me.token, cursor, wait).await?;
        let at = Instant::now();
        if resp.cursor < cursor {
            transcript.cursor_regressions += 1;
        }
        let got = !resp.messages.is_empty();
        transcript.entries.extend(resp.messages.into_iter().map(|m| Received {
            seq: m.seq,
            scope: m.scope,
            from: m.from,
            raw: m.raw,
            at,
        }));
        cursor = cursor.max(resp.cursor);

        if let Some(out) = outbox.next() {
            let sent_at = Instant::now();
            let ack = client.send(&me.token, &out.spec, &out.text).await?;
            shared
                .ledger
                .lock()
                .await
                .record(ack.seq, SendRecord { from: me.handle.clone(), scope: out.scope, raw: out.text, sent_at });
            if outbox.peek().is_none() {
                shared.finished.fetch_add(1, Ordering::SeqCst);
            }
            quiet = 0;
            continue;
        }

        if got || !shared.all_sent() {
            quiet = 0;
        } else {
            quiet += 1;
            if quiet >= QUIET_POLLS {
                return Ok(transcript);
            }
        }
    }
}

/// Runs one [`drive`] loop per participant and collects the transcripts in
/// participant order.
pub async fn run_all(
    client: &Client,
    participants: &[Participant],
    outboxes: Vec<Vec<Outgoing>>,
    shared: Arc<Shared>,
) -> Result<Vec<Transcript>, HarnessError> {
    let tasks: Vec<_> = participants
        .iter()
        .cloned()
        .zip(outboxes)
        .map(|(p, outbox)| tokio::spawn(drive(client.clone(), p, outbox, Arc::clone(&shared))))
        .collect();
    let mut transcripts = Vec::with_capacity(tasks.len());
    for t in tasks {
        transcripts.push(t.await.map_err(|e| HarnessError::Protocol(format!("client task failed: {e}")))??);
    }
    Ok(transcripts)
}
