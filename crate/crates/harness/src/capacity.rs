use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use tokio::sync::{watch, Mutex};

use anonroom_core::wire::ScopeSpec;
use anonroom_core::Scope;

use crate::delivery::Participant;
use crate::report::{Latency, Report};
use crate::transcript::{verify, Ledger, Received, SendRecord, Transcript};
use crate::{Client, HarnessError, Options};

const HOLD_POLL_WAIT_MS: u64 = 5_000;
const MIN_POLL_WAIT_MS: u64 = 50;
const PROBE_INTERVAL: Duration = Duration::from_secs(5);
const RETRY_PAUSE: Duration = Duration::from_millis(100);

#[derive(Default)]
struct Faults {
    server_errors: AtomicU64,
    other_errors: AtomicU64,
}

impl Faults {
    fn note(&self, e: &HarnessError) {
        match e.status() {
            Some(s) if s >= 500 => self.server_errors.fetch_add(1, Ordering::Relaxed),
            _ => self.other_errors.fetch_add(1, Ordering::Relaxed),
        };
    }
}

/// Holds `clients` sessions long-polling at once for `duration`, while a
/// probe client posts a public message every few seconds. Joins must never be
/// rejected, no request may fail, and every probe must reach every session.
pub async fn run_capacity_check(url: &str, opts: &Options) -> Result<Report, HarnessError> {
    if opts.clients == 0 {
        return Err(HarnessError::Usage("capacity needs at least one client".into()));
    }
    let started = Instant::now();
    let client = Client::new(url)?;
    let faults = Arc::new(Faults::default());
    let mut failures = Vec::new();

    let joins: Vec<_> = (0..opts.clients)
        .map(|_| {
            let c = client.clone();
            tokio::spawn(async move { c.join(None).await })
        })
        .collect();
    let mut people = Vec::with_capacity(opts.clients);
    let mut rejections = 0u64;
    for j in joins {
        match j.await {
            Ok(Ok(r)) => people.push(Participant { token: r.token, handle: r.handle }),
            Ok(Err(e)) => {
                rejections += 1;
                if !matches!(e, HarnessError::Api { .. }) {
                    failures.push(format!("join failed: {e}"));
                }
            }
            Err(e) => failures.push(format!("join task failed: {e}")),
        }
    }

    // Pollers start after this marker, so earlier traffic on a long-lived
    // server is not replayed into the latency figures.
    let probe = client.join(Some("probe")).await?;
    let start = client.send(&probe.token, &ScopeSpec::Public, &format!("cap-{} start", opts.seed)).await?;
    let ledger = Arc::new(Mutex::new(Ledger::default()));
    let hold_until = Instant::now() + opts.duration;
    let (stop_tx, stop_rx) = watch::channel(false);
    let pollers: Vec<_> = people
        .iter()
        .cloned()
        .map(|p| tokio::spawn(hold(client.clone(), p, start.seq, hold_until, stop_rx.clone(), Arc::clone(&faults))))
        .collect();

    tokio::time::sleep(PROBE_INTERVAL.min(opts.duration / 4)).await;
    let mut k = 0u64;
    loop {
        let now = Instant::now();
        if now + Duration::from_secs(1) >= hold_until {
            break;
        }
        let text = format!("cap-{} probe#{k}", opts.seed);
        let sent_at = Instant::now();
        match client.send(&probe.token, &ScopeSpec::Public, &text).await {
            Ok(ack) => ledger
                .lock()
                .await
                .record(ack.seq, SendRecord { from: probe.handle.clone(), scope: Scope::Public, raw: text, sent_at }),
            Err(e) => faults.note(&e),
        }
        k += 1;
        let next = (sent_at + PROBE_INTERVAL).min(hold_until - Duration::from_secs(1));
        tokio::time::sleep_until(next.max(Instant::now()).into()).await;
    }

    // Every probe is acknowledged by now, so one final poll per session
    // must see all of them.
    tokio::time::sleep_until(hold_until.into()).await;
    let _ = stop_tx.send(true);
    let mut transcripts = Vec::with_capacity(pollers.len());
    for p in pollers {
        match p.await {
            Ok(t) => transcripts.push(t),
            Err(e) => failures.push(format!("poll task failed: {e}")),
        }
    }

    let ledger = ledger.lock().await;
    let mut v = verify(&transcripts, &ledger, true);
    v.counters.rejections = rejections;
    v.counters.server_errors = faults.server_errors.load(Ordering::Relaxed);
    v.counters.other_errors = faults.other_errors.load(Ordering::Relaxed);
    if people.len() + rejections as usize != opts.clients {
        failures.push(format!("only {} of {} sessions joined", people.len(), opts.clients));
    }
    failures.extend(v.failures);
    Ok(Report::new(
        "capacity",
        v.counters,
        Latency::from_samples(v.latencies_ms),
        failures,
        started.elapsed().as_millis() as u64,
    ))
}

/// Long-polls until told to stop, then drains once without waiting.
async fn hold(
    client: Client,
    me: Participant,
    mut cursor: u64,
    until: Instant,
    stop: watch::Receiver<bool>,
    faults: Arc<Faults>,
) -> Transcript {
    let mut t = Transcript::new(me.handle.clone());
    loop {
        let draining = *stop.borrow();
        let left = until.saturating_duration_since(Instant::now()).as_millis() as u64;
        let wait = if draining { 0 } else { left.clamp(MIN_POLL_WAIT_MS, HOLD_POLL_WAIT_MS) };
        match client.poll(&me.token, cursor, wait).await {
            Ok(resp) => {
                let at = Instant::now();
                if resp.cursor < cursor {
                    t.cursor_regressions += 1;
                }
                t.entries.extend(resp.messages.into_iter().map(|m| Received {
                    seq: m.seq,
                    scope: m.scope,
                    from: m.from,
                    raw: m.raw,
                    at,
                }));
                cursor = cursor.max(resp.cursor);
                if draining {
                    return t;
                }
            }
            Err(e) => {
                faults.note(&e);
                if draining {
                    return t;
                }
                tokio::time::sleep(RETRY_PAUSE).await;
            }
        }
    }
}
