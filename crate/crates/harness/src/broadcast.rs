use std::time::Instant;

use anonroom_core::wire::ScopeSpec;
use anonroom_core::Scope;

use crate::delivery::{join_all, run_all, Outgoing, Shared};
use crate::report::{Latency, Report};
use crate::transcript::verify;
use crate::{Client, HarnessError, Options};

/// Every client sends `messages` public messages; every client must receive
/// every one of them exactly once, in the same order as everyone else.
pub async fn run_broadcast_check(url: &str, opts: &Options) -> Result<Report, HarnessError> {
    if opts.clients == 0 {
        return Err(HarnessError::Usage("broadcast needs at least one client".into()));
    }
    let started = Instant::now();
    let client = Client::new(url)?;
    let people = join_all(&client, opts.clients).await?;
    let outboxes = (0..people.len())
        .map(|i| {
            (0..opts.messages)
                .map(|k| Outgoing {
                    spec: ScopeSpec::Public,
                    scope: Scope::Public,
                    text: format!("bcast-{} c{i}#{k}", opts.seed),
                })
                .collect()
        })
        .collect();
    let shared = Shared::new(people.len(), opts);
    let transcripts = run_all(&client, &people, outboxes, shared.clone()).await?;
    let ledger = shared.ledger.lock().await;
    let v = verify(&transcripts, &ledger, true);
    Ok(Report::new(
        "broadcast",
        v.counters,
        Latency::from_samples(v.latencies_ms),
        v.failures,
        started.elapsed().as_millis() as u64,
    ))
}
