use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use anonroom_core::canonical_private_scope;
use anonroom_core::wire::ScopeSpec;

use crate::delivery::{join_all, run_all, Outgoing, Shared};
use crate::report::{Latency, Report};
use crate::transcript::verify;
use crate::{Client, HarnessError, Options};

/// Random private messages between seeded sender/recipient pairs. Each must
/// reach exactly its two parties, and nobody else.
pub async fn run_privacy_check(url: &str, opts: &Options) -> Result<Report, HarnessError> {
    if opts.clients < 3 {
        return Err(HarnessError::Usage("privacy needs at least three clients".into()));
    }
    let started = Instant::now();
    let client = Client::new(url)?;
    let people = join_all(&client, opts.clients).await?;
    let n = people.len();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut outboxes: Vec<Vec<Outgoing>> = (0..n).map(|_| Vec::new()).collect();
    for k in 0..opts.messages {
        let from = rng.gen_range(0..n);
        let mut to = rng.gen_range(0..n - 1);
        if to >= from {
            to += 1;
        }
        let scope = canonical_private_scope(people[from].handle.clone(), people[to].handle.clone())
            .map_err(|e| HarnessError::Protocol(e.to_string()))?;
        outboxes[from].push(Outgoing {
            spec: ScopeSpec::Private { to: people[to].handle.clone() },
            scope,
            text: format!("priv-{} c{from}->c{to}#{k}", opts.seed),
        });
    }

    let shared = Shared::new(n, opts);
    let transcripts = run_all(&client, &people, outboxes, shared.clone()).await?;
    let ledger = shared.ledger.lock().await;
    let v = verify(&transcripts, &ledger, false);
    Ok(Report::new(
        "privacy",
        v.counters,
        Latency::from_samples(v.latencies_ms),
        v.failures,
        started.elapsed().as_millis() as u64,
    ))
}
