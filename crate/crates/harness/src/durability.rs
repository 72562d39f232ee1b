//! Kill -9 a real server process mid-session, tear the last log line, and
//! check that the restarted server tells the same story.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Stdio;
use std::sync::Arc;
use std::time::{Duration, Instant};

use tokio::io::{AsyncBufReadExt, BufReader};
use tokio::process::{Child, Command};
use tokio::sync::Mutex;

use anonroom_core::wire::{HistoryResponse, ScopeSpec, WireMessage};
use anonroom_core::{canonical_private_scope, GroupId, Handle, Scope};
use anonroom_store::records::MESSAGES_LOG;
use anonroom_store::{replay, HISTORY_LIMIT_MAX};

use crate::report::{Counters, Latency, Report};
use crate::{Client, HarnessError, Options};

const STARTUP_TIMEOUT: Duration = Duration::from_secs(20);
const WARNING_GRACE: Duration = Duration::from_secs(3);
const TORN_TAIL: &[u8] = br#"{"seq":999999,"ts":1,"from":"guest-"#;

struct Server {
    child: Child,
    url: String,
    stderr: Arc<Mutex<String>>,
}

impl Server {
    async fn start(bin: &Path, data_dir: &Path) -> Result<Self, HarnessError> {
        let pc = |what: &str, e: &dyn std::fmt::Display| HarnessError::ProcessControlFailure(format!("{what}: {e}"));
        let mut child = Command::new(bin)
            .args(["serve", "--host", "127.0.0.1", "--port", "0", "--data-dir"])
            .arg(data_dir)
            .env_remove("ANONROOM_DATA_DIR")
            .env("RUST_LOG", "info")
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .kill_on_drop(true)
            .spawn()
            .map_err(|e| pc(&format!("spawn {}", bin.display()), &e))?;

        let stderr = Arc::new(Mutex::new(String::new()));
        let mut err_lines = BufReader::new(child.stderr.take().expect("piped")).lines();
        let sink = Arc::clone(&stderr);
        tokio::spawn(async move {
            while let Ok(Some(line)) = err_lines.next_line().await {
                let mut s = sink.lock().await;
                s.push_str(&line);
                s.push('\n');
            }
        });

        let mut out_lines = BufReader::new(child.stdout.take().expect("piped")).lines();
        let url = tokio::time::timeout(STARTUP_TIMEOUT, async {
            while let Some(line) = out_lines.next_line().await? {
                if let Some(rest) = line.split("listening on ").nth(1) {
                    return Ok(Some(rest.trim().to_owned()));
                }
            }
            Ok::<_, std::io::Error>(None)
        })
        .await;
        let url = match url {
            Ok(Ok(Some(url))) => url,
            Ok(Ok(None)) => {
                let log = stderr.lock().await.clone();
                return Err(pc("server exited before listening", &log));
            }
            Ok(Err(e)) => return Err(pc("reading server stdout", &e)),
            Err(_) => return Err(HarnessError::Timeout("server did not start listening".into())),
        };
        // Keep draining stdout so the child never blocks on a full pipe.
        tokio::spawn(async move { while let Ok(Some(_)) = out_lines.next_line().await {} });
        Ok(Server { child, url, stderr })
    }

    async fn kill(mut self) -> Result<(), HarnessError> {
        self.child.kill().await.map_err(|e| HarnessError::ProcessControlFailure(format!("kill: {e}")))
    }

    async fn stderr_contains(&self, needle: &str, grace: Duration) -> bool {
        let until = Instant::now() + grace;
        loop {
            if self.stderr.lock().await.contains(needle) {
                return true;
            }
            if Instant::now() >= until {
                return false;
            }
            tokio::time::sleep(Duration::from_millis(50)).await;
        }
    }
}

struct Actor {
    token: String,
    handle: Handle,
}

/// One captured history view: who asked, for what, and the exact bytes.
struct View {
    viewer: Handle,
    scope: Scope,
    query: String,
    body: String,
}

/// Runs mixed traffic against a server spawned from `server_bin`, kills it
/// with SIGKILL, appends a torn record to the message log and restarts it.
/// Pass requires: the truncation is reported, every history view captured
/// before the kill is byte-identical to the view rebuilt from disk, a fresh
/// client sees the same public history, and sequence numbers carry on.
pub async fn run_durability_check(server_bin: &Path, data_dir: &Path, opts: &Options) -> Result<Report, HarnessError> {
    let started = Instant::now();
    let seed = opts.seed;
    let mut c = Counters::default();
    let mut failures = Vec::new();

    let server = Server::start(server_bin, data_dir).await?;
    let api = Client::new(&server.url)?;
    let mut actors = Vec::new();
    for name in [Some("Ada"), Some("Bo"), None] {
        let j = api.join(name).await?;
        actors.push(Actor { token: j.token, handle: j.handle });
    }
    let [a, b, z] = &actors[..] else { unreachable!() };
    api.set_profile(&b.token, None, Some("around")).await?;
    let group = api.create_group(&a.token, "durable").await?;
    api.join_group(&b.token, &group).await?;
    let group_spec =
        ScopeSpec::Group { id: GroupId::parse(&group).map_err(|e| HarnessError::Protocol(e.to_string()))? };
    let private = |to: &Actor| ScopeSpec::Private { to: to.handle.clone() };

    let mut traffic: Vec<(&Actor, ScopeSpec)> = Vec::new();
    for i in 0..6 {
        traffic.push((&actors[i % 3], ScopeSpec::Public));
    }
    for i in 0..4 {
        traffic.push(if i % 2 == 0 { (a, private(b)) } else { (b, private(a)) });
    }
    traffic.push((b, private(z)));
    traffic.push((z, private(b)));
    traffic.push((a, group_spec.clone()));
    traffic.push((b, group_spec.clone()));
    for (k, (who, spec)) in traffic.iter().enumerate() {
        api.send(&who.token, spec, &format!("dur-{seed} #{k} :) {}", spec.to_query())).await?;
        c.sent += 1;
    }
    api.delete_conversation(&a.token, &private(b)).await?;
    api.delete_conversation(&z.token, &ScopeSpec::Public).await?;
    // Sent after the delete, so both parties must still see it.
    api.send(&b.token, &private(a), &format!("dur-{seed} after delete")).await?;
    c.sent += 1;
    let max_before = c.sent;

    let mut views = Vec::new();
    for me in &actors {
        let mut specs = vec![ScopeSpec::Public];
        if me.handle != z.handle {
            specs.push(group_spec.clone());
        }
        specs.extend(actors.iter().filter(|o| o.handle != me.handle).map(private));
        for spec in specs {
            let scope = match &spec {
                ScopeSpec::Public => Scope::Public,
                ScopeSpec::Group { id } => Scope::Group { id: id.clone() },
                ScopeSpec::Private { to } => canonical_private_scope(me.handle.clone(), to.clone())
                    .map_err(|e| HarnessError::Protocol(e.to_string()))?,
            };
            let query = spec.to_query();
            let body = api.history_raw(&me.token, &query, HISTORY_LIMIT_MAX).await?;
            views.push(View { viewer: me.handle.clone(), scope, query, body });
        }
    }
    let count =
        |v: &View| serde_json::from_str::<HistoryResponse>(&v.body).map(|h| h.messages.len()).unwrap_or(usize::MAX);
    let find = |viewer: &Handle, query: &str| views.iter().find(|v| v.viewer == *viewer && v.query == query);
    if let (Some(av), Some(bv)) = (find(&a.handle, &private(b).to_query()), find(&b.handle, &private(a).to_query())) {
        if count(av) != 1 || count(bv) != 5 {
            failures.push(format!(
                "delete semantics: requester sees {} and counterpart {} private messages, expected 1 and 5",
                count(av),
                count(bv)
            ));
        }
    }

    server.kill().await?;
    let log = data_dir.join(MESSAGES_LOG);
    OpenOptions::new()
        .append(true)
        .open(&log)
        .and_then(|mut f| f.write_all(TORN_TAIL))
        .map_err(|e| HarnessError::ProcessControlFailure(format!("tearing {}: {e}", log.display())))?;

    // The on-disk oracle: rebuild state straight from the logs, as the
    // restarted server will, and render the same views.
    let replayed = replay(data_dir).map_err(|e| HarnessError::Protocol(format!("replay failed: {e}")))?;
    if !replayed.warnings.iter().any(|w| w.contains("truncated")) {
        failures.push("replay did not flag the torn final line".into());
    }
    for v in &views {
        c.delivered += 1;
        let rebuilt = replayed
            .state
            .history(&v.scope, &v.viewer, None, HISTORY_LIMIT_MAX)
            .map_err(|e| HarnessError::Protocol(format!("replayed history {}: {e}", v.query)))?;
        let page = HistoryResponse { messages: rebuilt.iter().map(|m| WireMessage::render(m, 0)).collect() };
        let bytes = serde_json::to_string(&page).map_err(|e| HarnessError::Protocol(e.to_string()))?;
        if bytes != v.body {
            c.mismatches += 1;
            failures.push(format!("{} {}: history differs after restart", v.viewer, v.query));
        }
    }

    let server = Server::start(server_bin, data_dir).await?;
    let api = Client::new(&server.url)?;
    if !server.stderr_contains("truncated", WARNING_GRACE).await {
        failures.push("restarted server did not warn about the truncated line".into());
    }
    match api.users_raw(&a.token).await {
        Err(HarnessError::Api { status: 401 | 410, .. }) => {}
        other => failures.push(format!("pre-crash token after restart: expected 401/410, got {other:?}")),
    }
    let fresh = api.join(None).await?;
    let fresh_public = api.history_raw(&fresh.token, "public", HISTORY_LIMIT_MAX).await?;
    match find(&a.handle, "public") {
        Some(v) if v.body == fresh_public => {}
        _ => {
            c.mismatches += 1;
            failures.push("public history seen by a new client differs from before the crash".into());
        }
    }
    let ack = api.send(&fresh.token, &ScopeSpec::Public, &format!("dur-{seed} after restart")).await?;
    if ack.seq != max_before + 1 {
        failures.push(format!("seq after restart is {}, expected {}", ack.seq, max_before + 1));
    }
    server.kill().await?;

    Ok(Report::new("durability", c, Latency::default(), failures, started.elapsed().as_millis() as u64))
}

/// Default location for a scratch data directory.
pub fn scratch_dir(seed: u64) -> PathBuf {
    std::env::temp_dir().join(format!("anonroom-durability-{seed}-{}", std::process::id()))
}
