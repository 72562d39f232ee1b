use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use rand::{Rng, RngCore};
use serde::Serialize;
use tokio::sync::watch;
use tokio::time::Instant;

use anonroom_core::wire::{HistoryResponse, JoinResponse, PollResponse, SendResponse, UserEntry, WireMessage};
use anonroom_core::{
    canonical_private_scope, validate_message_text, Cursor, DisplayName, GroupId, Handle, Scope, Status,
    MAX_UTC_OFFSET_MIN,
};
use anonroom_store::Store;

use crate::clock::Clock;
use crate::sessions::{Session, SessionRegistry};
use crate::ApiError;

#[derive(Debug, Clone)]
pub struct Config {
    pub session_timeout_ms: u64,
    pub presence_timeout_ms: u64,
    pub max_wait_ms: u64,
    /// How long a computed users list may be reused. Joins and profile
    /// edits invalidate it immediately; only presence flags can lag.
    pub roster_cache_ms: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config { session_timeout_ms: 120_000, presence_timeout_ms: 30_000, max_wait_ms: 30_000, roster_cache_ms: 250 }
    }
}

/// The users list together with its JSON encoding, shared by every poll
/// answered while it is fresh.
#[derive(Debug)]
pub struct Roster {
    computed_ms: u64,
    generation: u64,
    entries: Vec<UserEntry>,
    json: String,
}

impl Roster {
    pub fn entries(&self) -> &[UserEntry] {
        &self.entries
    }
}

/// Result of a poll. Serializes to the same bytes as [`PollResponse`]
/// without re-encoding the users list per request.
#[derive(Debug)]
pub struct PollPage {
    pub messages: Vec<WireMessage>,
    pub cursor: u64,
    pub roster: Arc<Roster>,
}

impl PollPage {
    pub fn to_json(&self) -> String {
        let messages = serde_json::to_string(&self.messages).expect("messages serialize");
        let mut out = String::with_capacity(messages.len() + self.roster.json.len() + 48);
        out.push_str("{\"messages\":");
        out.push_str(&messages);
        out.push_str(",\"cursor\":");
        out.push_str(&self.cursor.to_string());
        out.push_str(",\"users\":");
        out.push_str(&self.roster.json);
        out.push('}');
        out
    }

    pub fn into_wire(self) -> PollResponse {
        PollResponse { messages: self.messages, cursor: self.cursor, users: self.roster.entries.clone() }
    }
}

/// A scope as named in a request, before it is checked against the store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScopeRequest {
    Public,
    Group(String),
    /// Addressed by the peer's handle.
    PrivateTo(String),
    /// Addressed by the canonical pair, as it appears on delivered messages.
    PrivatePair(String, String),
}

impl ScopeRequest {
    /// `public`, `group:<id>`, `private:<peer>` or `private:<a>,<b>`.
    pub fn parse_query(s: &str) -> Result<Self, ApiError> {
        if s == "public" {
            return Ok(ScopeRequest::Public);
        }
        if let Some(id) = s.strip_prefix("group:") {
            return Ok(ScopeRequest::Group(id.to_owned()));
        }
        if let Some(rest) = s.strip_prefix("private:") {
            return Ok(match rest.split_once(',') {
                Some((a, b)) => ScopeRequest::PrivatePair(a.to_owned(), b.to_owned()),
                None => ScopeRequest::PrivateTo(rest.to_owned()),
            });
        }
        Err(ApiError::BadRequest(format!("unrecognised scope {s:?}")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupView {
    pub group_id: GroupId,
    pub name: String,
    pub members: Vec<Handle>,
    pub created_ts: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupJoined {
    pub group_id: GroupId,
    pub members: Vec<Handle>,
}

struct Inner {
    store: Store,
    sessions: Mutex<SessionRegistry>,
    /// Highest seq appended so far; parked polls wait for it to change.
    latest_seq: watch::Sender<u64>,
    clock: Arc<dyn Clock>,
    config: Config,
    /// Bumped whenever the set of handles or any profile changes.
    roster_generation: AtomicU64,
    roster: Mutex<Option<Arc<Roster>>>,
}

/// Shared server state. Cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Caller {
    handle: Handle,
    memberships: BTreeSet<GroupId>,
}

fn random_hex<const N: usize>() -> String {
    let mut bytes = [0u8; N];
    rand::thread_rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

fn three_bytes() -> [u8; 3] {
    rand::thread_rng().gen()
}

impl AppState {
    pub fn new(store: Store, config: Config, clock: Arc<dyn Clock>) -> Self {
        let (latest_seq, _) = watch::channel(store.max_seq());
        AppState {
            inner: Arc::new(Inner {
                store,
                sessions: Mutex::new(SessionRegistry::new(config.session_timeout_ms)),
                latest_seq,
                clock,
                config,
                roster_generation: AtomicU64::new(0),
                roster: Mutex::new(None),
            }),
        }
    }

    pub fn store(&self) -> &Store {
        &self.inner.store
    }

    pub fn config(&self) -> &Config {
        &self.inner.config
    }

    fn now(&self) -> u64 {
        self.inner.clock.now_ms()
    }

    fn authenticate(&self, token: &str) -> Result<Caller, ApiError> {
        let now = self.now();
        let mut sessions = self.inner.sessions.lock();
        let s = sessions.touch(token, now)?;
        Ok(Caller { handle: s.handle.clone(), memberships: s.memberships.clone() })
    }

    fn resolve(&self, caller: &Caller, req: &ScopeRequest) -> Result<Scope, ApiError> {
        let known = |raw: &str| -> Result<Handle, ApiError> {
            Handle::parse(raw)
                .ok()
                .filter(|h| self.inner.store.is_known(h))
                .ok_or_else(|| ApiError::UnknownRecipient(raw.to_owned()))
        };
        match req {
            ScopeRequest::Public => Ok(Scope::Public),
            ScopeRequest::Group(raw) => {
                let id = GroupId::parse(raw).map_err(|_| ApiError::UnknownGroup(raw.clone()))?;
                if self.inner.store.read().group(&id).is_none() {
                    return Err(ApiError::UnknownGroup(raw.clone()));
                }
                Ok(Scope::group(id))
            }
            ScopeRequest::PrivateTo(raw) => {
                let peer = known(raw)?;
                Ok(canonical_private_scope(caller.handle.clone(), peer)?)
            }
            ScopeRequest::PrivatePair(a, b) => {
                let (a, b) = (known(a)?, known(b)?);
                let scope = canonical_private_scope(a, b)?;
                match &scope {
                    Scope::Private { pair } if pair.contains(&caller.handle) => Ok(scope),
                    _ => Err(ApiError::NotAuthorized),
                }
            }
        }
    }

    /// Issues a fresh pseudonymous handle and session. No credentials exist.
    pub fn join(&self, display_name: Option<&str>) -> Result<JoinResponse, ApiError> {
        let name = display_name.map(DisplayName::parse).transpose()?;
        let handle = self.inner.store.register_new_handle(three_bytes)?;
        if let Some(name) = name {
            self.inner.store.upsert_profile(handle.clone(), name, Status::default())?;
        }
        self.inner.roster_generation.fetch_add(1, Ordering::SeqCst);
        let now = self.now();
        let mut sessions = self.inner.sessions.lock();
        let token = loop {
            let t = random_hex::<16>();
            if !sessions.contains_token(&t) {
                break t;
            }
        };
        sessions.insert(Session {
            token: token.clone(),
            handle: handle.clone(),
            last_seen_ms: now,
            memberships: BTreeSet::new(),
        });
        Ok(JoinResponse { token, handle })
    }

    pub fn send(&self, token: &str, scope: &ScopeRequest, text: &str) -> Result<SendResponse, ApiError> {
        let caller = self.authenticate(token)?;
        let scope = self.resolve(&caller, scope)?;
        if let Scope::Group { id } = &scope {
            if !self.inner.store.read().memberships(&caller.handle).contains(id) {
                return Err(ApiError::NotGroupMember);
            }
        }
        let text = validate_message_text(text)?;
        let msg = self.inner.store.append(caller.handle, scope, text, self.now())?;
        self.inner.latest_seq.send_if_modified(|latest| {
            let moved = msg.seq > *latest;
            *latest = (*latest).max(msg.seq);
            moved
        });
        Ok(SendResponse { seq: msg.seq, ts: msg.ts_ms })
    }

    /// Long-poll: returns as soon as a message after `cursor` is visible to
    /// the caller, or after `wait_ms` (capped by config) with an empty list.
    pub async fn poll(
        &self,
        token: &str,
        cursor: u64,
        wait_ms: u64,
        utc_offset_min: i32,
    ) -> Result<PollPage, ApiError> {
        let caller = self.authenticate(token)?;
        let wait = Duration::from_millis(wait_ms.min(self.inner.config.max_wait_ms));
        let deadline = Instant::now() + wait;
        // Subscribe before the first read so no append can slip between
        // the read and the wait.
        let mut changes = self.inner.latest_seq.subscribe();
        let store = &self.inner.store;
        let (messages, cursor) = loop {
            let (messages, next) = store.read_since(Cursor(cursor), &caller.handle, &caller.memberships)?;
            if !messages.is_empty() {
                break (messages, next);
            }
            match tokio::time::timeout_at(deadline, changes.changed()).await {
                Ok(Ok(())) => continue,
                _ => break store.read_since(Cursor(cursor), &caller.handle, &caller.memberships)?,
            }
        };
        // A long wait still counts as activity.
        let _ = self.inner.sessions.lock().touch(token, self.now());
        Ok(PollPage {
            messages: messages.iter().map(|m| WireMessage::render(m, utc_offset_min)).collect(),
            cursor: cursor.value(),
            roster: self.roster(),
        })
    }

    fn roster(&self) -> Arc<Roster> {
        let now = self.now();
        let generation = self.inner.roster_generation.load(Ordering::SeqCst);
        // Held while rebuilding so a burst of woken polls computes it once.
        let mut cached = self.inner.roster.lock();
        if let Some(r) = cached.as_ref() {
            let age = now.saturating_sub(r.computed_ms);
            if r.generation == generation && now >= r.computed_ms && age < self.inner.config.roster_cache_ms {
                return Arc::clone(r);
            }
        }
        let entries = self.user_list();
        let json = serde_json::to_string(&entries).expect("users serialize");
        let r = Arc::new(Roster { computed_ms: now, generation, entries, json });
        *cached = Some(Arc::clone(&r));
        r
    }

    fn user_list(&self) -> Vec<UserEntry> {
        let mut known: Vec<(Handle, Option<String>)> = {
            let state = self.inner.store.read();
            state.known_handles().map(|h| (h.clone(), state.profile(h).map(|p| p.name.to_string()))).collect()
        };
        known.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let now = self.now();
        let presence = self.inner.config.presence_timeout_ms;
        let sessions = self.inner.sessions.lock();
        known
            .into_iter()
            .map(|(handle, display_name)| {
                let active = sessions.last_seen(&handle).is_some_and(|seen| now.saturating_sub(seen) <= presence);
                UserEntry { handle, display_name, active }
            })
            .collect()
    }

    pub fn users(&self, token: &str) -> Result<Vec<UserEntry>, ApiError> {
        self.authenticate(token)?;
        Ok(self.roster().entries.clone())
    }

    pub fn create_group(&self, token: &str, name: &str) -> Result<GroupId, ApiError> {
        let caller = self.authenticate(token)?;
        let name = DisplayName::parse(name)?;
        let group = self.inner.store.create_group(name, caller.handle, self.now(), three_bytes)?;
        self.add_membership(token, &group.group_id);
        Ok(group.group_id)
    }

    pub fn join_group(&self, token: &str, group_id: &str) -> Result<GroupJoined, ApiError> {
        let caller = self.authenticate(token)?;
        let id = GroupId::parse(group_id).map_err(|_| ApiError::UnknownGroup(group_id.to_owned()))?;
        let group = self.inner.store.join_group(&id, caller.handle)?;
        self.add_membership(token, &id);
        Ok(GroupJoined { group_id: group.group_id, members: group.members.into_iter().collect() })
    }

    fn add_membership(&self, token: &str, id: &GroupId) {
        if let Ok(s) = self.inner.sessions.lock().touch(token, self.now()) {
            s.memberships.insert(id.clone());
        }
    }

    pub fn list_groups(&self, token: &str) -> Result<Vec<GroupView>, ApiError> {
        self.authenticate(token)?;
        let state = self.inner.store.read();
        Ok(state
            .groups()
            .map(|g| GroupView {
                group_id: g.group_id.clone(),
                name: g.name.to_string(),
                members: g.members.iter().cloned().collect(),
                created_ts: g.created_ts_ms,
            })
            .collect())
    }

    pub fn history(
        &self,
        token: &str,
        scope: &ScopeRequest,
        before: Option<u64>,
        limit: usize,
        utc_offset_min: i32,
    ) -> Result<HistoryResponse, ApiError> {
        let caller = self.authenticate(token)?;
        let scope = self.resolve(&caller, scope)?;
        let page = self.inner.store.history(&scope, &caller.handle, before, limit)?;
        Ok(HistoryResponse { messages: page.iter().map(|m| WireMessage::render(m, utc_offset_min)).collect() })
    }

    /// Hides everything currently in `scope` from the caller only.
    pub fn delete_conversation(&self, token: &str, scope: &ScopeRequest) -> Result<u64, ApiError> {
        let caller = self.authenticate(token)?;
        let scope = self.resolve(&caller, scope)?;
        let store = &self.inner.store;
        let t = store.record_tombstone(caller.handle, scope, store.max_seq(), self.now())?;
        Ok(t.upto_seq)
    }

    pub fn update_profile(
        &self,
        token: &str,
        display_name: Option<&str>,
        status: Option<&str>,
    ) -> Result<(), ApiError> {
        let caller = self.authenticate(token)?;
        let name = display_name.map(DisplayName::parse).transpose()?;
        let status = status.map(Status::parse).transpose()?;
        let existing = self.inner.store.read().profile(&caller.handle).cloned();
        let name = match (name, &existing) {
            (Some(n), _) => n,
            (None, Some(p)) => p.name.clone(),
            (None, None) => DisplayName::parse(caller.handle.as_str())?,
        };
        let status = status.or(existing.map(|p| p.status)).unwrap_or_default();
        self.inner.store.upsert_profile(caller.handle, name, status)?;
        self.inner.roster_generation.fetch_add(1, Ordering::SeqCst);
        Ok(())
    }

    pub fn sweep_sessions(&self) -> usize {
        let now = self.now();
        self.inner.sessions.lock().sweep(now)
    }

    pub fn live_sessions(&self) -> usize {
        self.inner.sessions.lock().len()
    }
}

pub fn check_offset(offset: i64) -> Result<i32, ApiError> {
    if offset.unsigned_abs() > MAX_UTC_OFFSET_MIN as u64 {
        return Err(ApiError::InvalidOffset(offset));
    }
    Ok(offset as i32)
}
