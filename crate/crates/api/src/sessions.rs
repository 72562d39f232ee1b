use std::collections::{BTreeSet, HashMap, HashSet};

use anonroom_core::{GroupId, Handle};

use crate::ApiError;

/// Bearer session binding a token to a handle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub token: String,
    pub handle: Handle,
    pub last_seen_ms: u64,
    pub memberships: BTreeSet<GroupId>,
}

/// Live sessions plus the tokens that have expired, so callers holding an
/// expired token get `SessionExpired` rather than `BadToken`. Nothing here
/// is persisted.
#[derive(Debug, Default)]
pub struct SessionRegistry {
    live: HashMap<String, Session>,
    by_handle: HashMap<Handle, String>,
    expired: HashSet<String>,
    session_timeout_ms: u64,
}

impl SessionRegistry {
    pub fn new(session_timeout_ms: u64) -> Self {
        SessionRegistry { session_timeout_ms, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn contains_token(&self, token: &str) -> bool {
        self.live.contains_key(token) || self.expired.contains(token)
    }

    pub fn insert(&mut self, session: Session) {
        self.by_handle.insert(session.handle.clone(), session.token.clone());
        self.live.insert(session.token.clone(), session);
    }

    fn expire(&mut self, token: &str) {
        if let Some(s) = self.live.remove(token) {
            self.by_handle.remove(&s.handle);
            self.expired.insert(s.token);
        }
    }

    /// Validates `token` and marks the session as seen at `now_ms`.
    pub fn touch(&mut self, token: &str, now_ms: u64) -> Result<&mut Session, ApiError> {
        let idle = match self.live.get(token) {
            Some(s) => now_ms.saturating_sub(s.last_seen_ms),
            None if self.expired.contains(token) => return Err(ApiError::SessionExpired),
            None => return Err(ApiError::BadToken),
        };
        if idle > self.session_timeout_ms {
            self.expire(token);
            return Err(ApiError::SessionExpired);
        }
        let session = self.live.get_mut(token).expect("checked above");
        session.last_seen_ms = session.last_seen_ms.max(now_ms);
        Ok(session)
    }

    /// Last time `handle`'s live session was seen, if it has one.
    pub fn last_seen(&self, handle: &Handle) -> Option<u64> {
        self.by_handle.get(handle).and_then(|t| self.live.get(t)).map(|s| s.last_seen_ms)
    }

    /// Removes sessions idle longer than the session timeout.
    pub fn sweep(&mut self, now_ms: u64) -> usize {
        let stale: Vec<String> = self
            .live
            .values()
            .filter(|s| now_ms.saturating_sub(s.last_seen_ms) > self.session_timeout_ms)
            .map(|s| s.token.clone())
            .collect();
        for t in &stale {
            self.expire(t);
        }
        stale.len()
    }
}
