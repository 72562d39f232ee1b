//! JSON shapes shared by the server and its clients.

use serde::{Deserialize, Serialize};

use crate::{format_timestamp, GroupId, Handle, Message, Scope};

/// A message as delivered by `/api/poll` and `/api/history`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireMessage {
    pub seq: u64,
    pub ts: u64,
    pub from: Handle,
    pub scope: Scope,
    pub raw: String,
    pub expanded: String,
    /// Display time rendered server-side, `g:i a` style.
    pub time: String,
}

impl WireMessage {
    pub fn render(msg: &Message, utc_offset_min: i32) -> Self {
        WireMessage {
            seq: msg.seq,
            ts: msg.ts_ms,
            from: msg.from.clone(),
            scope: msg.scope.clone(),
            raw: msg.text.raw().to_owned(),
            expanded: msg.text.expanded().to_owned(),
            time: format_timestamp(msg.ts_ms, utc_offset_min),
        }
    }
}

/// Scope as named by a client: private conversations are addressed by the
/// peer's handle rather than the canonical pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScopeSpec {
    Public,
    Group { id: GroupId },
    Private { to: Handle },
}

impl ScopeSpec {
    /// Parses the compact query-string form: `public`, `group:<id>` or
    /// `private:<peer-handle>`.
    pub fn parse_query(s: &str) -> Option<Self> {
        if s == "public" {
            return Some(ScopeSpec::Public);
        }
        if let Some(id) = s.strip_prefix("group:") {
            return GroupId::parse(id).ok().map(|id| ScopeSpec::Group { id });
        }
        if let Some(to) = s.strip_prefix("private:") {
            return Handle::parse(to).ok().map(|to| ScopeSpec::Private { to });
        }
        None
    }

    pub fn to_query(&self) -> String {
        match self {
            ScopeSpec::Public => "public".to_owned(),
            ScopeSpec::Group { id } => format!("group:{id}"),
            ScopeSpec::Private { to } => format!("private:{to}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserEntry {
    pub handle: Handle,
    pub display_name: Option<String>,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PollResponse {
    pub messages: Vec<WireMessage>,
    pub cursor: u64,
    pub users: Vec<UserEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryResponse {
    pub messages: Vec<WireMessage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinResponse {
    pub token: String,
    pub handle: Handle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SendResponse {
    pub seq: u64,
    pub ts: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
}
