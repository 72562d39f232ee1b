//! Line formats of the three log files. Field order is part of the format.

use serde::{Deserialize, Serialize};

use anonroom_core::{DisplayName, GroupId, Handle, Scope, Status};

pub const MESSAGES_LOG: &str = "messages.log";
pub const TOMBSTONES_LOG: &str = "tombstones.log";
pub const META_LOG: &str = "meta.log";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub seq: u64,
    pub ts: u64,
    pub from: Handle,
    pub scope: Scope,
    pub raw: String,
    pub expanded: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TombstoneRecord {
    pub owner: Handle,
    pub scope: Scope,
    pub upto: u64,
    pub ts: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MetaRecord {
    Group { id: GroupId, name: DisplayName, creator: Handle, ts: u64 },
    Member { group: GroupId, handle: Handle },
    Profile { handle: Handle, name: DisplayName, status: Status },
}

/// Serializes a record as one `\n`-terminated line.
pub fn encode_line<T: Serialize>(record: &T) -> Vec<u8> {
    let mut line = serde_json::to_vec(record).expect("log records always serialize");
    line.push(b'\n');
    line
}
