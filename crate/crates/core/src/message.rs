use std::collections::BTreeSet;

use crate::{DisplayName, GroupId, Handle, MessageText, Scope};

/// One recorded chat utterance. `seq` is global and gap-free across the log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub seq: u64,
    pub ts_ms: u64,
    pub from: Handle,
    pub scope: Scope,
    pub text: MessageText,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub group_id: GroupId,
    pub name: DisplayName,
    pub creator: Handle,
    pub created_ts_ms: u64,
    pub members: BTreeSet<Handle>,
}

/// Hides messages of `scope` with `seq <= upto_seq` from `owner` only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tombstone {
    pub owner: Handle,
    pub scope: Scope,
    pub upto_seq: u64,
}

/// Position in the global log; 0 means before the first message.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cursor(pub u64);

impl Cursor {
    pub const ORIGIN: Cursor = Cursor(0);

    pub fn value(self) -> u64 {
        self.0
    }
}
