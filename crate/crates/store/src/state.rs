use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use anonroom_core::{
    in_scope, visible_to, Cursor, DisplayName, Group, GroupId, Handle, Message, MessageText, Scope, Status,
    ViewerTombstones,
};

use crate::records::{MessageRecord, MetaRecord, TombstoneRecord};
use crate::StoreError;

pub const HISTORY_LIMIT_MAX: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    pub name: DisplayName,
    pub status: Status,
}

/// In-memory image of the three logs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StoreState {
    messages: Vec<Message>,
    by_scope: HashMap<Scope, Vec<u64>>,
    tombstones: HashMap<Handle, ViewerTombstones>,
    groups: BTreeMap<GroupId, Group>,
    memberships: HashMap<Handle, BTreeSet<GroupId>>,
    profiles: HashMap<Handle, Profile>,
    known: HashSet<Handle>,
}

impl StoreState {
    pub fn next_seq(&self) -> u64 {
        self.messages.len() as u64 + 1
    }

    pub fn max_seq(&self) -> u64 {
        self.messages.len() as u64
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn last_ts(&self) -> u64 {
        self.messages.last().map_or(0, |m| m.ts_ms)
    }

    pub fn is_known(&self, handle: &Handle) -> bool {
        self.known.contains(handle)
    }

    pub fn known_handles(&self) -> impl Iterator<Item = &Handle> {
        self.known.iter()
    }

    pub fn profile(&self, handle: &Handle) -> Option<&Profile> {
        self.profiles.get(handle)
    }

    pub fn group(&self, id: &GroupId) -> Option<&Group> {
        self.groups.get(id)
    }

    pub fn groups(&self) -> impl Iterator<Item = &Group> {
        self.groups.values()
    }

    pub fn memberships(&self, handle: &Handle) -> BTreeSet<GroupId> {
        self.memberships.get(handle).cloned().unwrap_or_default()
    }

    pub fn tombstones(&self, owner: &Handle) -> ViewerTombstones {
        self.tombstones.get(owner).cloned().unwrap_or_default()
    }

    pub fn tombstone_upto(&self, owner: &Handle, scope: &Scope) -> u64 {
        self.tombstones.get(owner).map_or(0, |t| t.upto(scope))
    }

    pub(crate) fn register(&mut self, handle: Handle) -> bool {
        self.known.insert(handle)
    }

    /// Checks that `viewer` may read or delete `scope`.
    pub fn authorize(&self, scope: &Scope, viewer: &Handle) -> Result<(), StoreError> {
        if let Scope::Group { id } = scope {
            if !self.groups.contains_key(id) {
                return Err(StoreError::UnknownGroup(id.clone()));
            }
        }
        if in_scope(scope, viewer, &self.memberships(viewer)) {
            Ok(())
        } else {
            Err(StoreError::NotAuthorized)
        }
    }

    /// Every message after `cursor` visible to `viewer`, plus the global
    /// maximum seq at the time of the read.
    pub fn read_since(
        &self,
        cursor: Cursor,
        viewer: &Handle,
        memberships: &BTreeSet<GroupId>,
    ) -> Result<(Vec<Message>, Cursor), StoreError> {
        let max = self.max_seq();
        if cursor.value() > max {
            return Err(StoreError::CursorAhead { cursor: cursor.value(), max });
        }
        let tombstones = self.tombstones(viewer);
        let messages = self.messages[cursor.value() as usize..]
            .iter()
            .filter(|m| visible_to(m, viewer, memberships, &tombstones))
            .cloned()
            .collect();
        Ok((messages, Cursor(max)))
    }

    /// Newest-first page of `scope` strictly before `before_seq`.
    pub fn history(
        &self,
        scope: &Scope,
        viewer: &Handle,
        before_seq: Option<u64>,
        limit: usize,
    ) -> Result<Vec<Message>, StoreError> {
        if !(1..=HISTORY_LIMIT_MAX).contains(&limit) {
            return Err(StoreError::InvalidLimit(limit));
        }
        self.authorize(scope, viewer)?;
        let memberships = self.memberships(viewer);
        let tombstones = self.tombstones(viewer);
        let before = before_seq.unwrap_or(u64::MAX);
        let Some(seqs) = self.by_scope.get(scope) else {
            return Ok(Vec::new());
        };
        Ok(seqs
            .iter()
            .rev()
            .skip_while(|&&s| s >= before)
            .map(|&s| &self.messages[s as usize - 1])
            .filter(|m| visible_to(m, viewer, &memberships, &tombstones))
            .take(limit)
            .cloned()
            .collect())
    }

    pub(crate) fn apply_message(&mut self, rec: MessageRecord) -> Result<Message, String> {
        if rec.seq != self.next_seq() {
            return Err(format!("expected seq {}, found {}", self.next_seq(), rec.seq));
        }
        if rec.ts < self.last_ts() {
            return Err(format!("timestamp {} goes backwards", rec.ts));
        }
        let text = MessageText::from_stored(rec.raw, rec.expanded).map_err(|e| e.to_string())?;
        let msg = Message { seq: rec.seq, ts_ms: rec.ts, from: rec.from, scope: rec.scope, text };
        self.known.insert(msg.from.clone());
        if let Scope::Private { pair } = &msg.scope {
            self.known.insert(pair.first().clone());
            self.known.insert(pair.second().clone());
        }
        self.by_scope.entry(msg.scope.clone()).or_default().push(msg.seq);
        self.messages.push(msg.clone());
        Ok(msg)
    }

    pub(crate) fn apply_tombstone(&mut self, rec: TombstoneRecord) -> u64 {
        self.known.insert(rec.owner.clone());
        self.tombstones.entry(rec.owner).or_default().raise(rec.scope, rec.upto)
    }

    pub(crate) fn apply_meta(&mut self, rec: MetaRecord) -> Result<(), String> {
        match rec {
            MetaRecord::Group { id, name, creator, ts } => {
                if self.groups.contains_key(&id) {
                    return Err(format!("group {id} created twice"));
                }
                self.known.insert(creator.clone());
                self.memberships.entry(creator.clone()).or_default().insert(id.clone());
                self.groups.insert(
                    id.clone(),
                    Group { group_id: id, name, members: [creator.clone()].into(), creator, created_ts_ms: ts },
                );
            }
            MetaRecord::Member { group, handle } => {
                let g =
                    self.groups.get_mut(&group).ok_or_else(|| format!("member record for unknown group {group}"))?;
                g.members.insert(handle.clone());
                self.known.insert(handle.clone());
                self.memberships.entry(handle).or_default().insert(group);
            }
            MetaRecord::Profile { handle, name, status } => {
                self.known.insert(handle.clone());
                self.profiles.insert(handle, Profile { name, status });
            }
        }
        Ok(())
    }
}
