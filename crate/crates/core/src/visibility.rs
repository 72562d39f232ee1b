use std::collections::{BTreeSet, HashMap};

use crate::{GroupId, Handle, Message, Scope, Tombstone};

/// One viewer's tombstones, keyed by scope.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViewerTombstones(HashMap<Scope, u64>);

impl ViewerTombstones {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn upto(&self, scope: &Scope) -> u64 {
        self.0.get(scope).copied().unwrap_or(0)
    }

    /// Raises the high-water mark for `scope`; never lowers it.
    pub fn raise(&mut self, scope: Scope, upto_seq: u64) -> u64 {
        let slot = self.0.entry(scope).or_insert(0);
        *slot = (*slot).max(upto_seq);
        *slot
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Scope, u64)> {
        self.0.iter().map(|(s, u)| (s, *u))
    }
}

impl FromIterator<Tombstone> for ViewerTombstones {
    fn from_iter<I: IntoIterator<Item = Tombstone>>(iter: I) -> Self {
        let mut t = ViewerTombstones::new();
        for ts in iter {
            t.raise(ts.scope, ts.upto_seq);
        }
        t
    }
}

/// Whether `viewer` belongs to `scope` at all, ignoring tombstones.
pub fn in_scope(scope: &Scope, viewer: &Handle, memberships: &BTreeSet<GroupId>) -> bool {
    match scope {
        Scope::Public => true,
        Scope::Group { id } => memberships.contains(id),
        Scope::Private { pair } => pair.contains(viewer),
    }
}

pub fn visible_to(
    msg: &Message,
    viewer: &Handle,
    memberships: &BTreeSet<GroupId>,
    tombstones: &ViewerTombstones,
) -> bool {
    in_scope(&msg.scope, viewer, memberships) && tombstones.upto(&msg.scope) < msg.seq
}
