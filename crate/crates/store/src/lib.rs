//! Durable chat history for anonroom.
//!
//! Three append-only, line-delimited JSON logs live in the data directory:
//! `messages.log`, `tombstones.log` and `meta.log` (groups, memberships and
//! profiles). The full state is kept in memory and rebuilt by [`replay`] on
//! startup.
//!
//! All mutations go through a single writer lock, so sequence assignment
//! order and log order are the same. Readers take a shared lock on the
//! in-memory state and always see a prefix ending at a completed append.

use std::io;
use std::path::{Path, PathBuf};

use parking_lot::{Mutex, RwLock, RwLockReadGuard};
use thiserror::Error;

use anonroom_core::{
    new_handle, Cursor, DisplayName, DomainError, Group, GroupId, Handle, Message, MessageText, Scope, Status,
    Tombstone,
};

mod logfile;
pub mod records;
mod replay;
mod state;

use logfile::LogFile;
use records::{encode_line, MessageRecord, MetaRecord, TombstoneRecord};
pub use replay::{replay, Replayed};
pub use state::{Profile, StoreState, HISTORY_LIMIT_MAX};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage failure: {0}")]
    Storage(#[from] io::Error),
    #[error("{file} line {line} is corrupt: {reason}")]
    CorruptLog { file: String, line: usize, reason: String },
    #[error("cursor {cursor} is ahead of the log (max seq {max})")]
    CursorAhead { cursor: u64, max: u64 },
    #[error("viewer is not part of this conversation")]
    NotAuthorized,
    #[error("unknown group {0}")]
    UnknownGroup(GroupId),
    #[error("unknown handle {0}")]
    UnknownHandle(Handle),
    #[error("history limit {0} outside 1..=200")]
    InvalidLimit(usize),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

struct Writer {
    messages: LogFile,
    tombstones: LogFile,
    meta: LogFile,
}

impl Writer {
    fn sync_all(&mut self) -> io::Result<()> {
        self.messages.sync()?;
        self.tombstones.sync()?;
        self.meta.sync()
    }
}

pub struct Store {
    dir: PathBuf,
    state: RwLock<StoreState>,
    writer: Mutex<Writer>,
    warnings: Vec<String>,
}

impl Store {
    /// Replays `dir` (creating it if needed) and opens the logs for
    /// appending. Torn final lines found during replay are cut off.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let Replayed { state, warnings, intact_len } = replay(&dir)?;
        let writer = Writer {
            messages: LogFile::open(&dir.join(records::MESSAGES_LOG), intact_len[0])?,
            tombstones: LogFile::open(&dir.join(records::TOMBSTONES_LOG), intact_len[1])?,
            meta: LogFile::open(&dir.join(records::META_LOG), intact_len[2])?,
        };
        Ok(Store { dir, state: RwLock::new(state), writer: Mutex::new(writer), warnings })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Warnings produced while replaying at open.
    pub fn replay_warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Shared view of the current state.
    pub fn read(&self) -> RwLockReadGuard<'_, StoreState> {
        self.state.read()
    }

    pub fn max_seq(&self) -> u64 {
        self.state.read().max_seq()
    }

    pub fn is_known(&self, handle: &Handle) -> bool {
        self.state.read().is_known(handle)
    }

    /// Draws a handle not yet present in the registry and records it. The
    /// registry entry itself is not persisted.
    pub fn register_new_handle(&self, entropy: impl FnMut() -> [u8; 3]) -> Result<Handle, StoreError> {
        let mut state = self.state.write();
        let handle = new_handle(entropy, |h| state.is_known(h))?;
        state.register(handle.clone());
        Ok(handle)
    }

    /// Persists one message and returns it. Timestamps are clamped so they
    /// never decrease along the log.
    pub fn append(&self, from: Handle, scope: Scope, text: MessageText, now_ms: u64) -> Result<Message, StoreError> {
        let mut writer = self.writer.lock();
        let (seq, ts) = {
            let state = self.state.read();
            (state.next_seq(), now_ms.max(state.last_ts()))
        };
        let rec =
            MessageRecord { seq, ts, from, scope, raw: text.raw().to_owned(), expanded: text.expanded().to_owned() };
        writer.messages.append(&encode_line(&rec))?;
        let msg = self.state.write().apply_message(rec).expect("writer-assigned records are always in sequence");
        Ok(msg)
    }

    /// Raises `owner`'s tombstone for `scope` to `upto_seq`, clamped to the
    /// current max seq. Writes nothing if the mark would not move.
    pub fn record_tombstone(
        &self,
        owner: Handle,
        scope: Scope,
        upto_seq: u64,
        now_ms: u64,
    ) -> Result<Tombstone, StoreError> {
        let mut writer = self.writer.lock();
        let (existing, upto) = {
            let state = self.state.read();
            state.authorize(&scope, &owner)?;
            (state.tombstone_upto(&owner, &scope), upto_seq.min(state.max_seq()))
        };
        if upto <= existing {
            return Ok(Tombstone { owner, scope, upto_seq: existing });
        }
        let rec = TombstoneRecord { owner: owner.clone(), scope: scope.clone(), upto, ts: now_ms };
        writer.tombstones.append(&encode_line(&rec))?;
        let upto_seq = self.state.write().apply_tombstone(rec);
        Ok(Tombstone { owner, scope, upto_seq })
    }

    /// Creates a group with `creator` as its only member. Ids are drawn from
    /// `entropy` until one is free.
    pub fn create_group(
        &self,
        name: DisplayName,
        creator: Handle,
        now_ms: u64,
        mut entropy: impl FnMut() -> [u8; 3],
    ) -> Result<Group, StoreError> {
        let mut writer = self.writer.lock();
        let id = {
            let state = self.state.read();
            (0..anonroom_core::HANDLE_ATTEMPTS)
                .map(|_| GroupId::from_entropy(entropy()))
                .find(|id| state.group(id).is_none())
                .ok_or(DomainError::HandleSpaceExhausted(anonroom_core::HANDLE_ATTEMPTS))?
        };
        let rec = MetaRecord::Group { id: id.clone(), name, creator, ts: now_ms };
        writer.meta.append(&encode_line(&rec))?;
        let mut state = self.state.write();
        state.apply_meta(rec).expect("fresh group id");
        Ok(state.group(&id).cloned().expect("group just inserted"))
    }

    /// Adds `member` to a group. Joining twice is a no-op.
    pub fn join_group(&self, group_id: &GroupId, member: Handle) -> Result<Group, StoreError> {
        let mut writer = self.writer.lock();
        {
            let state = self.state.read();
            let group = state.group(group_id).ok_or_else(|| StoreError::UnknownGroup(group_id.clone()))?;
            if group.members.contains(&member) {
                return Ok(group.clone());
            }
        }
        let rec = MetaRecord::Member { group: group_id.clone(), handle: member };
        writer.meta.append(&encode_line(&rec))?;
        let mut state = self.state.write();
        state.apply_meta(rec).expect("group checked above");
        Ok(state.group(group_id).cloned().expect("group exists"))
    }

    /// Last write wins.
    pub fn upsert_profile(&self, handle: Handle, name: DisplayName, status: Status) -> Result<Profile, StoreError> {
        let mut writer = self.writer.lock();
        if !self.state.read().is_known(&handle) {
            return Err(StoreError::UnknownHandle(handle));
        }
        let profile = Profile { name: name.clone(), status: status.clone() };
        let rec = MetaRecord::Profile { handle, name, status };
        writer.meta.append(&encode_line(&rec))?;
        self.state.write().apply_meta(rec).expect("profiles always apply");
        Ok(profile)
    }

    pub fn read_since(
        &self,
        cursor: Cursor,
        viewer: &Handle,
        memberships: &std::collections::BTreeSet<GroupId>,
    ) -> Result<(Vec<Message>, Cursor), StoreError> {
        self.state.read().read_since(cursor, viewer, memberships)
    }

    pub fn history(
        &self,
        scope: &Scope,
        viewer: &Handle,
        before_seq: Option<u64>,
        limit: usize,
    ) -> Result<Vec<Message>, StoreError> {
        self.state.read().history(scope, viewer, before_seq, limit)
    }

    /// Physically syncs logs whose unsynced data is older than the interval.
    pub fn sync_if_due(&self) -> Result<(), StoreError> {
        let mut w = self.writer.lock();
        w.messages.sync_if_due()?;
        w.tombstones.sync_if_due()?;
        w.meta.sync_if_due()?;
        Ok(())
    }

    pub fn sync_all(&self) -> Result<(), StoreError> {
        Ok(self.writer.lock().sync_all()?)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;
    use std::sync::Arc;

    use anonroom_core::{canonical_private_scope, validate_message_text};

    use super::*;

    fn h(s: &str) -> Handle {
        Handle::parse(s).unwrap()
    }

    fn text(s: &str) -> MessageText {
        validate_message_text(s).unwrap()
    }

    fn open() -> (tempfile::TempDir, Store) {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        (dir, store)
    }

    #[test]
    fn first_append_is_seq_one() {
        let (_d, store) = open();
        let m = store.append(h("guest-aaaaaa"), Scope::Public, text("hi"), 10).unwrap();
        assert_eq!(m.seq, 1);
        assert_eq!(store.max_seq(), 1);
    }

    #[test]
    fn append_after_41_is_42() {
        let (_d, store) = open();
        for _ in 0..41 {
            store.append(h("guest-aaaaaa"), Scope::Public, text("x"), 10).unwrap();
        }
        let m = store.append(h("guest-aaaaaa"), Scope::Public, text("x"), 10).unwrap();
        assert_eq!(m.seq, 42);
    }

    #[test]
    fn timestamps_never_decrease() {
        let (_d, store) = open();
        store.append(h("guest-aaaaaa"), Scope::Public, text("x"), 500).unwrap();
        let m = store.append(h("guest-aaaaaa"), Scope::Public, text("x"), 100).unwrap();
        assert_eq!(m.ts_ms, 500);
    }

    #[test]
    fn concurrent_appends_are_gap_free() {
        let (_d, store) = open();
        let store = Arc::new(store);
        let threads: Vec<_> = (0..100)
            .map(|i| {
                let store = Arc::clone(&store);
                std::thread::spawn(move || {
                    store.append(h("guest-aaaaaa"), Scope::Public, text(&format!("m{i}")), i).unwrap().seq
                })
            })
            .collect();
        let mut seqs: Vec<u64> = threads.into_iter().map(|t| t.join().unwrap()).collect();
        seqs.sort_unstable();
        assert_eq!(seqs, (1..=100).collect::<Vec<_>>());
    }

    #[test]
    fn read_since_cases() {
        let (_d, store) = open();
        let v = h("guest-cccccc");
        let none = BTreeSet::new();
        for i in 0..3 {
            store.append(h("guest-aaaaaa"), Scope::Public, text(&format!("{i}")), 1).unwrap();
        }
        let (msgs, cur) = store.read_since(Cursor(0), &v, &none).unwrap();
        assert_eq!(msgs.len(), 3);
        assert_eq!(cur, Cursor(3));
        let (msgs, cur) = store.read_since(Cursor(3), &v, &none).unwrap();
        assert!(msgs.is_empty());
        assert_eq!(cur, Cursor(3));
        assert!(matches!(store.read_since(Cursor(4), &v, &none), Err(StoreError::CursorAhead { cursor: 4, max: 3 })));
    }

    #[test]
    fn cursor_advances_past_invisible_messages() {
        let (_d, store) = open();
        let p = canonical_private_scope(h("guest-aaaaaa"), h("guest-bbbbbb")).unwrap();
        store.append(h("guest-aaaaaa"), p, text("secret"), 1).unwrap();
        let (msgs, cur) = store.read_since(Cursor(0), &h("guest-cccccc"), &BTreeSet::new()).unwrap();
        assert!(msgs.is_empty());
        assert_eq!(cur, Cursor(1));
    }

    #[test]
    fn history_pages_newest_first() {
        let (_d, store) = open();
        let v = h("guest-aaaaaa");
        for i in 1..=3 {
            store.append(v.clone(), Scope::Public, text(&format!("{i}")), 1).unwrap();
        }
        let all = store.history(&Scope::Public, &v, None, 50).unwrap();
        assert_eq!(all.iter().map(|m| m.seq).collect::<Vec<_>>(), vec![3, 2, 1]);
        let page = store.history(&Scope::Public, &v, Some(3), 1).unwrap();
        assert_eq!(page[0].seq, 2);
        assert!(matches!(store.history(&Scope::Public, &v, None, 0), Err(StoreError::InvalidLimit(0))));
        assert!(matches!(store.history(&Scope::Public, &v, None, 201), Err(StoreError::InvalidLimit(201))));
    }

    #[test]
    fn history_requires_membership() {
        let (_d, store) = open();
        let a = h("guest-aaaaaa");
        let c = h("guest-cccccc");
        let p = canonical_private_scope(a.clone(), h("guest-bbbbbb")).unwrap();
        assert!(matches!(store.history(&p, &c, None, 10), Err(StoreError::NotAuthorized)));
        assert!(store.history(&p, &a, None, 10).unwrap().is_empty());
        let g = Scope::group(GroupId::parse("g-000001").unwrap());
        assert!(matches!(store.history(&g, &a, None, 10), Err(StoreError::UnknownGroup(_))));
    }

    #[test]
    fn tombstones_are_monotone_and_clamped() {
        let (_d, store) = open();
        let a = h("guest-aaaaaa");
        let b = h("guest-bbbbbb");
        let p = canonical_private_scope(a.clone(), b.clone()).unwrap();
        for _ in 0..10 {
            store.append(a.clone(), p.clone(), text("x"), 1).unwrap();
        }
        assert_eq!(store.record_tombstone(a.clone(), p.clone(), 10, 2).unwrap().upto_seq, 10);
        assert_eq!(store.record_tombstone(a.clone(), p.clone(), 4, 2).unwrap().upto_seq, 10);
        for _ in 0..10 {
            store.append(b.clone(), p.clone(), text("y"), 3).unwrap();
        }
        assert_eq!(store.record_tombstone(a.clone(), p.clone(), 20, 4).unwrap().upto_seq, 20);
        assert_eq!(store.record_tombstone(a.clone(), p.clone(), 99, 4).unwrap().upto_seq, 20);
        assert!(store.history(&p, &a, None, 200).unwrap().is_empty());
        assert_eq!(store.history(&p, &b, None, 200).unwrap().len(), 20);
        assert!(matches!(store.record_tombstone(h("guest-cccccc"), p, 20, 4), Err(StoreError::NotAuthorized)));
    }

    #[test]
    fn groups() {
        let (_d, store) = open();
        let a = h("guest-aaaaaa");
        let b = h("guest-bbbbbb");
        let mut draws = vec![[0x0a, 0x1b, 0x2c]];
        let g = store
            .create_group(DisplayName::parse("rust-fans").unwrap(), a.clone(), 1, || draws.pop().unwrap())
            .unwrap();
        assert_eq!(g.group_id.as_str(), "g-0a1b2c");
        assert_eq!(g.members, [a.clone()].into());
        let once = store.join_group(&g.group_id, b.clone()).unwrap();
        let twice = store.join_group(&g.group_id, b.clone()).unwrap();
        assert_eq!(once.members, twice.members);
        assert_eq!(twice.members.len(), 2);
        let meta = std::fs::read_to_string(store.dir().join("meta.log")).unwrap();
        assert_eq!(meta.lines().count(), 2, "second join writes nothing");
        let missing = GroupId::parse("g-ffffff").unwrap();
        assert!(matches!(store.join_group(&missing, b), Err(StoreError::UnknownGroup(_))));
    }

    #[test]
    fn group_ids_retry_on_collision() {
        let (_d, store) = open();
        let a = h("guest-aaaaaa");
        let name = DisplayName::parse("g").unwrap();
        store.create_group(name.clone(), a.clone(), 1, || [1, 1, 1]).unwrap();
        let mut draws = vec![[2, 2, 2], [1, 1, 1]];
        let g = store.create_group(name, a, 1, || draws.pop().unwrap()).unwrap();
        assert_eq!(g.group_id.as_str(), "g-020202");
    }

    #[test]
    fn profiles() {
        let (_d, store) = open();
        let mut draw = vec![[0xaa, 0xaa, 0xaa]];
        let a = store.register_new_handle(|| draw.pop().unwrap()).unwrap();
        let name = DisplayName::parse("Ada").unwrap();
        store.upsert_profile(a.clone(), name.clone(), Status::parse("hi").unwrap()).unwrap();
        assert_eq!(store.read().profile(&a).unwrap().status.as_str(), "hi");
        store.upsert_profile(a.clone(), DisplayName::parse("Bea").unwrap(), Status::default()).unwrap();
        assert_eq!(store.read().profile(&a).unwrap().name.as_str(), "Bea");
        assert!(matches!(
            store.upsert_profile(h("guest-000000"), name, Status::default()),
            Err(StoreError::UnknownHandle(_))
        ));
    }

    #[test]
    fn registry_avoids_known_handles() {
        let (_d, store) = open();
        store.append(h("guest-000000"), Scope::Public, text("x"), 1).unwrap();
        let mut draws = vec![[0, 0, 1], [0, 0, 0]];
        let fresh = store.register_new_handle(|| draws.pop().unwrap()).unwrap();
        assert_eq!(fresh.as_str(), "guest-000001");
        assert!(store.is_known(&fresh));
    }
}
