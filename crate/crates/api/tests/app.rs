//! In-process tests against `AppState` with a manual clock.

use std::sync::Arc;
use std::time::{Duration, Instant};

use anonroom_core::wire::PollResponse;
use anonroom_server::clock::ManualClock;
use anonroom_server::{ApiError, AppState, Config, ScopeRequest};
use anonroom_store::Store;

const T0: u64 = 1_700_000_000_000;

fn app_with(config: Config) -> (tempfile::TempDir, AppState, Arc<ManualClock>) {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(T0));
    let app = AppState::new(Store::open(dir.path()).unwrap(), config, clock.clone());
    (dir, app, clock)
}

fn exact() -> Config {
    Config { session_timeout_ms: 120_000, presence_timeout_ms: 30_000, roster_cache_ms: 0, ..Config::default() }
}

#[test]
fn presence_flips_exactly_at_timeout() {
    let (_d, app, clock) = app_with(exact());
    let a = app.join(None).unwrap();
    let b = app.join(None).unwrap();
    let b_active =
        |app: &AppState| app.users(&a.token).unwrap().into_iter().find(|u| u.handle == b.handle).unwrap().active;
    clock.advance(30_000);
    assert!(b_active(&app), "idle for exactly the timeout is still active");
    clock.advance(1);
    assert!(!b_active(&app));
    app.users(&b.token).unwrap();
    assert!(b_active(&app), "any authenticated request refreshes presence");
}

#[test]
fn inactive_known_handles_stay_listed() {
    let (_d, app, clock) = app_with(Config { session_timeout_ms: 1_000, ..exact() });
    let gone = app.join(Some("Ghost")).unwrap();
    app.send(&gone.token, &ScopeRequest::Public, "boo").unwrap();
    clock.advance(5_000);
    app.sweep_sessions();
    let me = app.join(None).unwrap();
    let users = app.users(&me.token).unwrap();
    let ghost = users.iter().find(|u| u.handle == gone.handle).unwrap();
    assert_eq!(ghost.display_name.as_deref(), Some("Ghost"));
    assert!(!ghost.active);
}

#[test]
fn idle_session_expires_with_gone() {
    let (_d, app, clock) = app_with(Config { session_timeout_ms: 1_000, ..exact() });
    let a = app.join(None).unwrap();
    clock.advance(1_000);
    app.users(&a.token).expect("idle for exactly the timeout is still live");
    clock.advance(1_001);
    assert!(matches!(app.users(&a.token), Err(ApiError::SessionExpired)));
    assert!(matches!(app.users(&a.token), Err(ApiError::SessionExpired)), "expiry is sticky");
    assert!(matches!(app.users("not-a-token"), Err(ApiError::BadToken)));
}

#[test]
fn sweep_expires_sessions_nobody_touches() {
    let (_d, app, clock) = app_with(Config { session_timeout_ms: 1_000, ..exact() });
    let a = app.join(None).unwrap();
    let _b = app.join(None).unwrap();
    assert_eq!(app.live_sessions(), 2);
    clock.advance(1_500);
    assert_eq!(app.sweep_sessions(), 2);
    assert_eq!(app.live_sessions(), 0);
    assert!(matches!(app.users(&a.token), Err(ApiError::SessionExpired)));
}

#[test]
fn cached_roster_sees_joins_and_profile_edits_at_once() {
    let (_d, app, _clock) = app_with(Config { roster_cache_ms: 60_000, ..exact() });
    let a = app.join(None).unwrap();
    assert_eq!(app.users(&a.token).unwrap().len(), 1);
    let b = app.join(None).unwrap();
    assert_eq!(app.users(&a.token).unwrap().len(), 2);
    app.update_profile(&b.token, Some("Bea"), None).unwrap();
    let users = app.users(&a.token).unwrap();
    assert_eq!(users.iter().find(|u| u.handle == b.handle).unwrap().display_name.as_deref(), Some("Bea"));
}

#[test]
fn profile_merges_fields() {
    let (_d, app, _clock) = app_with(exact());
    let a = app.join(None).unwrap();
    app.update_profile(&a.token, None, Some("brb")).unwrap();
    let name = |app: &AppState| app.users(&a.token).unwrap()[0].display_name.clone();
    assert_eq!(name(&app).as_deref(), Some(a.handle.as_str()), "unnamed profile defaults to the handle");
    app.update_profile(&a.token, Some("Ada"), None).unwrap();
    assert_eq!(app.store().read().profile(&a.handle).unwrap().status.as_str(), "brb");
    assert!(matches!(app.update_profile(&a.token, Some(""), None), Err(ApiError::InvalidDisplayName(_))));
    assert!(matches!(app.update_profile(&a.token, None, Some(&"s".repeat(65))), Err(ApiError::InvalidStatus(_))));
}

#[tokio::test]
async fn poll_page_bytes_match_the_wire_type() {
    let (_d, app, _clock) = app_with(exact());
    let a = app.join(Some("Ada")).unwrap();
    let b = app.join(None).unwrap();
    app.send(&a.token, &ScopeRequest::Public, "hi :)").unwrap();
    app.send(&a.token, &ScopeRequest::PrivateTo(b.handle.to_string()), "psst").unwrap();
    let page = app.poll(&b.token, 0, 0, 90).await.unwrap();
    let json = page.to_json();
    let wire: PollResponse = page.into_wire();
    assert_eq!(json, serde_json::to_string(&wire).unwrap());
    assert_eq!(wire.messages.len(), 2);
    assert_eq!(wire.messages[0].expanded, "hi \u{1F642}");
    assert_eq!(wire.cursor, 2);
}

#[tokio::test]
async fn poll_rejects_cursor_beyond_tail() {
    let (_d, app, _clock) = app_with(exact());
    let a = app.join(None).unwrap();
    app.send(&a.token, &ScopeRequest::Public, "one").unwrap();
    assert!(app.poll(&a.token, 1, 0, 0).await.unwrap().messages.is_empty());
    assert!(matches!(app.poll(&a.token, 2, 0, 0).await, Err(ApiError::CursorAhead { cursor: 2, max: 1 })));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn parked_poll_wakes_on_append() {
    let (_d, app, _clock) = app_with(exact());
    let a = app.join(None).unwrap();
    let b = app.join(None).unwrap();
    let waiter = {
        let app = app.clone();
        let token = b.token.clone();
        tokio::spawn(async move {
            let started = Instant::now();
            let page = app.poll(&token, 0, 10_000, 0).await.unwrap();
            (page.into_wire(), started.elapsed())
        })
    };
    tokio::time::sleep(Duration::from_millis(100)).await;
    app.send(&a.token, &ScopeRequest::Public, "wake").unwrap();
    let (resp, waited) = waiter.await.unwrap();
    assert_eq!(resp.messages.len(), 1);
    assert!(waited < Duration::from_secs(2), "woke after {waited:?}");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn parked_poll_ignores_traffic_it_cannot_see() {
    let (_d, app, _clock) = app_with(exact());
    let a = app.join(None).unwrap();
    let b = app.join(None).unwrap();
    let c = app.join(None).unwrap();
    let waiter = {
        let app = app.clone();
        let token = c.token.clone();
        tokio::spawn(async move { app.poll(&token, 0, 400, 0).await.unwrap().into_wire() })
    };
    tokio::time::sleep(Duration::from_millis(50)).await;
    app.send(&a.token, &ScopeRequest::PrivateTo(b.handle.to_string()), "not for c").unwrap();
    let resp = waiter.await.unwrap();
    assert!(resp.messages.is_empty());
    assert_eq!(resp.cursor, 1, "cursor still advances past invisible messages");
}

#[tokio::test]
async fn wait_is_clamped_to_configured_maximum() {
    let (_d, app, _clock) = app_with(Config { max_wait_ms: 100, ..exact() });
    let a = app.join(None).unwrap();
    let started = Instant::now();
    let page = app.poll(&a.token, 0, 60_000, 0).await.unwrap();
    assert!(page.messages.is_empty());
    assert!(started.elapsed() < Duration::from_secs(5));
}

#[test]
fn delete_conversation_is_one_sided_and_prospective() {
    let (_d, app, _clock) = app_with(exact());
    let a = app.join(None).unwrap();
    let b = app.join(None).unwrap();
    let to_b = ScopeRequest::PrivateTo(b.handle.to_string());
    let to_a = ScopeRequest::PrivateTo(a.handle.to_string());
    for i in 0..3 {
        app.send(&a.token, &to_b, &format!("m{i}")).unwrap();
    }
    assert_eq!(app.delete_conversation(&a.token, &to_b).unwrap(), 3);
    assert!(app.history(&a.token, &to_b, None, 50, 0).unwrap().messages.is_empty());
    assert_eq!(app.history(&b.token, &to_a, None, 50, 0).unwrap().messages.len(), 3);
    app.send(&b.token, &to_a, "after").unwrap();
    assert_eq!(app.history(&a.token, &to_b, None, 50, 0).unwrap().messages.len(), 1);
    assert_eq!(app.history(&b.token, &to_a, None, 50, 0).unwrap().messages.len(), 4);
}

#[test]
fn group_rules() {
    let (_d, app, _clock) = app_with(exact());
    let a = app.join(None).unwrap();
    let b = app.join(None).unwrap();
    let id = app.create_group(&a.token, "team").unwrap();
    let scope = ScopeRequest::Group(id.to_string());
    assert!(matches!(app.send(&b.token, &scope, "let me in"), Err(ApiError::NotGroupMember)));
    assert!(matches!(app.history(&b.token, &scope, None, 10, 0), Err(ApiError::NotAuthorized)));
    let joined = app.join_group(&b.token, id.as_str()).unwrap();
    assert_eq!(joined.members.len(), 2);
    app.send(&b.token, &scope, "hi team").unwrap();
    assert_eq!(app.history(&a.token, &scope, None, 10, 0).unwrap().messages.len(), 1);
    assert!(matches!(app.join_group(&b.token, "g-ffffff"), Err(ApiError::UnknownGroup(_))));
    assert!(matches!(app.join_group(&b.token, "nonsense"), Err(ApiError::UnknownGroup(_))));
    let listed = app.list_groups(&b.token).unwrap();
    assert_eq!((listed.len(), listed[0].name.as_str()), (1, "team"));
}
