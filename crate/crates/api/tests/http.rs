//! Status codes, error bodies and request parsing over real HTTP.

use std::sync::Arc;

use serde_json::{json, Value};

use anonroom_server::clock::SystemClock;
use anonroom_server::{spawn_local, AppState, Config};
use anonroom_store::Store;

struct Srv {
    _dir: tempfile::TempDir,
    base: String,
    http: reqwest::Client,
}

impl Srv {
    async fn start() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let app = AppState::new(Store::open(dir.path()).unwrap(), Config::default(), Arc::new(SystemClock));
        let addr = spawn_local(app).await.unwrap();
        Srv { _dir: dir, base: format!("http://{addr}"), http: reqwest::Client::new() }
    }

    async fn post(&self, path: &str, body: impl Into<reqwest::Body>) -> (u16, Value) {
        let r = self
            .http
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap())
    }

    async fn post_json(&self, path: &str, body: Value) -> (u16, Value) {
        self.post(path, body.to_string()).await
    }

    async fn get(&self, path_and_query: &str) -> (u16, Value) {
        let r = self.http.get(format!("{}{path_and_query}", self.base)).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap())
    }

    async fn join(&self) -> (String, String) {
        let (s, v) = self.post_json("/api/join", json!({})).await;
        assert_eq!(s, 200, "{v}");
        (v["token"].as_str().unwrap().to_owned(), v["handle"].as_str().unwrap().to_owned())
    }

    async fn send(&self, token: &str, scope: Value, text: &str) -> (u16, Value) {
        self.post_json("/api/send", json!({ "token": token, "scope": scope, "text": text })).await
    }
}

fn assert_error(resp: (u16, Value), status: u16, code: &str) {
    assert_eq!(resp.0, status, "{}", resp.1);
    assert_eq!(resp.1["error"], code, "{}", resp.1);
    assert!(resp.1["detail"].is_string(), "{}", resp.1);
}

#[tokio::test]
async fn join_needs_nothing() {
    let s = Srv::start().await;
    let (status, v) = s.post_json("/api/join", json!({})).await;
    assert_eq!(status, 200);
    let handle = v["handle"].as_str().unwrap();
    assert!(handle.starts_with("guest-") && handle.len() == 12, "{handle}");
    assert_eq!(v["token"].as_str().unwrap().len(), 32);
    assert_eq!(s.post("/api/join", "").await.0, 200, "empty body counts as {{}}");
    let (status, v) = s.post_json("/api/join", json!({ "display_name": "Ada" })).await;
    assert_eq!(status, 200);
    let (_, users) = s.get(&format!("/api/users?token={}", v["token"].as_str().unwrap())).await;
    assert!(users["users"].as_array().unwrap().iter().any(|u| u["display_name"] == "Ada"));
}

#[tokio::test]
async fn no_endpoint_takes_credentials() {
    let s = Srv::start().await;
    let (token, _) = s.join().await;
    for (path, body) in [
        ("/api/join", json!({ "password": "hunter2" })),
        ("/api/join", json!({ "email": "a@example.com" })),
        ("/api/join", json!({ "display_name": "Ada", "user": "ada" })),
        ("/api/send", json!({ "token": token, "scope": {"kind": "public"}, "text": "x", "password": "p" })),
        ("/api/groups", json!({ "token": token, "name": "g", "secret": "s" })),
        ("/api/profile", json!({ "token": token, "email": "a@example.com" })),
    ] {
        assert_error(s.post_json(path, body).await, 400, "BadRequest");
    }
    assert_error(s.get(&format!("/api/users?token={token}&password=x")).await, 400, "BadRequest");
    assert_error(s.get(&format!("/api/poll?token={token}&login=x")).await, 400, "BadRequest");
}

#[tokio::test]
async fn character_limit_boundary() {
    let s = Srv::start().await;
    let (token, _) = s.join().await;
    let pub_scope = json!({ "kind": "public" });
    assert_eq!(s.send(&token, pub_scope.clone(), &"a".repeat(255)).await.0, 200);
    assert_eq!(s.send(&token, pub_scope.clone(), &"é".repeat(255)).await.0, 200, "counted in characters, not bytes");
    assert_error(s.send(&token, pub_scope.clone(), &"a".repeat(256)).await, 400, "MessageTooLong");
    assert_error(s.send(&token, pub_scope.clone(), "").await, 400, "EmptyMessage");
    assert_eq!(s.send(&token, pub_scope, "   ").await.0, 200, "whitespace is content");
}

#[tokio::test]
async fn error_statuses() {
    let s = Srv::start().await;
    let (a, ha) = s.join().await;
    let (b, hb) = s.join().await;
    let (c, _) = s.join().await;

    assert_error(s.send("nope", json!({ "kind": "public" }), "x").await, 401, "BadToken");
    assert_error(s.get("/api/users?token=nope").await, 401, "BadToken");
    assert_error(s.get("/api/users").await, 400, "BadRequest");
    assert_error(s.send(&a, json!({ "kind": "private", "to": "guest-000000" }), "x").await, 404, "UnknownRecipient");
    assert_error(s.send(&a, json!({ "kind": "private", "to": "bob" }), "x").await, 404, "UnknownRecipient");
    assert_error(s.send(&a, json!({ "kind": "private", "to": ha }), "x").await, 400, "SelfScope");
    assert_error(s.send(&a, json!({ "kind": "group", "id": "g-000000" }), "x").await, 404, "UnknownGroup");
    assert_error(s.send(&a, json!({ "kind": "broadcast" }), "x").await, 400, "BadRequest");
    assert_error(s.send(&a, json!({ "kind": "public", "to": hb }), "x").await, 400, "BadRequest");

    let (_, g) = s.post_json("/api/groups", json!({ "token": a, "name": "team" })).await;
    let gid = g["group_id"].as_str().unwrap();
    assert_error(s.send(&b, json!({ "kind": "group", "id": gid }), "x").await, 403, "NotGroupMember");
    assert_error(s.get(&format!("/api/history?token={b}&scope=group:{gid}")).await, 403, "NotAuthorized");

    assert_eq!(s.send(&a, json!({ "kind": "private", "to": hb }), "x").await.0, 200);
    assert_error(s.get(&format!("/api/history?token={c}&scope=private:{ha},{hb}")).await, 403, "NotAuthorized");
    assert_eq!(s.get(&format!("/api/history?token={b}&scope=private:{ha},{hb}")).await.0, 200);

    assert_error(s.get(&format!("/api/poll?token={a}&cursor=99")).await, 409, "CursorAhead");
    assert_error(s.get(&format!("/api/poll?token={a}&cursor=-1")).await, 400, "BadRequest");
    assert_error(s.get(&format!("/api/history?token={a}&scope=public&limit=0")).await, 400, "InvalidLimit");
    assert_error(s.get(&format!("/api/history?token={a}&scope=public&limit=201")).await, 400, "InvalidLimit");
    assert_error(s.get(&format!("/api/history?token={a}&scope=everyone")).await, 400, "BadRequest");
    assert_error(s.get(&format!("/api/poll?token={a}&tz_offset_min=900")).await, 400, "InvalidOffset");
    assert_error(s.post("/api/send", "{not json").await, 400, "BadRequest");
}

#[tokio::test]
async fn wire_message_shape() {
    let s = Srv::start().await;
    let (a, ha) = s.join().await;
    s.send(&a, json!({ "kind": "public" }), "hello :D").await;
    let (status, v) = s.get(&format!("/api/poll?token={a}&cursor=0&wait_ms=0&tz_offset_min=60")).await;
    assert_eq!(status, 200);
    let m = &v["messages"][0];
    assert_eq!(m["seq"], 1);
    assert_eq!(m["from"], ha.as_str());
    assert_eq!(m["scope"], json!({ "kind": "public" }));
    assert_eq!(m["raw"], "hello :D");
    assert_eq!(m["expanded"], "hello \u{1F600}");
    let time = m["time"].as_str().unwrap();
    assert!(time.ends_with(" am") || time.ends_with(" pm"), "{time}");
    assert_eq!(v["cursor"], 1);
    assert_eq!(v["users"][0]["active"], true);
}

#[tokio::test]
async fn history_pages_newest_first() {
    let s = Srv::start().await;
    let (a, _) = s.join().await;
    for i in 1..=5 {
        s.send(&a, json!({ "kind": "public" }), &format!("m{i}")).await;
    }
    let seqs =
        |v: &Value| v["messages"].as_array().unwrap().iter().map(|m| m["seq"].as_u64().unwrap()).collect::<Vec<_>>();
    let (_, p1) = s.get(&format!("/api/history?token={a}&scope=public&limit=2")).await;
    assert_eq!(seqs(&p1), [5, 4]);
    let (_, p2) = s.get(&format!("/api/history?token={a}&scope=public&limit=2&before=4")).await;
    assert_eq!(seqs(&p2), [3, 2]);
    let (_, p3) = s.get(&format!("/api/history?token={a}&scope=public&before=2")).await;
    assert_eq!(seqs(&p3), [1]);
}

#[tokio::test]
async fn delete_over_http() {
    let s = Srv::start().await;
    let (a, _) = s.join().await;
    let (b, _) = s.join().await;
    s.send(&b, json!({ "kind": "public" }), "one").await;
    let (status, v) =
        s.post_json("/api/conversations/delete", json!({ "token": a, "scope": { "kind": "public" } })).await;
    assert_eq!((status, v["upto_seq"].as_u64()), (200, Some(1)));
    let (_, mine) = s.get(&format!("/api/history?token={a}&scope=public")).await;
    let (_, theirs) = s.get(&format!("/api/history?token={b}&scope=public")).await;
    assert_eq!((mine["messages"].as_array().unwrap().len(), theirs["messages"].as_array().unwrap().len()), (0, 1));
}

#[tokio::test]
async fn root_serves_a_page() {
    let s = Srv::start().await;
    let r = s.http.get(format!("{}/", s.base)).send().await.unwrap();
    assert_eq!(r.status().as_u16(), 200);
    assert!(r.headers()["content-type"].to_str().unwrap().starts_with("text/html"));
}
