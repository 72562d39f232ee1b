//! HTTP bindings. Request bodies and query strings reject unknown fields,
//! so no endpoint can be handed a password, email or other identity.

use std::collections::HashMap;
use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::header;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::app::{check_offset, AppState, ScopeRequest};
use crate::ApiError;

const DEFAULT_HISTORY_LIMIT: usize = 50;

const PLACEHOLDER_INDEX: &str = "<!doctype html>\n<title>anonroom</title>\n\
<p>anonroom is running. The browser client is not installed; start the server \
with <code>--static-dir</code> pointing at its build output.</p>\n";

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    let bytes: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}" } else { bytes };
    serde_json::from_slice(bytes).map_err(|e| ApiError::BadRequest(e.to_string()))
}

struct Params(HashMap<String, String>);

impl Params {
    fn new(raw: HashMap<String, String>, allowed: &[&str]) -> Result<Self, ApiError> {
        if let Some(k) = raw.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(ApiError::BadRequest(format!("unknown query parameter {k:?}")));
        }
        Ok(Params(raw))
    }

    fn required(&self, key: &str) -> Result<&str, ApiError> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| ApiError::BadRequest(format!("missing query parameter {key:?}")))
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ApiError> {
        match self.0.get(key).filter(|v| !v.is_empty()) {
            None => Ok(None),
            Some(v) => {
                v.parse().map(Some).map_err(|_| ApiError::BadRequest(format!("{key} must be a non-negative integer")))
            }
        }
    }

    fn offset(&self) -> Result<i32, ApiError> {
        match self.0.get("tz_offset_min").filter(|v| !v.is_empty()) {
            None => Ok(0),
            Some(v) => {
                let n: i64 = v.parse().map_err(|_| ApiError::BadRequest("tz_offset_min must be an integer".into()))?;
                check_offset(n)
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScopeBody {
    kind: String,
    id: Option<String>,
    to: Option<String>,
    pair: Option<[String; 2]>,
}

impl TryFrom<ScopeBody> for ScopeRequest {
    type Error = ApiError;

    fn try_from(b: ScopeBody) -> Result<Self, ApiError> {
        let bad = |why: &str| ApiError::BadRequest(format!("scope: {why}"));
        match (b.kind.as_str(), b.id, b.to, b.pair) {
            ("public", None, None, None) => Ok(ScopeRequest::Public),
            ("group", Some(id), None, None) => Ok(ScopeRequest::Group(id)),
            ("private", None, Some(to), None) => Ok(ScopeRequest::PrivateTo(to)),
            ("private", None, None, Some([a, b])) => Ok(ScopeRequest::PrivatePair(a, b)),
            ("public" | "group" | "private", ..) => Err(bad("fields do not match kind")),
            (other, ..) => Err(bad(&format!("unknown kind {other:?}"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JoinBody {
    display_name: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SendBody {
    token: String,
    scope: ScopeBody,
    text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupCreateBody {
    token: String,
    name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupJoinBody {
    token: String,
    group_id: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DeleteBody {
    token: String,
    scope: ScopeBody,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileBody {
    token: String,
    display_name: Option<String>,
    status: Option<String>,
}

type ApiResult = Result<Response, ApiError>;

async fn join(State(app): State<AppState>, raw: Bytes) -> ApiResult {
    let b: JoinBody = body(&raw)?;
    Ok(Json(app.join(b.display_name.as_deref())?).into_response())
}

async fn send(State(app): State<AppState>, raw: Bytes) -> ApiResult {
    let b: SendBody = body(&raw)?;
    let scope = ScopeRequest::try_from(b.scope)?;
    Ok(Json(app.send(&b.token, &scope, &b.text)?).into_response())
}

async fn poll(State(app): State<AppState>, Query(q): Query<HashMap<String, String>>) -> ApiResult {
    let q = Params::new(q, &["token", "cursor", "wait_ms", "tz_offset_min"])?;
    let token = q.required("token")?;
    let cursor = q.number("cursor")?.unwrap_or(0);
    let wait_ms = q.number("wait_ms")?.unwrap_or(0);
    let page = app.poll(token, cursor, wait_ms, q.offset()?).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], page.to_json()).into_response())
}

async fn users(State(app): State<AppState>, Query(q): Query<HashMap<String, String>>) -> ApiResult {
    let q = Params::new(q, &["token"])?;
    let users = app.users(q.required("token")?)?;
    Ok(Json(json!({ "users": users })).into_response())
}

async fn create_group(State(app): State<AppState>, raw: Bytes) -> ApiResult {
    let b: GroupCreateBody = body(&raw)?;
    let id = app.create_group(&b.token, &b.name)?;
    Ok(Json(json!({ "group_id": id })).into_response())
}

async fn join_group(State(app): State<AppState>, raw: Bytes) -> ApiResult {
    let b: GroupJoinBody = body(&raw)?;
    Ok(Json(app.join_group(&b.token, &b.group_id)?).into_response())
}

async fn list_groups(State(app): State<AppState>, Query(q): Query<HashMap<String, String>>) -> ApiResult {
    let q = Params::new(q, &["token"])?;
    let groups = app.list_groups(q.required("token")?)?;
    Ok(Json(json!({ "groups": groups })).into_response())
}

async fn history(State(app): State<AppState>, Query(q): Query<HashMap<String, String>>) -> ApiResult {
    let q = Params::new(q, &["token", "scope", "before", "limit", "tz_offset_min"])?;
    let scope = ScopeRequest::parse_query(q.required("scope")?)?;
    let limit = q.number("limit")?.unwrap_or(DEFAULT_HISTORY_LIMIT);
    let before = q.number("before")?;
    let page = app.history(q.required("token")?, &scope, before, limit, q.offset()?)?;
    Ok(Json(page).into_response())
}

async fn delete_conversation(State(app): State<AppState>, raw: Bytes) -> ApiResult {
    let b: DeleteBody = body(&raw)?;
    let scope = ScopeRequest::try_from(b.scope)?;
    let upto = app.delete_conversation(&b.token, &scope)?;
    Ok(Json(json!({ "upto_seq": upto })).into_response())
}

async fn profile(State(app): State<AppState>, raw: Bytes) -> ApiResult {
    let b: ProfileBody = body(&raw)?;
    app.update_profile(&b.token, b.display_name.as_deref(), b.status.as_deref())?;
    Ok(Json(json!({})).into_response())
}

async fn placeholder_index() -> Html<&'static str> {
    Html(PLACEHOLDER_INDEX)
}

pub fn router(app: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/join", post(join))
        .route("/api/send", post(send))
        .route("/api/poll", get(poll))
        .route("/api/users", get(users))
        .route("/api/groups", post(create_group).get(list_groups))
        .route("/api/groups/join", post(join_group))
        .route("/api/history", get(history))
        .route("/api/conversations/delete", post(delete_conversation))
        .route("/api/profile", post(profile))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(placeholder_index)),
    }
}
