use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use anonroom_core::wire::{ErrorBody, JoinResponse, ScopeSpec, SendResponse, WireMessage};

use crate::HarnessError;

/// The parts of a poll response the harness checks. The presence list is
/// skipped without being decoded.
#[derive(Debug, Deserialize)]
pub struct PollPage {
    pub messages: Vec<WireMessage>,
    pub cursor: u64,
}

/// Thin typed wrapper over the server's JSON endpoints.
#[derive(Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    pub fn new(base_url: &str) -> Result<Self, HarnessError> {
        let http = reqwest::Client::builder()
            .pool_max_idle_per_host(1024)
            .connect_timeout(Duration::from_secs(5))
            .build()
            .map_err(|e| HarnessError::Usage(format!("cannot build http client: {e}")))?;
        Ok(Client { http, base: base_url.trim_end_matches('/').to_owned() })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn finish(resp: Result<reqwest::Response, reqwest::Error>) -> Result<String, HarnessError> {
        let resp = resp.map_err(HarnessError::from_transport)?;
        let status = resp.status();
        let text = resp.text().await.map_err(HarnessError::from_transport)?;
        if status.is_success() {
            return Ok(text);
        }
        let (code, detail) = match serde_json::from_str::<ErrorBody>(&text) {
            Ok(b) => (b.error, b.detail),
            Err(_) => (String::new(), text),
        };
        Err(HarnessError::Api { status: status.as_u16(), code, detail })
    }

    fn decode<T: DeserializeOwned>(text: &str) -> Result<T, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Protocol(format!("{e}: {text}")))
    }

    pub async fn post_raw(&self, path: &str, body: &Value) -> Result<String, HarnessError> {
        let resp = self.http.post(format!("{}{path}", self.base)).json(body).send().await;
        Self::finish(resp).await
    }

    pub async fn get_raw(
        &self,
        path: &str,
        query: &[(&str, String)],
        timeout: Duration,
    ) -> Result<String, HarnessError> {
        let resp = self.http.get(format!("{}{path}", self.base)).query(query).timeout(timeout).send().await;
        Self::finish(resp).await
    }

    pub async fn join(&self, display_name: Option<&str>) -> Result<JoinResponse, HarnessError> {
        let body = match display_name {
            Some(n) => json!({ "display_name": n }),
            None => json!({}),
        };
        Self::decode(&self.post_raw("/api/join", &body).await?)
    }

    pub async fn send(&self, token: &str, scope: &ScopeSpec, text: &str) -> Result<SendResponse, HarnessError> {
        let body = json!({ "token": token, "scope": scope, "text": text });
        Self::decode(&self.post_raw("/api/send", &body).await?)
    }

    pub async fn poll(&self, token: &str, cursor: u64, wait_ms: u64) -> Result<PollPage, HarnessError> {
        let query = [("token", token.to_owned()), ("cursor", cursor.to_string()), ("wait_ms", wait_ms.to_string())];
        let timeout = Duration::from_millis(wait_ms) + Duration::from_secs(30);
        Self::decode(&self.get_raw("/api/poll", &query, timeout).await?)
    }

    /// Raw body of a history page, for byte-level comparison.
    pub async fn history_raw(&self, token: &str, scope_query: &str, limit: usize) -> Result<String, HarnessError> {
        let query = [("token", token.to_owned()), ("scope", scope_query.to_owned()), ("limit", limit.to_string())];
        self.get_raw("/api/history", &query, Duration::from_secs(30)).await
    }

    pub async fn users_raw(&self, token: &str) -> Result<String, HarnessError> {
        self.get_raw("/api/users", &[("token", token.to_owned())], Duration::from_secs(30)).await
    }

    pub async fn create_group(&self, token: &str, name: &str) -> Result<String, HarnessError> {
        let v: Value = Self::decode(&self.post_raw("/api/groups", &json!({ "token": token, "name": name })).await?)?;
        v["group_id"].as_str().map(str::to_owned).ok_or_else(|| HarnessError::Protocol(format!("no group_id in {v}")))
    }

    pub async fn join_group(&self, token: &str, group_id: &str) -> Result<(), HarnessError> {
        self.post_raw("/api/groups/join", &json!({ "token": token, "group_id": group_id })).await?;
        Ok(())
    }

    pub async fn delete_conversation(&self, token: &str, scope: &ScopeSpec) -> Result<u64, HarnessError> {
        let v: Value = Self::decode(
            &self.post_raw("/api/conversations/delete", &json!({ "token": token, "scope": scope })).await?,
        )?;
        v["upto_seq"].as_u64().ok_or_else(|| HarnessError::Protocol(format!("no upto_seq in {v}")))
    }

    pub async fn set_profile(&self, token: &str, name: Option<&str>, status: Option<&str>) -> Result<(), HarnessError> {
        let mut body = json!({ "token": token });
        if let Some(n) = name {
            body["display_name"] = json!(n);
        }
        if let Some(s) = status {
            body["status"] = json!(s);
        }
        self.post_raw("/api/profile", &body).await?;
        Ok(())
    }
}
