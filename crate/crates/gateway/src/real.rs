//! HTTP-backed provider for a remote model endpoint.
//!
//! Configuration comes from the environment: `GATEWAY_URL` names the base
//! endpoint (POST `{url}/chat` and `{url}/embed`), `GATEWAY_KEY` the bearer
//! token. Request and response bodies mirror the in-process types.

use crate::{ChatRequest, ChatResponse, Embedding, GatewayError, Provider};
use serde::Deserialize;
use std::time::Duration;

pub const URL_ENV: &str = "GATEWAY_URL";
pub const KEY_ENV: &str = "GATEWAY_KEY";

pub struct RealProvider {
    url: String,
    key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct EmbedReply {
    values: Vec<f32>,
}

impl RealProvider {
    pub fn new(url: impl Into<String>, key: Option<String>) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        Ok(Self {
            url: url.into(),
            key,
            client,
        })
    }

    /// Builds a provider from `GATEWAY_URL` / `GATEWAY_KEY`.
    pub fn from_env() -> Result<Self, GatewayError> {
        let url = std::env::var(URL_ENV)
            .map_err(|_| GatewayError::Transport(format!("{URL_ENV} not set")))?;
        Self::new(url, std::env::var(KEY_ENV).ok())
    }

    fn post<T: serde::de::DeserializeOwned>(
        &self,
        path: &str,
        body: &impl serde::Serialize,
    ) -> Result<T, GatewayError> {
        let mut req = self
            .client
            .post(format!("{}/{path}", self.url.trim_end_matches('/')))
            .json(body);
        if let Some(key) = &self.key {
            req = req.bearer_auth(key);
        }
        let response = req
            .send()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !response.status().is_success() {
            return Err(GatewayError::Transport(format!(
                "endpoint returned {}",
                response.status()
            )));
        }
        response
            .json::<T>()
            .map_err(|e| GatewayError::Transport(e.to_string()))
    }
}

impl Provider for RealProvider {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        self.post("chat", request)
    }

    fn embed(&self, text: &str) -> Result<Embedding, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyText);
        }
        let reply: EmbedReply = self.post("embed", &serde_json::json!({ "text": text }))?;
        Ok(Embedding::new(reply.values))
    }
}
