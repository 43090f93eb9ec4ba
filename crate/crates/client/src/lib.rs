//! Thin async client for the tearing service.

use serde::de::DeserializeOwned;
use serde::Serialize;

use tearsim_core::api::{
    ApiError, BenchRequest, BenchResponse, DecomposeRequest, DecomposeResponse, Health, ReplayRequest,
    ReplayResponse, SessionCreated, SessionDigest, TearRequest, TearResponse,
};
use tearsim_core::protocol::{ClientMessage, Envelope};

pub const DEFAULT_SERVER: &str = "http://127.0.0.1:7878";

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("server answered {status}: {message}")]
    Api { status: u16, message: String },
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let text = resp.text().await.unwrap_or_default();
        let message = serde_json::from_str::<ApiError>(&text).map(|e| e.error).unwrap_or(text);
        Err(ClientError::Api {
            status: status.as_u16(),
            message,
        })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        Self::decode(self.http.get(self.url(path)).send().await?).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        Self::decode(self.http.post(self.url(path)).json(body).send().await?).await
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        self.get("/health").await
    }

    pub async fn create_session(&self) -> Result<String, ClientError> {
        let r: SessionCreated = Self::decode(self.http.post(self.url("/sessions")).send().await?).await?;
        Ok(r.session)
    }

    pub async fn delete_session(&self, id: &str) -> Result<(), ClientError> {
        let resp = self.http.delete(self.url(&format!("/sessions/{id}"))).send().await?;
        if resp.status().is_success() {
            Ok(())
        } else {
            Self::decode::<serde_json::Value>(resp).await.map(|_| ())
        }
    }

    /// Sends raw envelope text; the server answers malformed text in-band.
    pub async fn send_text(&self, id: &str, text: String) -> Result<Vec<Envelope>, ClientError> {
        let resp = self
            .http
            .post(self.url(&format!("/sessions/{id}/messages")))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(text)
            .send()
            .await?;
        Self::decode(resp).await
    }

    pub async fn send(&self, id: &str, env: &Envelope) -> Result<Vec<Envelope>, ClientError> {
        self.send_text(id, env.to_json()).await
    }

    pub async fn send_message(
        &self,
        id: &str,
        msg: &ClientMessage,
        revision: Option<u64>,
    ) -> Result<Vec<Envelope>, ClientError> {
        self.send(id, &Envelope::client(msg, revision)).await
    }

    pub async fn tick(&self, id: &str) -> Result<Vec<Envelope>, ClientError> {
        Self::decode(self.http.post(self.url(&format!("/sessions/{id}/tick"))).send().await?).await
    }

    pub async fn snapshot(&self, id: &str) -> Result<Envelope, ClientError> {
        self.get(&format!("/sessions/{id}/snapshot")).await
    }

    pub async fn transcript(&self, id: &str) -> Result<Vec<Envelope>, ClientError> {
        self.get(&format!("/sessions/{id}/transcript")).await
    }

    pub async fn digest(&self, id: &str) -> Result<SessionDigest, ClientError> {
        self.get(&format!("/sessions/{id}/digest")).await
    }

    pub async fn replay(&self, transcript: Vec<Envelope>) -> Result<ReplayResponse, ClientError> {
        self.post("/replay", &ReplayRequest { transcript }).await
    }

    pub async fn tear(&self, req: &TearRequest) -> Result<TearResponse, ClientError> {
        self.post("/tear", req).await
    }

    pub async fn decompose(&self, req: &DecomposeRequest) -> Result<DecomposeResponse, ClientError> {
        self.post("/decompose", req).await
    }

    pub async fn bench(&self, req: &BenchRequest) -> Result<BenchResponse, ClientError> {
        self.post("/bench", req).await
    }
}
