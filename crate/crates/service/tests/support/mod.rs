#![allow(dead_code)]

use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use tearsim_core::protocol::{ClientMessage, Envelope, ServerMessage};

/// Serves a fresh app on an ephemeral port and returns its base URL.
pub async fn spawn_server() -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        tearsim_service::serve(listener, std::future::pending()).await.unwrap();
    });
    format!("http://{addr}")
}

pub async fn create_session(http: &reqwest::Client, base: &str) -> String {
    let r: serde_json::Value = http.post(format!("{base}/sessions")).send().await.unwrap().json().await.unwrap();
    r["session"].as_str().unwrap().to_string()
}

pub async fn post_message(http: &reqwest::Client, base: &str, id: &str, msg: &ClientMessage) -> Vec<ServerMessage> {
    let out: Vec<Envelope> = http
        .post(format!("{base}/sessions/{id}/messages"))
        .body(Envelope::client(msg, None).to_json())
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    out.iter().map(|e| e.server_message().unwrap()).collect()
}

pub struct Ws {
    inner: WebSocketStream<MaybeTlsStream<TcpStream>>,
}

impl Ws {
    pub async fn connect(base: &str, id: &str, query: &str) -> Ws {
        let url = format!("{}/sessions/{id}/ws{query}", base.replacen("http", "ws", 1));
        let (inner, _) = tokio_tungstenite::connect_async(url).await.unwrap();
        Ws { inner }
    }

    pub async fn send_text(&mut self, text: String) {
        self.inner.send(Message::text(text)).await.unwrap();
    }

    pub async fn send(&mut self, msg: &ClientMessage) {
        self.send_text(Envelope::client(msg, None).to_json()).await;
    }

    /// Next envelope, or `None` once the server closes.
    pub async fn recv(&mut self) -> Option<Envelope> {
        loop {
            match self.inner.next().await? {
                Ok(Message::Text(t)) => return Some(Envelope::parse(&t).unwrap()),
                Ok(Message::Close(_)) | Err(_) => return None,
                Ok(_) => continue,
            }
        }
    }

    /// Receives until an envelope of `kind` arrives, returning everything
    /// seen on the way, the match included.
    pub async fn recv_until(&mut self, kind: &str) -> Vec<Envelope> {
        let mut out = Vec::new();
        loop {
            let env = self.recv().await.unwrap_or_else(|| panic!("closed while waiting for {kind}"));
            let done = env.kind == kind;
            out.push(env);
            if done {
                return out;
            }
        }
    }

    pub async fn close(mut self) {
        let _ = self.inner.close(None).await;
    }
}
