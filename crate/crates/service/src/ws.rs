//! WebSocket transport: one envelope per text frame. The first frame must
//! be `hello`. With `?autotick_hz=N` the server injects `tick` messages at
//! that rate; they go through the session mailbox like any other message.

use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::response::Response;
use serde::Deserialize;

use tearsim_core::protocol::{ClientMessage, Envelope, ServerMessage};

use crate::{AppState, ServiceError, SessionHandle};

/// Fastest accepted autotick rate.
pub const MAX_AUTOTICK_HZ: f64 = 1000.0;

#[derive(Debug, Deserialize)]
pub struct WsParams {
    #[serde(default)]
    autotick_hz: Option<f64>,
}

pub async fn upgrade(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<WsParams>,
    ws: WebSocketUpgrade,
) -> Result<Response, ServiceError> {
    let session = state.session(&id)?;
    let period = match params.autotick_hz {
        None => None,
        Some(hz) if hz > 0.0 && hz <= MAX_AUTOTICK_HZ => Some(Duration::from_secs_f64(1.0 / hz)),
        Some(hz) => return Err(ServiceError::BadRequest(format!("autotick_hz must be in (0, {MAX_AUTOTICK_HZ}], got {hz}"))),
    };
    Ok(ws.on_upgrade(move |socket| serve(socket, session, period)))
}

async fn send_all(socket: &mut WebSocket, out: Vec<Envelope>) -> bool {
    for env in out {
        if socket.send(Message::Text(env.to_json().into())).await.is_err() {
            return false;
        }
    }
    true
}

fn is_error(out: &[Envelope]) -> bool {
    out.iter()
        .any(|e| matches!(e.server_message(), Ok(ServerMessage::Error { .. })))
}

async fn serve(mut socket: WebSocket, session: SessionHandle, period: Option<Duration>) {
    // Handshake.
    let first = loop {
        match socket.recv().await {
            Some(Ok(Message::Text(t))) => break t.to_string(),
            Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
            Some(Ok(_)) => continue,
        }
    };
    let hello = Envelope::parse(&first).ok().filter(|e| e.kind == "hello");
    let Some(hello) = hello else {
        let err = Envelope::server(
            &ServerMessage::Error {
                message: "first message must be hello".into(),
            },
            0,
        );
        let _ = send_all(&mut socket, vec![err]).await;
        let _ = socket.send(Message::Close(None)).await;
        return;
    };
    let Ok(out) = session.message(hello).await else {
        return;
    };
    let failed = is_error(&out);
    if !send_all(&mut socket, out).await || failed {
        let _ = socket.send(Message::Close(None)).await;
        return;
    }

    let mut ticker = period.map(|p| {
        let mut i = tokio::time::interval(p);
        i.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
        i
    });
    loop {
        let out = tokio::select! {
            frame = socket.recv() => match frame {
                Some(Ok(Message::Text(t))) => session.text(t.to_string()).await,
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => continue,
            },
            _ = async { ticker.as_mut().unwrap().tick().await }, if ticker.is_some() => {
                session.message(Envelope::client(&ClientMessage::Tick {}, None)).await
            }
        };
        match out {
            Ok(out) => {
                if !send_all(&mut socket, out).await {
                    break;
                }
            }
            Err(_) => break,
        }
    }
}
