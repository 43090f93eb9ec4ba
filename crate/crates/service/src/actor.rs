//! One session per mailbox. Each session runs on its own thread, so tear
//! work never stalls the async runtime and messages and ticks for a session
//! are handled strictly in arrival order.

use std::thread;

use tokio::sync::{mpsc, oneshot};

use tearsim_core::api::SessionDigest;
use tearsim_core::protocol::{ClientMessage, Envelope};
use tearsim_core::session::Session;

pub const MAILBOX_DEPTH: usize = 256;

#[derive(Debug, thiserror::Error)]
#[error("session has shut down")]
pub struct SessionClosed;

enum Command {
    Text(String, oneshot::Sender<Vec<Envelope>>),
    Message(Envelope, oneshot::Sender<Vec<Envelope>>),
    Snapshot(oneshot::Sender<Option<Envelope>>),
    Transcript(oneshot::Sender<Vec<Envelope>>),
    Digest(oneshot::Sender<SessionDigest>),
}

#[derive(Clone)]
pub struct SessionHandle {
    tx: mpsc::Sender<Command>,
}

fn run(mut session: Session, mut rx: mpsc::Receiver<Command>) {
    while let Some(cmd) = rx.blocking_recv() {
        match cmd {
            Command::Text(text, reply) => {
                let _ = reply.send(session.handle_text(&text));
            }
            Command::Message(env, reply) => {
                let _ = reply.send(session.handle(env));
            }
            Command::Snapshot(reply) => {
                let env = session
                    .snapshot()
                    .map(|m| Envelope::server(&m, session.revision()));
                let _ = reply.send(env);
            }
            Command::Transcript(reply) => {
                let _ = reply.send(session.transcript().to_vec());
            }
            Command::Digest(reply) => {
                let _ = reply.send(SessionDigest {
                    session: session.id().to_string(),
                    revision: session.revision(),
                    digest: session.state_digest(),
                });
            }
        }
    }
    tracing::debug!(session = session.id(), "session closed");
}

impl SessionHandle {
    /// Starts a session thread. It exits once every handle is dropped.
    pub fn spawn(id: String) -> std::io::Result<SessionHandle> {
        let (tx, rx) = mpsc::channel(MAILBOX_DEPTH);
        let session = Session::new(id.clone());
        thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || run(session, rx))?;
        Ok(SessionHandle { tx })
    }

    async fn call<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Result<T, SessionClosed> {
        let (tx, rx) = oneshot::channel();
        self.tx.send(make(tx)).await.map_err(|_| SessionClosed)?;
        rx.await.map_err(|_| SessionClosed)
    }

    pub async fn text(&self, text: String) -> Result<Vec<Envelope>, SessionClosed> {
        self.call(|r| Command::Text(text, r)).await
    }

    pub async fn message(&self, env: Envelope) -> Result<Vec<Envelope>, SessionClosed> {
        self.call(|r| Command::Message(env, r)).await
    }

    pub async fn tick(&self) -> Result<Vec<Envelope>, SessionClosed> {
        self.message(Envelope::client(&ClientMessage::Tick {}, None)).await
    }

    pub async fn snapshot(&self) -> Result<Option<Envelope>, SessionClosed> {
        self.call(Command::Snapshot).await
    }

    pub async fn transcript(&self) -> Result<Vec<Envelope>, SessionClosed> {
        self.call(Command::Transcript).await
    }

    pub async fn digest(&self) -> Result<SessionDigest, SessionClosed> {
        self.call(Command::Digest).await
    }
}
