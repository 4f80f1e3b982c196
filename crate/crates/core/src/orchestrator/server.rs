use std::future::Future;
use std::io;
use std::sync::Arc;

use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::watch;
use tokio::task::JoinSet;

use super::Transmitter;
use crate::protocol::{codes, decode_payload, encode_message, Message};

/// Inbound frames larger than this are refused and the connection closed.
pub const DEFAULT_MAX_REQUEST_BYTES: usize = 1 << 20;

#[derive(Debug, Clone, Copy)]
pub struct ServerOptions {
    pub max_request_bytes: usize,
}

impl Default for ServerOptions {
    fn default() -> Self {
        Self {
            max_request_bytes: DEFAULT_MAX_REQUEST_BYTES,
        }
    }
}

/// Accepts connections until `shutdown` resolves, then stops accepting, lets
/// in-flight sessions finish, and closes idle connections.
pub async fn serve(
    listener: TcpListener,
    transmitter: Arc<Transmitter>,
    options: ServerOptions,
    shutdown: impl Future<Output = ()>,
) -> io::Result<()> {
    let (stop_tx, stop_rx) = watch::channel(false);
    let mut conns = JoinSet::new();
    tokio::pin!(shutdown);
    loop {
        tokio::select! {
            _ = &mut shutdown => break,
            accepted = listener.accept() => {
                let (stream, peer) = match accepted {
                    Ok(a) => a,
                    Err(e) => {
                        tracing::warn!(error = %e, "accept failed");
                        continue;
                    }
                };
                tracing::debug!(%peer, "connection opened");
                let t = Arc::clone(&transmitter);
                let rx = stop_rx.clone();
                conns.spawn(async move {
                    if let Err(e) = connection(stream, t, options, rx).await {
                        tracing::debug!(%peer, error = %e, "connection ended with error");
                    }
                });
            }
            Some(_) = conns.join_next(), if !conns.is_empty() => {}
        }
    }
    drop(listener);
    let _ = stop_tx.send(true);
    tracing::info!(open = conns.len(), "shutting down; draining connections");
    while conns.join_next().await.is_some() {}
    Ok(())
}

enum Inbound {
    Frame(Vec<u8>),
    Closed,
    TooLarge(usize),
}

async fn read_frame(stream: &mut TcpStream, limit: usize) -> io::Result<Inbound> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        let n = stream.read(&mut prefix[got..]).await?;
        if n == 0 {
            return if got == 0 {
                Ok(Inbound::Closed)
            } else {
                Err(io::ErrorKind::UnexpectedEof.into())
            };
        }
        got += n;
    }
    let len = u32::from_be_bytes(prefix) as usize;
    if len > limit {
        return Ok(Inbound::TooLarge(len));
    }
    let mut payload = vec![0u8; len];
    stream.read_exact(&mut payload).await?;
    Ok(Inbound::Frame(payload))
}

async fn send(stream: &mut TcpStream, msg: &Message) -> io::Result<()> {
    let bytes = match encode_message(msg) {
        Ok(b) => b,
        Err(e) => {
            tracing::error!(error = %e, "reply could not be encoded");
            encode_message(&Message::error(&msg.session_id, codes::INTERNAL, e.to_string()))
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?
        }
    };
    stream.write_all(&bytes).await?;
    stream.flush().await
}

/// Session id to echo for an undecodable payload, if it carries one.
fn salvage_session_id(payload: &[u8]) -> String {
    serde_json::from_slice::<serde_json::Value>(payload)
        .ok()
        .and_then(|v| v.get("session_id")?.as_str().map(str::to_string))
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "-".to_string())
}

async fn connection(
    mut stream: TcpStream,
    transmitter: Arc<Transmitter>,
    options: ServerOptions,
    mut stop: watch::Receiver<bool>,
) -> io::Result<()> {
    loop {
        let inbound = tokio::select! {
            biased;
            _ = stop.wait_for(|s| *s) => return Ok(()),
            r = read_frame(&mut stream, options.max_request_bytes) => r?,
        };
        let payload = match inbound {
            Inbound::Closed => return Ok(()),
            Inbound::TooLarge(len) => {
                let detail = format!(
                    "frame of {len} bytes exceeds the {}-byte limit",
                    options.max_request_bytes
                );
                send(&mut stream, &Message::error("-", codes::BAD_MESSAGE, detail)).await?;
                return Ok(());
            }
            Inbound::Frame(p) => p,
        };
        let reply = match decode_payload(&payload) {
            Err(e) => Message::error(salvage_session_id(&payload), codes::BAD_MESSAGE, e.to_string()),
            Ok(msg) => {
                let t = Arc::clone(&transmitter);
                let sid = msg.session_id.clone();
                match tokio::task::spawn_blocking(move || t.handle_message(&msg)).await {
                    Ok(reply) => reply,
                    Err(e) => Message::error(sid, codes::INTERNAL, format!("session failed: {e}")),
                }
            }
        };
        send(&mut stream, &reply).await?;
    }
}
