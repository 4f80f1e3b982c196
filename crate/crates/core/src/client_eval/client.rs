use std::fs;
use std::io::{self, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use crate::protocol::{decode_message, write_message, Body, DecodeError, Message};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot connect to {endpoint}: {source}")]
    Connect {
        endpoint: String,
        #[source]
        source: io::Error,
    },
    #[error("send failed: {0}")]
    Send(#[source] io::Error),
    #[error("bad reply: {0}")]
    Reply(#[from] DecodeError),
    #[error("reply is for session '{got}', expected '{expected}'")]
    SessionMismatch { expected: String, got: String },
}

static COUNTER: AtomicU64 = AtomicU64::new(0);

/// Process-unique session id.
pub fn new_session_id() -> String {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    format!(
        "{}-{:x}-{}",
        std::process::id(),
        nanos,
        COUNTER.fetch_add(1, Ordering::Relaxed)
    )
}

/// Blocking receiver connection; one request at a time.
pub struct Client {
    stream: TcpStream,
}

impl Client {
    pub fn connect(endpoint: &str, timeout: Duration) -> Result<Self, ClientError> {
        let err = |source| ClientError::Connect {
            endpoint: endpoint.to_string(),
            source,
        };
        let addr = endpoint
            .to_socket_addrs()
            .map_err(err)?
            .next()
            .ok_or_else(|| err(io::Error::new(io::ErrorKind::NotFound, "no address")))?;
        let stream = TcpStream::connect_timeout(&addr, timeout).map_err(err)?;
        stream.set_read_timeout(Some(timeout)).map_err(err)?;
        stream.set_nodelay(true).map_err(err)?;
        Ok(Self { stream })
    }

    pub fn send(&mut self, msg: &Message) -> Result<Message, ClientError> {
        write_message(&mut self.stream, msg).map_err(ClientError::Send)?;
        let reply = decode_message(&mut self.stream)?;
        if reply.session_id != msg.session_id && reply.session_id != "-" {
            return Err(ClientError::SessionMismatch {
                expected: msg.session_id.clone(),
                got: reply.session_id,
            });
        }
        Ok(reply)
    }

    pub fn request(&mut self, clip_id: &str, text: &str) -> Result<Message, ClientError> {
        self.send(&Message::request(new_session_id(), clip_id, text))
    }

    /// Writes raw bytes; for exercising the server's error handling.
    pub fn send_raw(&mut self, bytes: &[u8]) -> Result<Message, ClientError> {
        self.stream.write_all(bytes).map_err(ClientError::Send)?;
        Ok(decode_message(&mut self.stream)?)
    }
}

pub const DEFAULT_CLIENT_TIMEOUT: Duration = Duration::from_secs(120);

/// Connects, sends one request, and returns the reply.
pub fn submit_request(endpoint: &str, clip_id: &str, text: &str) -> Result<Message, ClientError> {
    Client::connect(endpoint, DEFAULT_CLIENT_TIMEOUT)?.request(clip_id, text)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rendered {
    Text { answer: String },
    Frames { files: Vec<PathBuf>, explanation: String },
    Error { code: String, detail: String },
}

pub fn frame_file_name(frame_id: u32) -> String {
    format!("frame_{frame_id:04}.bin")
}

/// Prints a reply; frame payloads are written as `frame_NNNN.bin` under `out_dir`.
pub fn render_feedback(msg: &Message, out_dir: &Path, out: &mut impl Write) -> io::Result<Rendered> {
    match &msg.body {
        Body::FeedbackText {
            answer,
            plan_trace,
            tool_used,
        } => {
            writeln!(out, "{answer}")?;
            writeln!(out, "[tool: {tool_used}; plans tried: {}]", plan_trace.join(" / "))?;
            Ok(Rendered::Text { answer: answer.clone() })
        }
        Body::FeedbackFrames {
            frames,
            explanation,
            plan_trace,
            ..
        } => {
            fs::create_dir_all(out_dir)?;
            let mut files = Vec::with_capacity(frames.len());
            for f in frames {
                let path = out_dir.join(frame_file_name(f.frame_id));
                fs::write(&path, &f.payload)?;
                writeln!(out, "{}", path.display())?;
                files.push(path);
            }
            writeln!(out, "{explanation}")?;
            if !plan_trace.is_empty() {
                writeln!(out, "[plans tried: {}]", plan_trace.join(" / "))?;
            }
            Ok(Rendered::Frames {
                files,
                explanation: explanation.clone(),
            })
        }
        Body::ErrorReply { code, detail } => {
            writeln!(out, "error {code}: {detail}")?;
            Ok(Rendered::Error {
                code: code.clone(),
                detail: detail.clone(),
            })
        }
        Body::Request { .. } => Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "transmitter replied with a REQUEST",
        )),
    }
}
