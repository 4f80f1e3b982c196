mod common;

use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use tokio::runtime::Runtime;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use semcom_core::client_eval::Client;
use semcom_core::orchestrator::{serve, ServerOptions, Transmitter, TransmitterConfig};
use semcom_core::protocol::{codes, decode_message, encode_message, Body, Message};

use common::*;

struct Running {
    rt: Runtime,
    addr: String,
    stop: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<std::io::Result<()>>>,
}

impl Running {
    fn start(options: ServerOptions) -> Self {
        let rt = Runtime::new().unwrap();
        let t = Arc::new(Transmitter::new(fixture_store(), TransmitterConfig::default()).unwrap());
        let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let (tx, rx) = oneshot::channel::<()>();
        let task = rt.spawn(serve(listener, t, options, async {
            let _ = rx.await;
        }));
        Self {
            rt,
            addr,
            stop: Some(tx),
            task: Some(task),
        }
    }

    fn raw(&self) -> TcpStream {
        let s = TcpStream::connect(&self.addr).unwrap();
        s.set_read_timeout(Some(Duration::from_secs(30))).unwrap();
        s
    }

    fn shutdown(mut self) {
        let _ = self.stop.take().unwrap().send(());
        let task = self.task.take().unwrap();
        self.rt
            .block_on(async { tokio::time::timeout(Duration::from_secs(10), task).await })
            .expect("server drained in time")
            .unwrap()
            .unwrap();
    }
}

fn error_code(msg: &Message) -> &str {
    match &msg.body {
        Body::ErrorReply { code, .. } => code,
        other => panic!("expected ERROR_REPLY, got {other:?}"),
    }
}

#[test]
fn malformed_frame_leaves_connection_usable() {
    let server = Running::start(ServerOptions::default());
    let mut s = server.raw();
    let junk = br#"{"session_id":"bad1","type":"REQUEST"}"#;
    s.write_all(&(junk.len() as u32).to_be_bytes()).unwrap();
    s.write_all(junk).unwrap();
    let reply = decode_message(&mut s).unwrap();
    assert_eq!(error_code(&reply), codes::BAD_MESSAGE);
    assert_eq!(reply.session_id, "bad1");

    s.write_all(&encode_message(&Message::request("ok1", "c02", "Is there a traffic jam in the video?")).unwrap())
        .unwrap();
    let reply = decode_message(&mut s).unwrap();
    assert_eq!(reply.session_id, "ok1");
    assert!(matches!(reply.body, Body::FeedbackText { .. }));
    server.shutdown();
}

#[test]
fn oversize_frame_is_refused_and_closed() {
    let server = Running::start(ServerOptions { max_request_bytes: 64 });
    let mut s = server.raw();
    s.write_all(&1000u32.to_be_bytes()).unwrap();
    let reply = decode_message(&mut s).unwrap();
    assert_eq!(error_code(&reply), codes::BAD_MESSAGE);
    let mut rest = Vec::new();
    assert_eq!(s.read_to_end(&mut rest).unwrap_or(0), 0);
    server.shutdown();
}

#[test]
fn non_request_and_unknown_clip_get_error_replies() {
    let server = Running::start(ServerOptions::default());
    let mut c = Client::connect(&server.addr, Duration::from_secs(30)).unwrap();
    let reply = c.send(&Message::error("e1", "X", "not a request")).unwrap();
    assert_eq!(error_code(&reply), codes::UNEXPECTED_MESSAGE);
    let reply = c.request("zz", "Is there a traffic jam?").unwrap();
    assert_eq!(error_code(&reply), codes::NO_CLIP);
    server.shutdown();
}

#[test]
fn shutdown_closes_idle_connections() {
    let server = Running::start(ServerOptions::default());
    let mut idle = server.raw();
    let mut c = Client::connect(&server.addr, Duration::from_secs(30)).unwrap();
    assert!(matches!(
        c.request("c01", "How many lanes are there?").unwrap().body,
        Body::FeedbackText { .. }
    ));
    let reader = thread::spawn(move || {
        let mut buf = Vec::new();
        idle.read_to_end(&mut buf).map(|_| buf.len())
    });
    server.shutdown();
    assert_eq!(reader.join().unwrap().unwrap(), 0);
}

#[test]
fn pipelined_requests_are_answered_in_order() {
    let server = Running::start(ServerOptions::default());
    let mut s = server.raw();
    let ids = ["p1", "p2", "p3"];
    for id in ids {
        s.write_all(&encode_message(&Message::request(id, "c03", "Is there a pedestrian in the video?")).unwrap())
            .unwrap();
    }
    for id in ids {
        assert_eq!(decode_message(&mut s).unwrap().session_id, id);
    }
    server.shutdown();
}
