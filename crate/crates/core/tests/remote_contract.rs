use std::time::{Duration, Instant};

use semcom_core::llm_backend::contract::{CannedReply, ContractServer};
use semcom_core::llm_backend::{BackendConfig, LlmError, RemoteBackend};

fn config(server: &ContractServer) -> BackendConfig {
    BackendConfig {
        backoff_base: Duration::from_millis(10),
        timeout: Duration::from_secs(5),
        ..BackendConfig::remote(server.url(), "test-key")
    }
}

#[test]
fn returns_first_choice_and_sends_chat_shape() {
    let plan = "Video Sampler | Vehicle Density Estimation | Analysis";
    let server = ContractServer::start([CannedReply::chat(plan)]).unwrap();
    let backend = RemoteBackend::new(config(&server)).unwrap();
    assert_eq!(backend.complete("plan this").unwrap(), plan);

    let reqs = server.requests();
    assert_eq!(reqs.len(), 1);
    let body: serde_json::Value = serde_json::from_str(&reqs[0]).unwrap();
    assert_eq!(body["model"], "gpt-4");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["role"], "user");
    assert_eq!(body["messages"][1]["content"], "plan this");
}

#[test]
fn retries_server_errors_then_succeeds() {
    let server = ContractServer::start([
        CannedReply::status(503, "busy"),
        CannedReply::status(500, "oops"),
        CannedReply::chat("Yes."),
    ])
    .unwrap();
    let backend = RemoteBackend::new(config(&server)).unwrap();
    assert_eq!(backend.complete("p").unwrap(), "Yes.");
    let log = backend.call_log().records();
    assert_eq!(log.len(), 3);
    assert!(log[2].outcome.is_ok());
}

#[test]
fn retries_never_exceed_configuration() {
    let server = ContractServer::start([CannedReply::status(503, "busy")]).unwrap();
    let cfg = BackendConfig {
        max_retries: 3,
        ..config(&server)
    };
    let backend = RemoteBackend::new(cfg).unwrap();
    let err = backend.complete("p").unwrap_err();
    assert!(matches!(err, LlmError::RetriesExhausted { attempts: 4, .. }), "{err:?}");
    assert_eq!(backend.call_log().attempts(), 4);
    assert_eq!(server.requests().len(), 4);
}

#[test]
fn client_errors_are_not_retried() {
    let server = ContractServer::start([CannedReply::status(401, "bad key")]).unwrap();
    let backend = RemoteBackend::new(config(&server)).unwrap();
    let err = backend.complete("p").unwrap_err();
    assert_eq!(
        err,
        LlmError::Status {
            code: 401,
            body: "bad key".into()
        }
    );
    assert_eq!(backend.call_log().attempts(), 1);
}

#[test]
fn slow_server_times_out_after_retries() {
    let server = ContractServer::start([CannedReply::chat("late").delayed(Duration::from_millis(300))]).unwrap();
    let cfg = BackendConfig {
        timeout: Duration::from_millis(1),
        max_retries: 2,
        ..config(&server)
    };
    let backend = RemoteBackend::new(cfg).unwrap();
    let started = Instant::now();
    let err = backend.complete("p").unwrap_err();
    assert_eq!(err, LlmError::Timeout { attempts: 3 });
    assert_eq!(backend.call_log().attempts(), 3);
    assert!(started.elapsed() < Duration::from_secs(3));
}

#[test]
fn malformed_body_is_a_bad_response() {
    let server = ContractServer::start([CannedReply::status(200, "{\"choices\":[]}")]).unwrap();
    let backend = RemoteBackend::new(config(&server)).unwrap();
    assert!(matches!(backend.complete("p"), Err(LlmError::BadResponse(_))));
}

#[test]
fn refused_connection_exhausts_retries() {
    let url = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}/v1/chat/completions", l.local_addr().unwrap())
    };
    let cfg = BackendConfig {
        backoff_base: Duration::from_millis(5),
        max_retries: 1,
        ..BackendConfig::remote(url, "k")
    };
    let backend = RemoteBackend::new(cfg).unwrap();
    let err = backend.complete("p").unwrap_err();
    assert!(matches!(err, LlmError::RetriesExhausted { attempts: 2, .. }), "{err:?}");
}
