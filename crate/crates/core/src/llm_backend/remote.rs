use std::io;
use std::thread;

use serde_json::{json, Value};
use ureq::Agent;

use super::{BackendConfig, CallLog, CallRecord, LlmError};

const SYSTEM_PROMPT: &str = "You are the task planner of a video transmitter. Follow the instructions exactly.";

enum Failure {
    Timeout,
    Transport(String),
    RetryableStatus(u16, String),
    Fatal(LlmError),
}

/// Blocking chat-completion client.
#[derive(Debug)]
pub struct RemoteBackend {
    config: BackendConfig,
    agent: Agent,
    log: CallLog,
}

impl RemoteBackend {
    pub fn new(config: BackendConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            config,
            agent,
            log: CallLog::default(),
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    pub fn call_log(&self) -> &CallLog {
        &self.log
    }

    pub fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": prompt},
            ],
            "temperature": self.config.temperature,
        });
        let attempts = 1 + self.config.max_retries;
        let mut last = Failure::Transport(String::new());
        for attempt in 1..=attempts {
            if attempt > 1 {
                thread::sleep(self.config.backoff(attempt - 1));
            }
            match self.attempt(&body) {
                Ok(text) => {
                    self.log.push(CallRecord {
                        attempt,
                        outcome: Ok(()),
                    });
                    return Ok(text);
                }
                Err(Failure::Fatal(e)) => {
                    self.log.push(CallRecord {
                        attempt,
                        outcome: Err(e.to_string()),
                    });
                    return Err(e);
                }
                Err(f) => {
                    let note = match &f {
                        Failure::Timeout => "timeout".to_string(),
                        Failure::Transport(m) => m.clone(),
                        Failure::RetryableStatus(code, _) => format!("HTTP {code}"),
                        Failure::Fatal(_) => unreachable!(),
                    };
                    tracing::warn!(attempt, attempts, %note, "completion attempt failed");
                    self.log.push(CallRecord {
                        attempt,
                        outcome: Err(note),
                    });
                    last = f;
                }
            }
        }
        Err(match last {
            Failure::Timeout => LlmError::Timeout { attempts },
            Failure::Transport(m) => LlmError::RetriesExhausted { attempts, last: m },
            Failure::RetryableStatus(code, body) => LlmError::RetriesExhausted {
                attempts,
                last: format!("HTTP {code}: {body}"),
            },
            Failure::Fatal(e) => e,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, Failure> {
        let endpoint = self.config.endpoint.as_deref().unwrap_or_default();
        let key = self.config.api_key.as_ref().map(|k| k.expose()).unwrap_or_default();
        let mut resp = self
            .agent
            .post(endpoint)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(body)
            .map_err(classify)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(classify)?;
        if !(200..300).contains(&status) {
            return Err(if status == 429 || status >= 500 {
                Failure::RetryableStatus(status, text)
            } else {
                Failure::Fatal(LlmError::Status {
                    code: status,
                    body: text,
                })
            });
        }
        extract_content(&text).map_err(Failure::Fatal)
    }
}

fn classify(err: ureq::Error) -> Failure {
    match err {
        ureq::Error::Timeout(_) => Failure::Timeout,
        ureq::Error::Io(e) if matches!(e.kind(), io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock) => {
            Failure::Timeout
        }
        ureq::Error::BadUri(u) => Failure::Fatal(LlmError::Config(format!("bad endpoint uri {u}"))),
        other => Failure::Transport(other.to_string()),
    }
}

/// Reads `choices[0].message.content` from a chat-completion response body.
pub(crate) fn extract_content(body: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::BadResponse(format!("not JSON: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::BadResponse("missing choices[0].message.content".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_extraction() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"Yes."}}]}"#;
        assert_eq!(extract_content(ok).unwrap(), "Yes.");
        assert!(matches!(extract_content("{}"), Err(LlmError::BadResponse(_))));
        assert!(matches!(extract_content("<html>"), Err(LlmError::BadResponse(_))));
    }
}
