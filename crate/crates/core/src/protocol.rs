//! Length-prefixed JSON wire format between receiver and transmitter.
//!
//! A frame is a 4-byte big-endian payload length followed by a compact JSON
//! object whose keys are sorted lexicographically. The top-level `"type"`
//! field names the variant. Binary frame payloads travel as base64 strings.

use std::io::{self, Read, Write};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

/// Largest payload a frame may carry (2^31 - 1 bytes).
pub const MAX_PAYLOAD: usize = i32::MAX as usize;

pub const DEFAULT_PORT: u16 = 7077;

pub const TAG_REQUEST: &str = "REQUEST";
pub const TAG_FEEDBACK_TEXT: &str = "FEEDBACK_TEXT";
pub const TAG_FEEDBACK_FRAMES: &str = "FEEDBACK_FRAMES";
pub const TAG_ERROR_REPLY: &str = "ERROR_REPLY";

const TAGS: [&str; 4] = [TAG_REQUEST, TAG_FEEDBACK_TEXT, TAG_FEEDBACK_FRAMES, TAG_ERROR_REPLY];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub session_id: String,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Body {
    Request {
        clip_id: String,
        text: String,
    },
    FeedbackText {
        answer: String,
        plan_trace: Vec<String>,
        tool_used: String,
    },
    FeedbackFrames {
        frame_ids: Vec<u32>,
        frames: Vec<FramePayload>,
        explanation: String,
        plan_trace: Vec<String>,
    },
    ErrorReply {
        code: String,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePayload {
    pub frame_id: u32,
    #[serde(serialize_with = "to_base64", deserialize_with = "from_base64")]
    pub payload: Vec<u8>,
}

fn to_base64<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&BASE64.encode(bytes))
}

fn from_base64<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
    let text = String::deserialize(d)?;
    BASE64.decode(text.as_bytes()).map_err(serde::de::Error::custom)
}

/// Error codes carried by `ERROR_REPLY`.
pub mod codes {
    pub const NO_CLIP: &str = "NO_CLIP";
    pub const BAD_MESSAGE: &str = "BAD_MESSAGE";
    pub const UNEXPECTED_MESSAGE: &str = "UNEXPECTED_MESSAGE";
    pub const INTERNAL: &str = "INTERNAL";
}

impl Message {
    pub fn request(session_id: impl Into<String>, clip_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            body: Body::Request {
                clip_id: clip_id.into(),
                text: text.into(),
            },
        }
    }

    pub fn error(session_id: impl Into<String>, code: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            body: Body::ErrorReply {
                code: code.into(),
                detail: detail.into(),
            },
        }
    }

    pub fn type_tag(&self) -> &'static str {
        match self.body {
            Body::Request { .. } => TAG_REQUEST,
            Body::FeedbackText { .. } => TAG_FEEDBACK_TEXT,
            Body::FeedbackFrames { .. } => TAG_FEEDBACK_FRAMES,
            Body::ErrorReply { .. } => TAG_ERROR_REPLY,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.session_id.is_empty() {
            return Err("session_id is empty".into());
        }
        match &self.body {
            Body::Request { text, .. } if text.trim().is_empty() => Err("request text is empty".into()),
            Body::FeedbackFrames { frame_ids, frames, .. } => {
                if frame_ids.windows(2).any(|w| w[0] >= w[1]) {
                    return Err("frame_ids must be strictly increasing".into());
                }
                if frames.len() != frame_ids.len() || frames.iter().zip(frame_ids).any(|(f, id)| f.frame_id != *id) {
                    return Err("frames must match frame_ids in length and order".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EncodeError {
    #[error("payload of {len} bytes exceeds the {limit}-byte frame limit")]
    Oversize { len: usize, limit: usize },
    #[error("message violates protocol invariants: {0}")]
    Invalid(String),
}

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("stream ended after {got} of {expected} bytes")]
    Truncated { expected: usize, got: usize },
    #[error("declared payload of {len} bytes exceeds the {limit}-byte frame limit")]
    Oversize { len: usize, limit: usize },
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("unknown message type '{0}'")]
    UnknownType(String),
    #[error("message violates protocol invariants: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl DecodeError {
    /// True when the stream closed cleanly before any byte of a new frame.
    pub fn is_clean_eof(&self) -> bool {
        matches!(self, DecodeError::Truncated { expected: 4, got: 0 })
    }
}

/// Canonical JSON payload (no length prefix).
pub fn encode_payload(msg: &Message) -> Result<Vec<u8>, EncodeError> {
    msg.validate().map_err(EncodeError::Invalid)?;
    // serde_json::Map is ordered by key, so going through Value canonicalises field order.
    let value = serde_json::to_value(msg).map_err(|e| EncodeError::Invalid(e.to_string()))?;
    Ok(serde_json::to_vec(&value).expect("Value serialization is infallible"))
}

pub fn encode_message(msg: &Message) -> Result<Vec<u8>, EncodeError> {
    encode_with_limit(msg, MAX_PAYLOAD)
}

pub(crate) fn encode_with_limit(msg: &Message, limit: usize) -> Result<Vec<u8>, EncodeError> {
    let payload = encode_payload(msg)?;
    if payload.len() > limit {
        return Err(EncodeError::Oversize {
            len: payload.len(),
            limit,
        });
    }
    let mut out = Vec::with_capacity(4 + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> Result<(), io::Error> {
    let bytes = encode_message(msg).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    w.write_all(&bytes)?;
    w.flush()
}

/// Decodes a JSON payload that has already been stripped of its length prefix.
pub fn decode_payload(payload: &[u8]) -> Result<Message, DecodeError> {
    let value: Value = serde_json::from_slice(payload).map_err(|e| DecodeError::Malformed(e.to_string()))?;
    let tag = value
        .get("type")
        .ok_or_else(|| DecodeError::Malformed("missing \"type\" field".into()))?
        .as_str()
        .ok_or_else(|| DecodeError::Malformed("\"type\" is not a string".into()))?;
    if !TAGS.contains(&tag) {
        return Err(DecodeError::UnknownType(tag.to_string()));
    }
    let msg: Message = serde_json::from_value(value).map_err(|e| DecodeError::Malformed(e.to_string()))?;
    msg.validate().map_err(DecodeError::Invalid)?;
    Ok(msg)
}

fn read_fully<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize, io::Error> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Reads exactly one frame. Bytes after the declared payload are left unread.
pub fn decode_message<R: Read>(r: &mut R) -> Result<Message, DecodeError> {
    let mut prefix = [0u8; 4];
    let got = read_fully(r, &mut prefix)?;
    if got < 4 {
        return Err(DecodeError::Truncated { expected: 4, got });
    }
    let len = u32::from_be_bytes(prefix) as usize;
    if len > MAX_PAYLOAD {
        return Err(DecodeError::Oversize {
            len,
            limit: MAX_PAYLOAD,
        });
    }
    let mut payload = Vec::new();
    let got = r.take(len as u64).read_to_end(&mut payload)?;
    if got < len {
        return Err(DecodeError::Truncated { expected: len, got });
    }
    decode_payload(&payload)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames_msg() -> Message {
        Message {
            session_id: "s1".into(),
            body: Body::FeedbackFrames {
                frame_ids: vec![3, 9],
                frames: vec![
                    FramePayload {
                        frame_id: 3,
                        payload: vec![0, 1, 2],
                    },
                    FramePayload {
                        frame_id: 9,
                        payload: vec![255],
                    },
                ],
                explanation: "I cannot fulfill your request directly.".into(),
                plan_trace: vec!["Video Sampler | Object Detection | Analysis".into()],
            },
        }
    }

    #[test]
    fn smallest_variant_layout() {
        let bytes = encode_message(&Message::error("s", "NO_CLIP", "")).unwrap();
        let body = br#"{"code":"NO_CLIP","detail":"","session_id":"s","type":"ERROR_REPLY"}"#;
        assert_eq!(&bytes[..4], &(body.len() as u32).to_be_bytes());
        assert_eq!(&bytes[4..], body);
    }

    #[test]
    fn request_round_trips() {
        let m = Message::request("abc", "c01", "Is there a traffic jam in the video?");
        let bytes = encode_message(&m).unwrap();
        assert_eq!(decode_message(&mut bytes.as_slice()).unwrap(), m);
    }

    #[test]
    fn frames_are_base64_and_keys_sorted() {
        let bytes = encode_message(&frames_msg()).unwrap();
        let text = std::str::from_utf8(&bytes[4..]).unwrap();
        assert!(text.contains(r#""payload":"AAEC""#), "{text}");
        let keys: Vec<&str> = ["explanation", "frame_ids", "frames", "plan_trace", "session_id", "type"].to_vec();
        let positions: Vec<usize> = keys.iter().map(|k| text.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
        assert_eq!(bytes, encode_message(&frames_msg()).unwrap());
    }

    #[test]
    fn truncated_stream() {
        let mut bytes = 10u32.to_be_bytes().to_vec();
        bytes.extend_from_slice(b"{\"a\"");
        match decode_message(&mut bytes.as_slice()).unwrap_err() {
            DecodeError::Truncated { expected, got } => assert_eq!((expected, got), (10, 4)),
            other => panic!("unexpected {other:?}"),
        }
        let err = decode_message(&mut [0u8, 0].as_slice()).unwrap_err();
        assert!(matches!(err, DecodeError::Truncated { expected: 4, got: 2 }));
        assert!(decode_message(&mut [].as_slice()).unwrap_err().is_clean_eof());
    }

    #[test]
    fn unknown_type() {
        let payload = br#"{"type":"BOGUS"}"#;
        let mut bytes = (payload.len() as u32).to_be_bytes().to_vec();
        bytes.extend_from_slice(payload);
        match decode_message(&mut bytes.as_slice()).unwrap_err() {
            DecodeError::UnknownType(t) => assert_eq!(t, "BOGUS"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_and_invalid_are_distinct() {
        assert!(matches!(decode_payload(b"{not json"), Err(DecodeError::Malformed(_))));
        assert!(matches!(
            decode_payload(br#"{"type":"REQUEST","session_id":"s"}"#),
            Err(DecodeError::Malformed(_))
        ));
        assert!(matches!(
            decode_payload(br#"{"type":"REQUEST","session_id":"s","clip_id":"c","text":"  "}"#),
            Err(DecodeError::Invalid(_))
        ));
        assert!(matches!(
            decode_payload(br#"{"type":"ERROR_REPLY","session_id":"","code":"x","detail":""}"#),
            Err(DecodeError::Invalid(_))
        ));
    }

    #[test]
    fn trailing_bytes_are_untouched() {
        let m = Message::error("s", "X", "y");
        let mut bytes = encode_message(&m).unwrap();
        bytes.extend_from_slice(b"rest");
        let mut cursor = io::Cursor::new(bytes);
        assert_eq!(decode_message(&mut cursor).unwrap(), m);
        let mut rest = Vec::new();
        cursor.read_to_end(&mut rest).unwrap();
        assert_eq!(rest, b"rest");
    }

    #[test]
    fn frame_invariants_enforced_on_encode() {
        let mut m = frames_msg();
        if let Body::FeedbackFrames { frame_ids, .. } = &mut m.body {
            frame_ids.reverse();
        }
        assert!(matches!(encode_message(&m), Err(EncodeError::Invalid(_))));
    }

    #[test]
    fn oversize_payload_names_limit() {
        let m = Message::error("s", "X", "a long enough detail string");
        match encode_with_limit(&m, 16).unwrap_err() {
            EncodeError::Oversize { limit, len } => {
                assert_eq!(limit, 16);
                assert!(len > 16);
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut bytes = (MAX_PAYLOAD as u32 + 1).to_be_bytes().to_vec();
        bytes.extend_from_slice(b"{}");
        assert!(matches!(
            decode_message(&mut bytes.as_slice()),
            Err(DecodeError::Oversize { .. })
        ));
    }
}
