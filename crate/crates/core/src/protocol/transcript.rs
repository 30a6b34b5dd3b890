//! Hash-chained, line-delimited session transcripts.
//!
//! Line 0 is a header record, every following line one [`ChannelMessage`]. Each line
//! ends with a `chain` field holding `sha256(previous line || "\n" || this record)`,
//! where "this record" is the line's JSON without the `chain` field. Editing any
//! line breaks its own chain value and every chain after it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChannelMessage, SessionKind};
use crate::error::{Error, Result};
use crate::group_math::{GroupElement, GroupParams, Scalar};
use crate::hashing::ChallengeHash;

pub const TRANSCRIPT_VERSION: u32 = 1;

const CHAIN_SUFFIX: &str = ",\"chain\":\"";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub record: HeaderTag,
    pub version: u32,
    pub session_id: u64,
    pub session: SessionKind,
    pub params: GroupParams,
    pub hash: ChallengeHash,
    pub y_s: GroupElement,
    pub y_r: GroupElement,
    #[serde(rename = "W")]
    pub w: GroupElement,
    pub subset: Vec<Scalar>,
    pub redacted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeaderTag {
    Header,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: u64,
    #[serde(flatten)]
    pub message: ChannelMessage,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub redacted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new(header: TranscriptHeader) -> Self {
        Transcript {
            header,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, message: ChannelMessage) {
        let seq = self.entries.len() as u64 + 1;
        self.entries.push(TranscriptEntry {
            seq,
            message,
            redacted: false,
        });
    }

    pub fn messages(&self) -> impl Iterator<Item = &ChannelMessage> {
        self.entries.iter().map(|e| &e.message)
    }

    /// A copy with every private payload removed.
    pub fn public(&self) -> Transcript {
        let mut header = self.header.clone();
        header.redacted = true;
        let entries = self
            .entries
            .iter()
            .map(|e| {
                if e.message.is_private() {
                    let mut message = e.message.clone();
                    message.payload = serde_json::Value::Null;
                    TranscriptEntry {
                        seq: e.seq,
                        message,
                        redacted: true,
                    }
                } else {
                    e.clone()
                }
            })
            .collect();
        Transcript { header, entries }
    }

    pub fn is_redacted(&self) -> bool {
        self.header.redacted || self.entries.iter().any(|e| e.redacted)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut prev = String::new();
        let bodies =
            std::iter::once(serde_json::to_string(&self.header)).chain(self.entries.iter().map(serde_json::to_string));
        for body in bodies {
            let body = body.expect("transcript records always serialize");
            let line = seal(&prev, &body);
            out.push_str(&line);
            out.push('\n');
            prev = line;
        }
        out
    }

    /// Parses a transcript, checking the hash chain line by line.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut prev = String::new();
        let mut header = None;
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let body = unseal(&prev, line).ok_or(Error::Tampered(idx + 1))?;
            if idx == 0 {
                let h: TranscriptHeader = serde_json::from_str(&body).map_err(|_| Error::Tampered(idx + 1))?;
                if h.version != TRANSCRIPT_VERSION {
                    return Err(Error::VersionMismatch {
                        found: h.version,
                        expected: TRANSCRIPT_VERSION,
                    });
                }
                header = Some(h);
            } else {
                let entry: TranscriptEntry = serde_json::from_str(&body).map_err(|_| Error::Tampered(idx + 1))?;
                if entry.seq != entries.len() as u64 + 1 {
                    return Err(Error::Tampered(idx + 1));
                }
                entries.push(entry);
            }
            prev = line.to_string();
        }
        let header = header.ok_or(Error::Empty("transcript"))?;
        Ok(Transcript { header, entries })
    }
}

fn chain_digest(prev: &str, body: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prev.as_bytes());
    hasher.update(b"\n");
    hasher.update(body.as_bytes());
    hex::encode(hasher.finalize())
}

/// Appends the chain field to a JSON object body.
fn seal(prev: &str, body: &str) -> String {
    debug_assert!(body.ends_with('}'));
    let digest = chain_digest(prev, body);
    format!("{}{CHAIN_SUFFIX}{digest}\"}}", &body[..body.len() - 1])
}

/// Strips and checks the chain field, returning the record body.
fn unseal(prev: &str, line: &str) -> Option<String> {
    let cut = line.rfind(CHAIN_SUFFIX)?;
    let tail = &line[cut + CHAIN_SUFFIX.len()..];
    let digest = tail.strip_suffix("\"}")?;
    let body = format!("{}}}", &line[..cut]);
    (chain_digest(prev, &body) == digest).then_some(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{MessageKind, Party, Recipients};

    fn sample() -> Transcript {
        let p = GroupParams::small(47, 23, 2).unwrap();
        let mut t = Transcript::new(TranscriptHeader {
            record: HeaderTag::Header,
            version: TRANSCRIPT_VERSION,
            session_id: 1,
            session: SessionKind::Signing,
            params: p.clone(),
            hash: ChallengeHash::Production,
            y_s: p.element(27u32).unwrap(),
            y_r: p.element(34u32).unwrap(),
            w: p.element(9u32).unwrap(),
            subset: vec![p.scalar(9u32)],
            redacted: false,
        });
        t.push(ChannelMessage {
            kind: MessageKind::CommitmentPublic,
            sender: Party::Member(crate::shares::Org::Sender, p.scalar(9u32)),
            recipients: Recipients::All,
            payload: serde_json::json!({"signer_id": "9", "u": "18", "w": "21"}),
        });
        t.push(ChannelMessage {
            kind: MessageKind::PartialSignature,
            sender: Party::Member(crate::shares::Org::Sender, p.scalar(9u32)),
            recipients: Recipients::Explicit(vec![Party::Ctc]),
            payload: serde_json::json!({"signer_id": "9", "s": "22"}),
        });
        t
    }

    #[test]
    fn roundtrip_and_chain() {
        let t = sample();
        let text = t.to_jsonl();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.contains("\"chain\":\"")));
        assert_eq!(Transcript::from_jsonl(&text).unwrap(), t);
    }

    #[test]
    fn any_edit_is_detected() {
        let text = sample().to_jsonl();
        for (line_no, needle, replacement) in [
            (1, "\"27\"", "\"28\""),
            (2, "\"18\"", "\"19\""),
            (3, "\"22\"", "\"21\""),
        ] {
            let edited: String = text
                .lines()
                .enumerate()
                .map(|(i, l)| {
                    if i + 1 == line_no {
                        format!("{}\n", l.replacen(needle, replacement, 1))
                    } else {
                        format!("{l}\n")
                    }
                })
                .collect();
            assert_ne!(edited, text);
            assert_eq!(Transcript::from_jsonl(&edited), Err(Error::Tampered(line_no)));
        }
    }

    #[test]
    fn dropped_line_is_detected() {
        let text = sample().to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        let dropped = format!("{}\n{}\n", lines[0], lines[2]);
        assert_eq!(Transcript::from_jsonl(&dropped), Err(Error::Tampered(2)));
    }

    #[test]
    fn public_copy_redacts_private_payloads() {
        let public = sample().public();
        assert!(public.is_redacted());
        assert_eq!(public.entries[0].message.payload["u"], "18");
        assert!(public.entries[1].message.payload.is_null());
        let text = public.to_jsonl();
        assert!(!text.contains("\"22\""));
        assert_eq!(Transcript::from_jsonl(&text).unwrap(), public);
    }
}
