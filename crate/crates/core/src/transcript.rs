//! Structured event log of a run, serialized as one JSON object per line.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub run_id: String,
    pub seq: u64,
    pub phase: String,
    pub actor: String,
    pub event: String,
    /// First 16 hex digits of SHA-256 over the event payload.
    pub digest: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    run_id: String,
    events: Vec<TranscriptEvent>,
}

pub fn payload_digest(payload: &[u8]) -> String {
    let d = Sha256::digest(payload);
    hex::encode(&d[..8])
}

impl Transcript {
    pub fn new(run_id: impl Into<String>) -> Self {
        Transcript { run_id: run_id.into(), events: Vec::new() }
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn record(&mut self, phase: &str, actor: &str, event: &str, payload: &[u8]) {
        let seq = self.events.len() as u64;
        self.events.push(TranscriptEvent {
            run_id: self.run_id.clone(),
            seq,
            phase: phase.to_string(),
            actor: actor.to_string(),
            event: event.to_string(),
            digest: payload_digest(payload),
        });
    }

    pub fn events(&self) -> &[TranscriptEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn extend(&mut self, other: &Transcript) {
        for e in &other.events {
            self.record_raw(e);
        }
    }

    fn record_raw(&mut self, e: &TranscriptEvent) {
        let seq = self.events.len() as u64;
        self.events.push(TranscriptEvent { run_id: self.run_id.clone(), seq, ..e.clone() });
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            // serializing a struct of plain strings cannot fail
            let line = serde_json::to_string(e).expect("transcript event serializes");
            let _ = writeln!(out, "{line}");
        }
        out
    }

    pub fn from_jsonl(text: &str) -> serde_json::Result<Self> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str::<TranscriptEvent>)
            .collect::<serde_json::Result<Vec<_>>>()?;
        let run_id = events.first().map(|e| e.run_id.clone()).unwrap_or_default();
        Ok(Transcript { run_id, events })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let mut t = Transcript::new("run-1");
        t.record("keydist", "charlie", "decode", b"abc");
        t.record("voting", "voter", "cast", b"");
        let text = t.to_jsonl();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(Transcript::from_jsonl(&text).unwrap(), t);
    }

    #[test]
    fn digest_is_stable() {
        // SHA-256("abc") = ba7816bf8f01cfea...
        assert_eq!(payload_digest(b"abc"), "ba7816bf8f01cfea");
    }
}
