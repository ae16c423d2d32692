//! Deterministic run transcript: a rolling hash over every delivered message,
//! an optional line dump, and the slice of traffic the adversary can see.

use std::fmt::Write as _;

use xxhash_rust::xxh3::{xxh3_64, Xxh3};

use super::message::{MsgKind, PlayerId};

/// Hash of the canonical payload encoding: one kind byte, then little-endian
/// 8-byte residues.
pub fn payload_hash(kind: MsgKind, words: &[u64]) -> u64 {
    let mut buf = Vec::with_capacity(1 + 8 * words.len());
    buf.push(kind.code());
    for w in words {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    xxh3_64(&buf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranscriptLine {
    pub round: u64,
    pub sender: PlayerId,
    pub recipient: PlayerId,
    pub tag: u64,
    pub payload_hash: u64,
}

/// A message sent to or by a controlled player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibleMessage {
    pub round: u64,
    pub sender: PlayerId,
    pub recipient: PlayerId,
    pub kind: MsgKind,
    pub words: Vec<u64>,
}

pub struct Transcript {
    hasher: Xxh3,
    messages: u64,
    lines: Option<Vec<TranscriptLine>>,
    visible: Option<Vec<VisibleMessage>>,
}

impl std::fmt::Debug for Transcript {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transcript").field("hash", &self.hash_hex()).field("messages", &self.messages).finish()
    }
}

impl Transcript {
    pub fn new(dump: bool, record_visible: bool) -> Self {
        Transcript {
            hasher: Xxh3::new(),
            messages: 0,
            lines: dump.then(Vec::new),
            visible: record_visible.then(Vec::new),
        }
    }

    pub(crate) fn record(&mut self, line: TranscriptLine) {
        let mut b = [0u8; 40];
        b[..8].copy_from_slice(&line.round.to_le_bytes());
        b[8..16].copy_from_slice(&(line.sender as u64).to_le_bytes());
        b[16..24].copy_from_slice(&(line.recipient as u64).to_le_bytes());
        b[24..32].copy_from_slice(&line.tag.to_le_bytes());
        b[32..].copy_from_slice(&line.payload_hash.to_le_bytes());
        self.hasher.update(&b);
        self.messages += 1;
        if let Some(l) = &mut self.lines {
            l.push(line);
        }
    }

    pub(crate) fn wants_visible(&self) -> bool {
        self.visible.is_some()
    }

    pub(crate) fn record_visible(&mut self, m: VisibleMessage) {
        if let Some(v) = &mut self.visible {
            v.push(m);
        }
    }

    pub fn hash(&self) -> u64 {
        self.hasher.digest()
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.hash())
    }

    pub fn message_count(&self) -> u64 {
        self.messages
    }

    pub fn lines(&self) -> Option<&[TranscriptLine]> {
        self.lines.as_deref()
    }

    /// Adversary-visible slice, if recording was requested.
    pub fn visible(&self) -> Option<&[VisibleMessage]> {
        self.visible.as_deref()
    }

    /// Text dump: `round sender recipient tag payload-hash` per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for l in self.lines.iter().flatten() {
            let _ = writeln!(s, "{} {} {} {} {:016x}", l.round, l.sender, l.recipient, l.tag, l.payload_hash);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_hash_depends_on_kind_and_words() {
        let a = payload_hash(MsgKind::Share, &[1, 2]);
        assert_eq!(a, payload_hash(MsgKind::Share, &[1, 2]));
        assert_ne!(a, payload_hash(MsgKind::Masked, &[1, 2]));
        assert_ne!(a, payload_hash(MsgKind::Share, &[2, 1]));
    }

    #[test]
    fn dump_format() {
        let mut t = Transcript::new(true, false);
        t.record(TranscriptLine { round: 3, sender: 1, recipient: 2, tag: 9, payload_hash: 0xab });
        assert_eq!(t.dump(), "3 1 2 9 00000000000000ab\n");
        assert_eq!(t.message_count(), 1);
    }
}
