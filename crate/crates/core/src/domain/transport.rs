use std::fmt::Write;

use crate::error::{Error, Result};
use crate::pbc::Vec3;

/// Wire size of one atom record: a 64-bit index and three f64 components.
pub const RECORD_BYTES: u64 = 8 + 3 * 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageKind {
    GhostPositions,
    GhostForces,
    GatherGroup,
    ScatterForces,
}

impl MessageKind {
    pub const ALL: [MessageKind; 4] =
        [MessageKind::GhostPositions, MessageKind::GhostForces, MessageKind::GatherGroup, MessageKind::ScatterForces];

    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::GhostPositions => "ghost_positions",
            MessageKind::GhostForces => "ghost_forces",
            MessageKind::GatherGroup => "gather_group",
            MessageKind::ScatterForces => "scatter_forces",
        }
    }
}

/// Atom records (global index, vector) sent from one rank to another.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMessage {
    pub kind: MessageKind,
    pub src: usize,
    pub dst: usize,
    pub payload: Vec<(usize, Vec3)>,
}

impl RankMessage {
    pub fn bytes(&self) -> u64 {
        self.payload.len() as u64 * RECORD_BYTES
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerEntry {
    pub round: usize,
    pub kind: MessageKind,
    pub src: usize,
    pub dst: usize,
    pub bytes: u64,
}

/// In-memory message passing between simulated ranks. Delivery is barriered
/// per round: `finish_round` fails unless every sent message was received.
#[derive(Debug, Clone)]
pub struct Transport {
    round: usize,
    inbox: Vec<Vec<RankMessage>>,
    sent: u64,
    received: u64,
    pub ledger: Vec<LedgerEntry>,
}

impl Transport {
    pub fn new(n_ranks: usize) -> Self {
        Transport { round: 0, inbox: vec![Vec::new(); n_ranks], sent: 0, received: 0, ledger: Vec::new() }
    }

    pub fn n_ranks(&self) -> usize {
        self.inbox.len()
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Queue a message; empty payloads are dropped.
    pub fn send(&mut self, msg: RankMessage) -> Result<()> {
        if msg.src >= self.n_ranks() || msg.dst >= self.n_ranks() {
            return Err(Error::Routing(format!("message {} → {} outside {} ranks", msg.src, msg.dst, self.n_ranks())));
        }
        if msg.payload.is_empty() {
            return Ok(());
        }
        self.sent += msg.bytes();
        self.ledger.push(LedgerEntry { round: self.round, kind: msg.kind, src: msg.src, dst: msg.dst, bytes: msg.bytes() });
        self.inbox[msg.dst].push(msg);
        Ok(())
    }

    /// Take all messages for `dst`, ordered by source rank.
    pub fn receive(&mut self, dst: usize) -> Vec<RankMessage> {
        let mut msgs = std::mem::take(&mut self.inbox[dst]);
        msgs.sort_by_key(|m| m.src);
        self.received += msgs.iter().map(RankMessage::bytes).sum::<u64>();
        msgs
    }

    /// Close the round, checking conservation. Returns the bytes moved.
    pub fn finish_round(&mut self) -> Result<u64> {
        let pending: usize = self.inbox.iter().map(Vec::len).sum();
        if pending > 0 || self.sent != self.received {
            return Err(Error::Routing(format!(
                "round {}: {} bytes sent, {} received, {pending} messages undelivered",
                self.round, self.sent, self.received
            )));
        }
        let moved = self.sent;
        self.sent = 0;
        self.received = 0;
        self.round += 1;
        Ok(moved)
    }

    pub fn total_bytes(&self) -> u64 {
        self.ledger.iter().map(|e| e.bytes).sum()
    }

    pub fn bytes_of(&self, kind: MessageKind) -> u64 {
        self.ledger.iter().filter(|e| e.kind == kind).map(|e| e.bytes).sum()
    }

    /// `round,kind,src,dst,bytes` rows.
    pub fn ledger_csv(&self) -> String {
        let mut out = String::from("round,kind,src,dst,bytes\n");
        for e in &self.ledger {
            let _ = writeln!(out, "{},{},{},{},{}", e.round, e.kind.as_str(), e.src, e.dst, e.bytes);
        }
        out
    }
}
