use std::rc::Rc;

use serde::{Deserialize, Serialize};

pub type PlayerId = usize;

/// Protocol phase a message is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    QuorumFormation,
    InputCommitment,
    MaskGeneration,
    GateComputation,
    OutputReconstruction,
    OutputPropagation,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::QuorumFormation,
        Phase::InputCommitment,
        Phase::MaskGeneration,
        Phase::GateComputation,
        Phase::OutputReconstruction,
        Phase::OutputPropagation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::QuorumFormation => "quorum_formation",
            Phase::InputCommitment => "input_commitment",
            Phase::MaskGeneration => "mask_generation",
            Phase::GateComputation => "gate_computation",
            Phase::OutputReconstruction => "output_reconstruction",
            Phase::OutputPropagation => "output_propagation",
        }
    }
}

/// What a payload carries; adversary strategies target kinds selectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MsgKind {
    /// Input owner's masked value and mask shares.
    Commit,
    /// Secret-sharing material: rows, shares, reshared points.
    Share,
    /// Pairwise consistency values of a verifiable sharing.
    CrossCheck,
    /// Broadcast and agreement traffic.
    Agreement,
    /// Masked node values.
    Masked,
    /// The circuit output on its way down the quorum tree.
    Output,
}

impl MsgKind {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// A physical player acting in one slot (role) of a protocol instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Endpoint {
    pub player: PlayerId,
    pub slot: u32,
}

impl Endpoint {
    pub fn new(player: PlayerId, slot: usize) -> Self {
        Endpoint { player, slot: slot as u32 }
    }
}

/// One payload sent to one or more recipients in the current round.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub from: Endpoint,
    pub to: Vec<Endpoint>,
    pub tag: u64,
    pub kind: MsgKind,
    pub payload: Rc<Vec<u64>>,
}

impl Envelope {
    pub fn unicast(from: Endpoint, to: Endpoint, tag: u64, kind: MsgKind, payload: Vec<u64>) -> Self {
        Envelope { from, to: vec![to], tag, kind, payload: Rc::new(payload) }
    }

    pub fn multicast(from: Endpoint, to: Vec<Endpoint>, tag: u64, kind: MsgKind, payload: Vec<u64>) -> Self {
        Envelope { from, to, tag, kind, payload: Rc::new(payload) }
    }
}

/// A message as received: stamped with the round it was sent in.
#[derive(Debug, Clone)]
pub struct Delivery {
    pub round: u64,
    pub from: Endpoint,
    pub to: Endpoint,
    pub tag: u64,
    pub kind: MsgKind,
    pub payload: Rc<Vec<u64>>,
}

/// Received payloads indexed `[to_slot][from_slot]`.
pub struct Inbox {
    cells: Vec<Vec<Option<Rc<Vec<u64>>>>>,
}

impl Inbox {
    pub fn new(deliveries: &[Delivery], to_slots: usize, from_slots: usize) -> Self {
        let mut cells = vec![vec![None; from_slots]; to_slots];
        for d in deliveries {
            let (t, f) = (d.to.slot as usize, d.from.slot as usize);
            if t < to_slots && f < from_slots && cells[t][f].is_none() {
                cells[t][f] = Some(d.payload.clone());
            }
        }
        Inbox { cells }
    }

    pub fn get(&self, to: usize, from: usize) -> Option<&[u64]> {
        self.cells[to][from].as_deref().map(|v| v.as_slice())
    }

    pub fn row(&self, to: usize) -> &[Option<Rc<Vec<u64>>>] {
        &self.cells[to]
    }
}
