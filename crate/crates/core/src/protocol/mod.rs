//! The full protocol: quorum formation, input commitment, mask generation,
//! gate computation by height, output reconstruction at the root quorum and
//! propagation down the quorum tree.
//!
//! Sub-protocols that run concurrently in the schedule are simulated one
//! after another on a rewound clock, so round numbers match the lockstep
//! schedule exactly.

mod steps;

use std::collections::BTreeSet;

use thiserror::Error;

pub use steps::{
    commitment_rounds, gen_mask, input_commitment, propagate_output, propagation_rounds, reconstruct_output,
    two_thirds, Commitment, Propagation,
};

use crate::agreement::AgreementError;
use crate::circuit::{Circuit, CircuitError, GateGraph, NodeKind};
use crate::field::{Fe, Field};
use crate::hw_mpc::{gate_rounds, mpc_run, ChildInput, MpcError, MpcSession, Shared};
use crate::quorum::{
    form_quorums, formation_charge, formation_rounds, quorum_of, tree_children, QuorumError, QuorumTable,
};
use crate::rng::Streams;
use crate::sharing::vss_rounds;
use crate::simnet::{AdversaryStrategy, NetError, Network, Phase, PlayerId, RunMetrics, Transcript};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Formation(#[from] QuorumError),
    #[error(transparent)]
    Mpc(#[from] MpcError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Agreement(#[from] AgreementError),
    #[error(transparent)]
    Network(#[from] NetError),
    #[error("a good member of quorum {quorum} saw no value from two thirds of its senders")]
    NoMajority { quorum: usize },
    #[error("{got} inputs for {expected} players")]
    InputCount { expected: usize, got: usize },
    #[error("circuit constants do not fit the field")]
    ConstantOutOfField,
}

/// Knobs of a single run.
#[derive(Debug, Clone)]
pub struct ProtocolParams {
    pub field: Field,
    pub quorum_size: usize,
    pub epsilon: f64,
    pub formation_retries: usize,
    pub default_input: u64,
    /// Keep one transcript line per message.
    pub dump_transcript: bool,
    /// Keep the payloads the adversary can see.
    pub record_visible: bool,
}

impl ProtocolParams {
    pub fn new(field: Field, quorum_size: usize) -> Self {
        ProtocolParams {
            field,
            quorum_size,
            epsilon: 0.05,
            formation_retries: 1,
            default_input: 0,
            dump_transcript: false,
            record_visible: false,
        }
    }
}

/// Round counts of the schedule, computed from the sub-protocol bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub t_qf: u64,
    pub t_vss: u64,
    pub t_r: u64,
    pub t_smpc: u64,
    pub t_out: u64,
}

impl Schedule {
    pub fn new(players: usize, quorum_size: usize) -> Self {
        Schedule {
            t_qf: formation_rounds(players),
            t_vss: commitment_rounds(quorum_size),
            t_r: vss_rounds(quorum_size),
            t_smpc: gate_rounds(quorum_size),
            t_out: 1 + propagation_rounds(players),
        }
    }

    /// First round of gates at height `h >= 1`.
    pub fn gate_start(&self, h: usize) -> u64 {
        self.t_qf + self.t_vss + self.t_r + (h as u64 - 1) * self.t_smpc
    }

    pub fn total(&self, height: usize) -> u64 {
        self.gate_start(1) + height as u64 * self.t_smpc + self.t_out
    }
}

/// Per-node state after its computation: what each quorum role believes
/// the masked value is, and the roles' shares of the mask.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub node: usize,
    pub quorum: usize,
    pub masked: Vec<Option<Fe>>,
    pub mask: Shared,
}

/// Omniscient check of one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeReport {
    pub node: usize,
    pub quorum: usize,
    /// Plain value of the node under the committed inputs.
    pub value: Fe,
    /// All good roles hold the same masked value.
    pub unanimous: bool,
    /// `s - r = V` with `r` reconstructed from the good roles' shares.
    pub invariant: bool,
}

#[derive(Debug)]
pub struct RunOutcome {
    /// Output learned by each player (`None` if it learned nothing).
    pub outputs: Vec<Option<Fe>>,
    pub committed: Vec<Fe>,
    pub accepted_inputs: Vec<bool>,
    pub expected: Fe,
    pub nodes: Vec<NodeReport>,
    /// Every good role of every leaf quorum adopted the correct output.
    pub leaves_correct: bool,
    pub quorums: QuorumTable,
    pub formation_attempts: usize,
    pub schedule: Schedule,
    pub rounds: u64,
    pub bad: BTreeSet<PlayerId>,
    pub metrics: RunMetrics,
    pub transcript: Transcript,
}

impl RunOutcome {
    /// Every good player output the expected value.
    pub fn correct(&self) -> bool {
        self.outputs.iter().enumerate().all(|(p, o)| self.bad.contains(&p) || *o == Some(self.expected))
    }

    pub fn invariants_hold(&self) -> bool {
        self.nodes.iter().all(|n| n.unanimous && n.invariant)
    }

    pub fn wrong_outputs(&self) -> usize {
        self.outputs.iter().enumerate().filter(|(p, o)| !self.bad.contains(p) && **o != Some(self.expected)).count()
    }
}

/// Runs the protocol end to end with freshly sampled quorums.
pub fn run_protocol(
    params: &ProtocolParams,
    circuit: &Circuit,
    inputs: &[Fe],
    strategy: AdversaryStrategy,
    seed: u64,
) -> Result<RunOutcome, ProtocolError> {
    run_with(params, circuit, inputs, strategy, seed, None)
}

/// Like [`run_protocol`] but with a given quorum table.
pub fn run_with_quorums(
    params: &ProtocolParams,
    circuit: &Circuit,
    inputs: &[Fe],
    strategy: AdversaryStrategy,
    seed: u64,
    table: QuorumTable,
) -> Result<RunOutcome, ProtocolError> {
    run_with(params, circuit, inputs, strategy, seed, Some(table))
}

fn run_with(
    params: &ProtocolParams,
    circuit: &Circuit,
    inputs: &[Fe],
    strategy: AdversaryStrategy,
    seed: u64,
    table: Option<QuorumTable>,
) -> Result<RunOutcome, ProtocolError> {
    let n = inputs.len();
    let field = params.field;
    if circuit.inputs != n {
        return Err(ProtocolError::InputCount { expected: circuit.inputs, got: n });
    }
    if !circuit.fits(field) {
        return Err(ProtocolError::ConstantOutOfField);
    }
    let graph = GateGraph::build(circuit, n)?;
    let m = graph.gates;
    let bad = strategy.controlled.clone();
    let mut streams = Streams::new(seed, n);
    let mut net = Network::new(field, n, params.dump_transcript, params.record_visible);
    net.attach_adversary(strategy)?;

    // quorum formation, modeled
    net.set_phase(Phase::QuorumFormation);
    let (table, attempts) = match table {
        Some(t) => (t, 1),
        None => {
            let f = form_quorums(n, &bad, params.quorum_size, params.epsilon, params.formation_retries, streams.env())?;
            (f.table, f.attempts)
        }
    };
    let q = (1..=table.count()).map(|i| table.quorum(i).len()).max().unwrap_or(0);
    let schedule = Schedule::new(n, q);
    let charge = formation_charge(n);
    for p in 0..n {
        net.charge_quorum_formation(p, charge);
    }
    net.set_round(schedule.t_qf);
    let hosting = |node: usize| quorum_of(node, table.count());
    let mut states: Vec<Option<NodeState>> = vec![None; graph.len()];

    // input commitment, all players at once
    net.set_phase(Phase::InputCommitment);
    let t0 = net.round();
    let default = field.elem(params.default_input);
    let mut accepted_inputs = vec![false; n];
    for i in 1..=n {
        net.set_round(t0);
        let node = graph.input_node(i);
        let qid = hosting(node);
        let c = input_commitment(&mut net, &mut streams, i - 1, inputs[i - 1], node, qid, table.quorum(qid), default)?;
        accepted_inputs[i - 1] = c.accepted;
        states[node - 1] = Some(c.state);
    }
    net.set_round(t0 + schedule.t_vss);

    // masks for every gate node
    net.set_phase(Phase::MaskGeneration);
    let t0 = net.round();
    let mut masks: Vec<Option<Shared>> = vec![None; m];
    for g in 1..=m {
        net.set_round(t0);
        masks[g - 1] = Some(gen_mask(&mut net, &mut streams, table.quorum(hosting(g)))?);
    }
    net.set_round(t0 + schedule.t_r);

    // gates by height
    net.set_phase(Phase::GateComputation);
    let height = graph.max_height();
    for h in 1..=height {
        for g in graph.gates_at_height(h) {
            net.set_round(schedule.gate_start(h));
            let qid = hosting(g);
            let session = MpcSession::new(&net, table.quorum(qid).to_vec())?;
            let node = graph.node(g);
            let op = match &node.kind {
                NodeKind::Gate(op) => op.clone(),
                NodeKind::Input(_) => unreachable!("gate ids come first"),
            };
            let children: Vec<ChildInput> = node
                .children
                .iter()
                .map(|&c| {
                    let st = states[c - 1].as_ref().expect("children finish first");
                    ChildInput { masked: st.masked.iter().map(|v| v.unwrap_or(field.zero())).collect(), mask: &st.mask }
                })
                .collect();
            let mask = masks[g - 1].take().expect("one mask per gate");
            let out = mpc_run(&mut net, &session, &mut streams, &op, &children, &mask)?;
            states[g - 1] = Some(NodeState { node: g, quorum: qid, masked: out.masked, mask });
        }
    }
    net.set_round(schedule.gate_start(1) + height as u64 * schedule.t_smpc);

    // output at the root, then down the tree
    net.set_phase(Phase::OutputReconstruction);
    let root = states[0].as_ref().expect("root computed");
    let root_out = reconstruct_output(&mut net, root)?;
    net.set_phase(Phase::OutputPropagation);
    let prop = propagate_output(&mut net, &table, root_out)?;
    let rounds = net.round();

    // omniscient checks
    let committed: Vec<Fe> = (1..=n)
        .map(|i| {
            let st = states[graph.input_node(i) - 1].as_ref().unwrap();
            if !accepted_inputs[i - 1] {
                return default;
            }
            let good: Vec<usize> = good_roles(&net, st.mask.members());
            let s = good.first().and_then(|&k| st.masked[k]).unwrap_or(default);
            st.mask.reveal_with(&good).map_or(default, |r| s - r)
        })
        .collect();
    let values = circuit.eval_nodes(&committed);
    let expected = values[0];
    let nodes: Vec<NodeReport> = states
        .iter()
        .flatten()
        .map(|st| {
            let good = good_roles(&net, st.mask.members());
            let first = good.first().and_then(|&k| st.masked[k]);
            let unanimous = first.is_some() && good.iter().all(|&k| st.masked[k] == first);
            let invariant = match (first, st.mask.reveal_with(&good)) {
                (Some(s), Ok(r)) => s - r == values[st.node - 1],
                _ => false,
            };
            NodeReport { node: st.node, quorum: st.quorum, value: values[st.node - 1], unanimous, invariant }
        })
        .collect();
    let leaves_correct = (1..=table.count()).filter(|&i| tree_children(i, table.count()).is_empty()).all(|i| {
        table.quorum(i).iter().zip(&prop.quorums[i - 1]).all(|(&p, v)| net.is_bad(p) || *v == Some(expected))
    });

    let memberships = table.memberships();
    let mut outputs: Vec<Option<Fe>> = vec![None; n];
    for (p, out) in outputs.iter_mut().enumerate() {
        if let Some(&qid) = memberships[p].first() {
            let k = table.quorum(qid).iter().position(|&x| x == p).unwrap();
            *out = prop.quorums[qid - 1][k];
        }
    }
    for &(u, v) in &prop.uncovered {
        outputs[u] = v;
    }
    let (metrics, transcript) = net.into_parts();
    Ok(RunOutcome {
        outputs,
        committed,
        accepted_inputs,
        expected,
        nodes,
        leaves_correct,
        quorums: table,
        formation_attempts: attempts,
        schedule,
        rounds,
        bad,
        metrics,
        transcript,
    })
}

fn good_roles(net: &Network, members: &[PlayerId]) -> Vec<usize> {
    (0..members.len()).filter(|&k| !net.is_bad(members[k])).collect()
}
