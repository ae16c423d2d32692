//! Per-player message and computation accounting.

use serde::{Deserialize, Serialize};

use super::message::{Phase, PlayerId};

const PHASES: usize = Phase::ALL.len();

/// Counters for one player (or one phase of one player).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub messages: u64,
    pub payload_words: u64,
    pub field_ops: u64,
}

impl Counters {
    fn add(&mut self, o: &Counters) {
        self.messages += o.messages;
        self.payload_words += o.payload_words;
        self.field_ops += o.field_ops;
    }
}

/// Mutable ledger owned by the network during a run.
#[derive(Debug, Clone)]
pub struct MetricsLedger {
    per_phase: Vec<[Counters; PHASES]>,
    qf_messages: Vec<u64>,
}

impl MetricsLedger {
    pub fn new(players: usize) -> Self {
        MetricsLedger {
            per_phase: vec![[Counters::default(); PHASES]; players],
            qf_messages: vec![0; players],
        }
    }

    pub fn players(&self) -> usize {
        self.per_phase.len()
    }

    pub fn record_send(&mut self, p: PlayerId, phase: Phase, words: usize) {
        let c = &mut self.per_phase[p][phase.index()];
        c.messages += 1;
        c.payload_words += words as u64;
    }

    pub fn record_ops(&mut self, p: PlayerId, phase: Phase, ops: u64) {
        self.per_phase[p][phase.index()].field_ops += ops;
    }

    /// Adds the modeled cost of quorum formation, which is not simulated.
    pub fn charge_quorum_formation(&mut self, p: PlayerId, messages: u64) {
        self.qf_messages[p] += messages;
    }

    pub fn snapshot(&self) -> RunMetrics {
        let players: Vec<PlayerMetrics> = self
            .per_phase
            .iter()
            .zip(&self.qf_messages)
            .enumerate()
            .map(|(id, (phases, &qf))| {
                let mut total = Counters::default();
                for c in phases {
                    total.add(c);
                }
                PlayerMetrics {
                    player: id,
                    total,
                    per_phase: Phase::ALL.iter().map(|ph| (*ph, phases[ph.index()])).collect(),
                    quorum_formation_charge: qf,
                }
            })
            .collect();
        let summary = Summary::from_players(&players);
        RunMetrics { players, summary }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerMetrics {
    pub player: PlayerId,
    /// Simulated traffic only.
    pub total: Counters,
    pub per_phase: Vec<(Phase, Counters)>,
    /// Synthetic message charge for quorum formation.
    pub quorum_formation_charge: u64,
}

impl PlayerMetrics {
    pub fn phase(&self, phase: Phase) -> Counters {
        self.per_phase[phase.index()].1
    }

    /// Simulated messages plus the quorum-formation charge.
    pub fn messages_with_charge(&self) -> u64 {
        self.total.messages + self.quorum_formation_charge
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub phase: Phase,
    pub max_messages: u64,
    pub median_messages: f64,
    pub max_field_ops: u64,
    pub median_field_ops: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max_messages: u64,
    pub median_messages: f64,
    pub max_messages_with_charge: u64,
    pub max_payload_words: u64,
    pub max_field_ops: u64,
    pub median_field_ops: f64,
    pub total_messages: u64,
    pub per_phase: Vec<PhaseSummary>,
}

fn median(mut v: Vec<u64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

impl Summary {
    fn from_players(players: &[PlayerMetrics]) -> Self {
        let col = |f: &dyn Fn(&PlayerMetrics) -> u64| -> Vec<u64> { players.iter().map(f).collect() };
        let max = |v: &[u64]| v.iter().copied().max().unwrap_or(0);
        let msgs = col(&|p| p.total.messages);
        let ops = col(&|p| p.total.field_ops);
        let per_phase = Phase::ALL
            .iter()
            .map(|&ph| {
                let m = col(&|p| p.phase(ph).messages);
                let o = col(&|p| p.phase(ph).field_ops);
                PhaseSummary {
                    phase: ph,
                    max_messages: max(&m),
                    median_messages: median(m),
                    max_field_ops: max(&o),
                    median_field_ops: median(o),
                }
            })
            .collect();
        Summary {
            max_messages: max(&msgs),
            median_messages: median(msgs.clone()),
            max_messages_with_charge: max(&col(&|p| p.messages_with_charge())),
            max_payload_words: max(&col(&|p| p.total.payload_words)),
            max_field_ops: max(&ops),
            median_field_ops: median(ops),
            total_messages: msgs.iter().sum(),
            per_phase,
        }
    }
}

/// Immutable metrics of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub players: Vec<PlayerMetrics>,
    pub summary: Summary,
}

impl RunMetrics {
    pub fn phase_max(&self, phase: Phase) -> u64 {
        self.summary.per_phase[phase.index()].max_messages
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breakdown_sums_to_totals() {
        let mut l = MetricsLedger::new(3);
        l.record_send(0, Phase::InputCommitment, 4);
        l.record_send(0, Phase::GateComputation, 2);
        l.record_send(1, Phase::GateComputation, 1);
        l.record_ops(2, Phase::MaskGeneration, 10);
        l.charge_quorum_formation(1, 7);
        let m = l.snapshot();
        for p in &m.players {
            let s: u64 = p.per_phase.iter().map(|(_, c)| c.messages).sum();
            assert_eq!(s, p.total.messages);
        }
        assert_eq!(m.players[0].total.messages, 2);
        assert_eq!(m.players[0].total.payload_words, 6);
        assert_eq!(m.summary.max_messages, 2);
        assert_eq!(m.summary.median_messages, 1.0);
        assert_eq!(m.summary.max_messages_with_charge, 8);
        assert_eq!(m.phase_max(Phase::GateComputation), 1);
        assert_eq!(m.summary.max_field_ops, 10);
    }

    #[test]
    fn median_even_and_empty() {
        assert_eq!(median(vec![]), 0.0);
        assert_eq!(median(vec![4, 1, 3, 2]), 2.5);
    }
}
