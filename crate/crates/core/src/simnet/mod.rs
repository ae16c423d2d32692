//! Synchronous lockstep network simulator.
//!
//! Players hand their outgoing [`Envelope`]s for the current round to
//! [`Network::exchange`], which applies the adversary to controlled senders,
//! accounts for traffic, extends the transcript and returns the deliveries
//! that the recipients read at the start of the next round.

pub mod adversary;
pub mod message;
pub mod metrics;
pub mod transcript;

use std::collections::BTreeSet;
use std::rc::Rc;

use thiserror::Error;

pub use adversary::{Adversary, AdversaryStrategy, Behavior, TamperCtx};
pub use message::{Delivery, Endpoint, Envelope, Inbox, MsgKind, Phase, PlayerId};
pub use metrics::{Counters, MetricsLedger, PlayerMetrics, RunMetrics, Summary};
pub use transcript::{payload_hash, Transcript, TranscriptLine, VisibleMessage};

use crate::field::{op_count, Field};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("adversary strategy attached after the first round")]
    StrategyAfterStart,
    #[error("player {actor} tried to send as player {claimed}")]
    SpoofedSender { actor: PlayerId, claimed: PlayerId },
    #[error("player {0} is not controlled by the adversary")]
    NotControlled(PlayerId),
    #[error("player {0} does not exist")]
    UnknownPlayer(PlayerId),
}

/// Measures field operations done by one player between `start` and `stop`.
pub struct OpMeter(u64);

impl OpMeter {
    pub fn start() -> Self {
        OpMeter(op_count())
    }

    pub fn stop(self) -> u64 {
        op_count() - self.0
    }
}

pub struct Network {
    field: Field,
    players: usize,
    round: u64,
    started: bool,
    phase: Phase,
    next_tag: u64,
    adversary: Option<Adversary>,
    bad: BTreeSet<PlayerId>,
    injected: Vec<Envelope>,
    metrics: MetricsLedger,
    transcript: Transcript,
}

impl Network {
    /// `dump` keeps one transcript line per message; `record_visible` keeps
    /// the payloads the adversary observes.
    pub fn new(field: Field, players: usize, dump: bool, record_visible: bool) -> Self {
        Network {
            field,
            players,
            round: 0,
            started: false,
            phase: Phase::QuorumFormation,
            next_tag: 1,
            adversary: None,
            bad: BTreeSet::new(),
            injected: Vec::new(),
            metrics: MetricsLedger::new(players),
            transcript: Transcript::new(dump, record_visible),
        }
    }

    pub fn attach_adversary(&mut self, strategy: AdversaryStrategy) -> Result<(), NetError> {
        if self.started {
            return Err(NetError::StrategyAfterStart);
        }
        if let Some(&p) = strategy.controlled.iter().find(|&&p| p >= self.players) {
            return Err(NetError::UnknownPlayer(p));
        }
        self.bad = strategy.controlled.clone();
        self.adversary = Some(Adversary::new(strategy));
        Ok(())
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn is_bad(&self, p: PlayerId) -> bool {
        self.bad.contains(&p)
    }

    pub fn bad_set(&self) -> &BTreeSet<PlayerId> {
        &self.bad
    }

    pub fn adversary(&self) -> Option<&Adversary> {
        self.adversary.as_ref()
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Moves the clock; used to run concurrent instances one after another
    /// from a shared start round.
    pub fn set_round(&mut self, r: u64) {
        self.round = r;
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    /// A protocol tag not used before in this run.
    pub fn fresh_tag(&mut self) -> u64 {
        let t = self.next_tag;
        self.next_tag += 1;
        t
    }

    pub fn charge_ops(&mut self, p: PlayerId, ops: u64) {
        self.metrics.record_ops(p, self.phase, ops);
    }

    pub fn charge_quorum_formation(&mut self, p: PlayerId, messages: u64) {
        self.metrics.charge_quorum_formation(p, messages);
    }

    /// Queues an arbitrary message from a controlled player for the next
    /// exchange. The sender field must be the acting player itself.
    pub fn inject(&mut self, actor: PlayerId, env: Envelope) -> Result<(), NetError> {
        if !self.is_bad(actor) {
            return Err(NetError::NotControlled(actor));
        }
        if env.from.player != actor {
            return Err(NetError::SpoofedSender { actor, claimed: env.from.player });
        }
        if let Some(to) = env.to.iter().find(|e| e.player >= self.players) {
            return Err(NetError::UnknownPlayer(to.player));
        }
        self.injected.push(env);
        Ok(())
    }

    /// Sends everything for the current round and advances the clock.
    /// Deliveries are sorted by (recipient, sender, tag).
    pub fn exchange(&mut self, envelopes: Vec<Envelope>) -> Vec<Delivery> {
        self.started = true;
        let round = self.round;
        let mut out = Vec::new();
        let (good, mut bad): (Vec<Envelope>, Vec<Envelope>) =
            envelopes.into_iter().partition(|e| !self.is_bad(e.from.player));
        bad.append(&mut self.injected);

        // Good players speak first; a rushing adversary sees their messages
        // to controlled players before choosing its own.
        for env in &good {
            let h = payload_hash(env.kind, &env.payload);
            for &to in &env.to {
                self.deliver(round, env, to, env.payload.clone(), h, &mut out);
            }
        }
        if let Some(adv) = &mut self.adversary {
            for (d, _) in out.iter().filter(|(d, _)| self.bad.contains(&d.to.player)) {
                adv.observe(d);
            }
        }
        let passive = self.adversary.as_ref().is_none_or(|a| a.passive_in(self.phase));
        for env in &bad {
            let shared_hash = payload_hash(env.kind, &env.payload);
            for &to in &env.to {
                if passive || to.player == env.from.player {
                    self.deliver(round, env, to, env.payload.clone(), shared_hash, &mut out);
                    continue;
                }
                let mut words = (*env.payload).clone();
                let ctx = TamperCtx { phase: self.phase, kind: env.kind, from: env.from, to, field: self.field };
                let adv = self.adversary.as_mut().expect("bad sender without adversary");
                if !adv.tamper(&ctx, &mut words) {
                    continue;
                }
                let h = payload_hash(env.kind, &words);
                self.deliver(round, env, to, Rc::new(words), h, &mut out);
            }
        }
        out.sort_by_key(|(d, _)| (d.to, d.from, d.tag));
        self.record(&out);
        self.round += 1;
        out.into_iter().map(|(d, _)| d).collect()
    }

    fn deliver(&mut self, round: u64, env: &Envelope, to: Endpoint, payload: Rc<Vec<u64>>, h: u64, out: &mut Vec<(Delivery, u64)>) {
        if env.from.player != to.player {
            self.metrics.record_send(env.from.player, self.phase, payload.len());
        }
        out.push((Delivery { round, from: env.from, to, tag: env.tag, kind: env.kind, payload }, h));
    }

    // Recorded in delivery order so the transcript does not depend on which
    // senders happen to be controlled.
    fn record(&mut self, out: &[(Delivery, u64)]) {
        for (d, h) in out {
            let (s, r) = (d.from.player, d.to.player);
            if s != r && self.transcript.wants_visible() && (self.bad.contains(&s) || self.bad.contains(&r)) {
                self.transcript.record_visible(VisibleMessage {
                    round: d.round,
                    sender: s,
                    recipient: r,
                    kind: d.kind,
                    words: d.payload.to_vec(),
                });
            }
            self.transcript.record(TranscriptLine { round: d.round, sender: s, recipient: r, tag: d.tag, payload_hash: *h });
        }
    }

    pub fn metrics_snapshot(&self) -> RunMetrics {
        self.metrics.snapshot()
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_parts(self) -> (RunMetrics, Transcript) {
        (self.metrics.snapshot(), self.transcript)
    }
}
