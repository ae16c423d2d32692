//! Static Byzantine adversary controllers.
//!
//! Controlled players run the honest code; the controller rewrites what they
//! send before it leaves. It never touches messages of good players.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::message::{Delivery, Endpoint, MsgKind, Phase, PlayerId};
use crate::field::Field;

/// Built-in behaviour catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behavior {
    Honest,
    Silent,
    Garbage,
    Equivocate,
    TargetedShareCorruption,
    InconsistentCommit,
}

impl Behavior {
    pub const CATALOG: [Behavior; 6] = [
        Behavior::Honest,
        Behavior::Silent,
        Behavior::Garbage,
        Behavior::Equivocate,
        Behavior::TargetedShareCorruption,
        Behavior::InconsistentCommit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Behavior::Honest => "honest",
            Behavior::Silent => "silent",
            Behavior::Garbage => "garbage",
            Behavior::Equivocate => "equivocate",
            Behavior::TargetedShareCorruption => "targeted-share-corruption",
            Behavior::InconsistentCommit => "inconsistent-commit",
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Behavior {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Behavior::CATALOG
            .iter()
            .copied()
            .find(|b| b.name() == s)
            .ok_or_else(|| format!("unknown adversary strategy `{s}`"))
    }
}

/// Which players are corrupted and how they behave, fixed before round 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryStrategy {
    pub controlled: BTreeSet<PlayerId>,
    pub behavior: Behavior,
    /// Per-phase overrides of `behavior`.
    #[serde(default)]
    pub per_phase: BTreeMap<Phase, Behavior>,
    pub seed: u64,
}

impl AdversaryStrategy {
    pub fn none() -> Self {
        AdversaryStrategy::new(BTreeSet::new(), Behavior::Honest, 0)
    }

    pub fn new(controlled: BTreeSet<PlayerId>, behavior: Behavior, seed: u64) -> Self {
        AdversaryStrategy { controlled, behavior, per_phase: BTreeMap::new(), seed }
    }

    pub fn with_phase(mut self, phase: Phase, behavior: Behavior) -> Self {
        self.per_phase.insert(phase, behavior);
        self
    }

    pub fn behavior_in(&self, phase: Phase) -> Behavior {
        self.per_phase.get(&phase).copied().unwrap_or(self.behavior)
    }
}

/// Context of a single outgoing message from a controlled player.
#[derive(Debug, Clone, Copy)]
pub struct TamperCtx {
    pub phase: Phase,
    pub kind: MsgKind,
    pub from: Endpoint,
    pub to: Endpoint,
    pub field: Field,
}

/// Running controller for one simulation.
pub struct Adversary {
    strategy: AdversaryStrategy,
    rng: ChaCha8Rng,
    observed: u64,
}

impl Adversary {
    pub fn new(strategy: AdversaryStrategy) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(strategy.seed ^ 0xad7e_55a1_0000_0000);
        Adversary { strategy, rng, observed: 0 }
    }

    pub fn strategy(&self) -> &AdversaryStrategy {
        &self.strategy
    }

    pub fn controls(&self, p: PlayerId) -> bool {
        self.strategy.controlled.contains(&p)
    }

    /// True when controlled players never deviate in this phase.
    pub fn passive_in(&self, phase: Phase) -> bool {
        self.strategy.behavior_in(phase) == Behavior::Honest
    }

    /// Rushing: sees every message addressed to a controlled player in the
    /// current round before its own players speak.
    pub fn observe(&mut self, _d: &Delivery) {
        self.observed += 1;
    }

    pub fn observed(&self) -> u64 {
        self.observed
    }

    /// Rewrites `words` in place; returns false if the message is dropped.
    pub fn tamper(&mut self, ctx: &TamperCtx, words: &mut [u64]) -> bool {
        let p = ctx.field.modulus();
        match self.strategy.behavior_in(ctx.phase) {
            Behavior::Honest => true,
            Behavior::Silent => false,
            Behavior::Garbage => {
                for w in words.iter_mut() {
                    *w = self.rng.random_range(0..p);
                }
                true
            }
            Behavior::Equivocate => {
                if ctx.to.slot % 2 == 1 {
                    for w in words.iter_mut() {
                        *w = bump(*w, p);
                    }
                }
                true
            }
            Behavior::TargetedShareCorruption => {
                if matches!(ctx.kind, MsgKind::Share | MsgKind::CrossCheck) {
                    for w in words.iter_mut() {
                        if *w < p {
                            *w = (*w + self.rng.random_range(1..p)) % p;
                        }
                    }
                }
                true
            }
            Behavior::InconsistentCommit => {
                if ctx.kind == MsgKind::Commit && ctx.to.slot % 2 == 1 {
                    for w in words.iter_mut() {
                        *w = bump(*w, p);
                    }
                }
                true
            }
        }
    }
}

fn bump(w: u64, p: u64) -> u64 {
    if w < p {
        (w + 1) % p
    } else {
        w.wrapping_add(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_roundtrip() {
        for b in Behavior::CATALOG {
            assert_eq!(b.name().parse::<Behavior>().unwrap(), b);
        }
        assert!("nope".parse::<Behavior>().is_err());
    }

    #[test]
    fn phase_overrides() {
        let s = AdversaryStrategy::new([1].into(), Behavior::Silent, 0)
            .with_phase(Phase::InputCommitment, Behavior::Honest);
        assert_eq!(s.behavior_in(Phase::InputCommitment), Behavior::Honest);
        assert_eq!(s.behavior_in(Phase::GateComputation), Behavior::Silent);
    }
}
