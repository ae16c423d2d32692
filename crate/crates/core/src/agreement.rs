//! Byzantine agreement and simulated broadcast inside a group of roles.
//!
//! Agreement is the deterministic phase-king protocol for `n > 3t`: `t + 1`
//! phases of three rounds, so its round count is fixed in advance. Many
//! values ("slots") are agreed on in parallel within the same rounds.
//!
//! Group members are given as a list of physical players; position `i` in
//! the list is role `i`, and one player may hold several roles.

use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;
use xxhash_rust::xxh3::xxh3_64;

use crate::simnet::{Delivery, Endpoint, Envelope, MsgKind, Network, PlayerId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error("sub-protocol used {used} rounds, budget was {budget}")]
    RoundBudgetExceeded { used: u64, budget: u64 },
}

/// Largest number of faulty roles a group of `size` roles tolerates.
pub fn fault_bound(size: usize) -> usize {
    size.saturating_sub(1) / 3
}

pub fn agree_rounds(size: usize) -> u64 {
    3 * (fault_bound(size) as u64 + 1)
}

pub fn broadcast_rounds(size: usize) -> u64 {
    1 + agree_rounds(size)
}

pub fn check_rounds(size: usize) -> u64 {
    1 + broadcast_rounds(size)
}

/// Fails if a sub-protocol took more rounds than its fixed bound.
pub fn ensure_budget(start: u64, end: u64, budget: u64) -> Result<(), AgreementError> {
    let used = end - start;
    if used > budget {
        return Err(AgreementError::RoundBudgetExceeded { used, budget });
    }
    Ok(())
}

fn digest(words: &[u64]) -> u64 {
    let mut buf = Vec::with_capacity(8 * words.len());
    for w in words {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    xxh3_64(&buf)
}

/// Length-prefixed concatenation of values.
pub fn encode_values<'a, I: IntoIterator<Item = &'a [u64]>>(values: I) -> Vec<u64> {
    let mut out = Vec::new();
    for v in values {
        out.push(v.len() as u64);
        out.extend_from_slice(v);
    }
    out
}

/// Inverse of [`encode_values`]; `None` if the framing is broken.
pub fn decode_values(words: &[u64], count: usize) -> Option<Vec<&[u64]>> {
    let mut out = Vec::with_capacity(count);
    let mut i = 0;
    for _ in 0..count {
        let len = *words.get(i)? as usize;
        i += 1;
        if len > words.len() - i {
            return None;
        }
        out.push(&words[i..i + len]);
        i += len;
    }
    (i == words.len()).then_some(out)
}

/// Interned values seen during one agreement instance.
#[derive(Default)]
struct Arena {
    values: Vec<Vec<u64>>,
    digests: Vec<u64>,
    by_digest: HashMap<u64, u32>,
}

impl Arena {
    fn intern(&mut self, v: &[u64]) -> u32 {
        let d = digest(v);
        if let Some(&id) = self.by_digest.get(&d) {
            return id;
        }
        let id = self.values.len() as u32;
        self.values.push(v.to_vec());
        self.digests.push(d);
        self.by_digest.insert(d, id);
        id
    }
}

/// Decisions of every role, `decided[role][slot]`.
pub struct Agreed {
    values: Vec<Vec<u64>>,
    decided: Vec<Vec<u32>>,
}

impl Agreed {
    pub fn value(&self, role: usize, slot: usize) -> &[u64] {
        &self.values[self.decided[role][slot] as usize]
    }

    pub fn slots(&self) -> usize {
        self.decided.first().map_or(0, |d| d.len())
    }

    /// All slot values as decided by `role`.
    pub fn row(&self, role: usize) -> Vec<&[u64]> {
        (0..self.slots()).map(|s| self.value(role, s)).collect()
    }

    /// True if the given roles decided identically on every slot.
    pub fn unanimous(&self, roles: impl IntoIterator<Item = usize>) -> bool {
        let mut it = roles.into_iter();
        let Some(first) = it.next() else { return true };
        it.all(|r| self.decided[r] == self.decided[first])
    }
}

type Tally = Vec<(u32, u32)>;

fn bump(tally: &mut Tally, id: u32) {
    match tally.iter_mut().find(|(v, _)| *v == id) {
        Some(e) => e.1 += 1,
        None => tally.push((id, 1)),
    }
}

/// Splits deliveries into those whose payload reached every role (shared
/// multicasts) and per-recipient leftovers, to avoid recounting shared ones.
fn partition(deliveries: &[Delivery], roles: usize) -> (Vec<&Delivery>, Vec<Vec<&Delivery>>) {
    let mut seen: HashMap<*const Vec<u64>, usize> = HashMap::new();
    for d in deliveries {
        *seen.entry(Rc::as_ptr(&d.payload)).or_default() += 1;
    }
    let mut common = Vec::new();
    let mut common_seen: HashMap<*const Vec<u64>, ()> = HashMap::new();
    let mut own = vec![Vec::new(); roles];
    for d in deliveries {
        let ptr = Rc::as_ptr(&d.payload);
        if seen[&ptr] == roles {
            if common_seen.insert(ptr, ()).is_none() {
                common.push(d);
            }
        } else if (d.to.slot as usize) < roles {
            own[d.to.slot as usize].push(d);
        }
    }
    (common, own)
}

/// Per-recipient tallies per slot of a round of full-value messages.
fn tally_values(
    deliveries: &[Delivery],
    roles: usize,
    slots: usize,
    arena: &mut Arena,
    from_filter: Option<usize>,
) -> Vec<Vec<Tally>> {
    let (common, own) = partition(deliveries, roles);
    let mut parse = |d: &Delivery| -> Option<Vec<u32>> {
        if from_filter.is_some_and(|k| d.from.slot as usize != k) {
            return None;
        }
        decode_values(&d.payload, slots).map(|vs| vs.into_iter().map(|v| arena.intern(v)).collect())
    };
    let mut base: Vec<Tally> = vec![Vec::new(); slots];
    for d in &common {
        if let Some(ids) = parse(d) {
            for (s, id) in ids.into_iter().enumerate() {
                bump(&mut base[s], id);
            }
        }
    }
    own.iter()
        .map(|ds| {
            let mut t = base.clone();
            for d in ds {
                if let Some(ids) = parse(d) {
                    for (s, id) in ids.into_iter().enumerate() {
                        bump(&mut t[s], id);
                    }
                }
            }
            t
        })
        .collect()
}

/// Runs phase-king agreement; `inputs[role][slot]` is each role's initial
/// value. Takes exactly [`agree_rounds`] rounds.
pub fn agree(net: &mut Network, members: &[PlayerId], inputs: &[Vec<Vec<u64>>]) -> Agreed {
    let n = members.len();
    let t = fault_bound(n);
    let slots = inputs.first().map_or(0, |v| v.len());
    let tag = net.fresh_tag();
    let mut arena = Arena::default();
    let mut v: Vec<Vec<u32>> =
        inputs.iter().map(|row| row.iter().map(|x| arena.intern(x)).collect()).collect();
    let all: Vec<Endpoint> = members.iter().enumerate().map(|(i, &p)| Endpoint::new(p, i)).collect();

    for king in 0..=t {
        // Round 1: everyone sends its current values.
        let envs = (0..n)
            .map(|r| {
                let payload = encode_values(v[r].iter().map(|&id| arena.values[id as usize].as_slice()));
                Envelope::multicast(all[r], all.clone(), tag, MsgKind::Agreement, payload)
            })
            .collect();
        let got = net.exchange(envs);
        let tallies = tally_values(&got, n, slots, &mut arena, None);
        let proposals: Vec<Vec<Option<u32>>> = tallies
            .iter()
            .map(|per_slot| {
                per_slot
                    .iter()
                    .map(|t| t.iter().find(|(_, c)| *c as usize >= n - fault_bound(n)).map(|(id, _)| *id))
                    .collect()
            })
            .collect();

        // Round 2: proposals, sent as digests of values already seen.
        let envs = (0..n)
            .map(|r| {
                let mut payload = Vec::with_capacity(2 * slots);
                for p in &proposals[r] {
                    match p {
                        Some(id) => payload.extend([1, arena.digests[*id as usize]]),
                        None => payload.extend([0, 0]),
                    }
                }
                Envelope::multicast(all[r], all.clone(), tag, MsgKind::Agreement, payload)
            })
            .collect();
        let got = net.exchange(envs);
        let (common, own) = partition(&got, n);
        let read = |d: &Delivery, s: usize| -> Option<u64> {
            let w = d.payload.get(2 * s..2 * s + 2)?;
            (d.payload.len() == 2 * slots && w[0] == 1).then_some(w[1])
        };
        let mut support = vec![vec![0u32; slots]; n];
        for s in 0..slots {
            let mut base: Vec<(u64, u32)> = Vec::new();
            for d in &common {
                if let Some(h) = read(d, s) {
                    match base.iter_mut().find(|(x, _)| *x == h) {
                        Some(e) => e.1 += 1,
                        None => base.push((h, 1)),
                    }
                }
            }
            for r in 0..n {
                let mut tl = base.clone();
                for d in &own[r] {
                    if let Some(h) = read(d, s) {
                        match tl.iter_mut().find(|(x, _)| *x == h) {
                            Some(e) => e.1 += 1,
                            None => tl.push((h, 1)),
                        }
                    }
                }
                let best = tl.iter().max_by_key(|(h, c)| (*c, std::cmp::Reverse(*h))).copied();
                if let Some((h, c)) = best {
                    if c as usize > t {
                        if let Some(&id) = arena.by_digest.get(&h) {
                            v[r][s] = id;
                            support[r][s] = c;
                        }
                    }
                }
            }
        }

        // Round 3: the king's values settle anyone not already sure.
        let payload = encode_values(v[king].iter().map(|&id| arena.values[id as usize].as_slice()));
        let got = net.exchange(vec![Envelope::multicast(all[king], all.clone(), tag, MsgKind::Agreement, payload)]);
        let tallies = tally_values(&got, n, slots, &mut arena, Some(king));
        for r in 0..n {
            for s in 0..slots {
                if (support[r][s] as usize) < n - t {
                    if let Some(&(id, _)) = tallies[r][s].first() {
                        v[r][s] = id;
                    }
                }
            }
        }
    }
    Agreed { values: arena.values, decided: v }
}

/// Every role `i` with `values[i] = Some(x)` broadcasts `x`; slot `i` of the
/// result is what role `i` broadcast (empty if it sent nothing usable).
pub fn broadcast(net: &mut Network, members: &[PlayerId], kind: MsgKind, values: &[Option<Vec<u64>>]) -> Agreed {
    broadcast_from(net, members, kind, members, values)
}

/// Like [`broadcast`], but sender `c` is `senders[c]`, who need not be a
/// member. Slot `c` of the result belongs to sender `c`.
pub fn broadcast_from(
    net: &mut Network,
    members: &[PlayerId],
    kind: MsgKind,
    senders: &[PlayerId],
    values: &[Option<Vec<u64>>],
) -> Agreed {
    let n = members.len();
    let tag = net.fresh_tag();
    let all: Vec<Endpoint> = members.iter().enumerate().map(|(i, &p)| Endpoint::new(p, i)).collect();
    let envs = values
        .iter()
        .enumerate()
        .filter_map(|(c, v)| {
            v.as_ref().map(|v| Envelope::multicast(Endpoint::new(senders[c], c), all.clone(), tag, kind, v.clone()))
        })
        .collect();
    let got = net.exchange(envs);
    let mut inputs = vec![vec![Vec::new(); senders.len()]; n];
    for d in &got {
        let (to, c) = (d.to.slot as usize, d.from.slot as usize);
        if to < n && c < senders.len() && d.from.player == senders[c] {
            inputs[to][c] = d.payload.to_vec();
        }
    }
    agree(net, members, &inputs)
}

/// Outcome of a [`broadcast_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Checked {
    Consistent(Vec<u64>),
    InconsistentSender,
}

/// Each `senders[c]` sends `values[c]` to every member; members then agree
/// on whether everyone got the same value. Returns `outcome[role][c]`.
///
/// A value is accepted when at least `n - t` members report it, which an
/// honest sender always achieves and which pins down a unique value.
pub fn broadcast_check(
    net: &mut Network,
    members: &[PlayerId],
    kind: MsgKind,
    senders: &[PlayerId],
    values: &[Vec<u64>],
) -> Vec<Vec<Checked>> {
    let n = members.len();
    let t = fault_bound(n);
    let checks = senders.len();
    let tag = net.fresh_tag();
    let all: Vec<Endpoint> = members.iter().enumerate().map(|(i, &p)| Endpoint::new(p, i)).collect();
    let envs = senders
        .iter()
        .zip(values)
        .enumerate()
        .map(|(c, (&s, v))| Envelope::multicast(Endpoint::new(s, c), all.clone(), tag, kind, v.clone()))
        .collect();
    let got = net.exchange(envs);
    let mut received: Vec<Vec<Option<Vec<u64>>>> = vec![vec![None; checks]; n];
    for d in &got {
        let (to, c) = (d.to.slot as usize, d.from.slot as usize);
        if to < n && c < checks && d.from.player == senders[c] {
            received[to][c] = Some(d.payload.to_vec());
        }
    }
    // Report: per check a presence flag and the value.
    let reports: Vec<Option<Vec<u64>>> = received
        .iter()
        .map(|row| {
            let mut out = Vec::new();
            for v in row {
                match v {
                    Some(v) => {
                        out.push(1);
                        out.push(v.len() as u64);
                        out.extend_from_slice(v);
                    }
                    None => out.extend([0, 0]),
                }
            }
            Some(out)
        })
        .collect();
    let agreed = broadcast(net, members, MsgKind::Agreement, &reports);
    (0..n)
        .map(|r| {
            let parsed: Vec<Option<Vec<Option<&[u64]>>>> =
                (0..n).map(|j| parse_report(agreed.value(r, j), checks)).collect();
            (0..checks)
                .map(|c| {
                    let mut tally: Vec<(&[u64], usize)> = Vec::new();
                    for rep in parsed.iter().flatten() {
                        if let Some(v) = rep[c] {
                            match tally.iter_mut().find(|(x, _)| *x == v) {
                                Some(e) => e.1 += 1,
                                None => tally.push((v, 1)),
                            }
                        }
                    }
                    match tally.into_iter().find(|(_, k)| *k >= n - t) {
                        Some((v, _)) => Checked::Consistent(v.to_vec()),
                        None => Checked::InconsistentSender,
                    }
                })
                .collect()
        })
        .collect()
}

fn parse_report(words: &[u64], checks: usize) -> Option<Vec<Option<&[u64]>>> {
    let mut out = Vec::with_capacity(checks);
    let mut i = 0;
    for _ in 0..checks {
        let flag = *words.get(i)?;
        let len = *words.get(i + 1)? as usize;
        i += 2;
        if len > words.len() - i {
            return None;
        }
        out.push((flag == 1).then(|| &words[i..i + len]));
        i += len;
    }
    (i == words.len()).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::simnet::{AdversaryStrategy, Behavior};

    fn net(players: usize, bad: &[usize], b: Behavior, seed: u64) -> Network {
        let mut net = Network::new(Field::new(101).unwrap(), players, false, false);
        net.attach_adversary(AdversaryStrategy::new(bad.iter().copied().collect(), b, seed)).unwrap();
        net
    }

    #[test]
    fn framing_roundtrip() {
        let a: &[u64] = &[1, 2];
        let b: &[u64] = &[];
        let w = encode_values([a, b]);
        assert_eq!(decode_values(&w, 2).unwrap(), vec![a, b]);
        assert!(decode_values(&w, 3).is_none());
        assert!(decode_values(&[5, 1], 1).is_none());
    }

    #[test]
    fn all_good_start_with_42() {
        let mut net = net(4, &[], Behavior::Honest, 0);
        let members = [0, 1, 2, 3];
        let inputs = vec![vec![vec![42]]; 4];
        let start = net.round();
        let a = agree(&mut net, &members, &inputs);
        assert_eq!(net.round() - start, agree_rounds(4));
        for r in 0..4 {
            assert_eq!(a.value(r, 0), &[42]);
        }
    }

    #[test]
    fn silent_bad_players_do_not_block() {
        let members: Vec<_> = (0..7).collect();
        let mut net = net(7, &[2, 5], Behavior::Silent, 0);
        let inputs: Vec<_> = (0..7).map(|r| vec![vec![(r % 2) as u64]]).collect();
        let a = agree(&mut net, &members, &inputs);
        assert!(a.unanimous([0, 1, 3, 4, 6]));
    }

    #[test]
    fn round_budget_check() {
        assert!(ensure_budget(3, 10, 7).is_ok());
        assert_eq!(ensure_budget(3, 11, 7), Err(AgreementError::RoundBudgetExceeded { used: 8, budget: 7 }));
    }

    #[test]
    fn broadcast_check_honest_sender() {
        let members = [0, 1, 2, 3];
        let mut net = net(5, &[], Behavior::Honest, 0);
        let out = broadcast_check(&mut net, &members, MsgKind::Commit, &[4], &[vec![9]]);
        assert!(out.iter().all(|o| o[0] == Checked::Consistent(vec![9])));
    }
}
