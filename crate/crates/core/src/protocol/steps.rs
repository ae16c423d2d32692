use super::{NodeState, ProtocolError};
use crate::agreement::{broadcast_check, check_rounds, ensure_budget, fault_bound, Checked};
use crate::field::Fe;
use crate::hw_mpc::{open_shared, Shared};
use crate::poly::Polynomial;
use crate::quorum::{tree_children, QuorumTable};
use crate::rng::Streams;
use crate::sharing::{vss_rounds, vss_share, Bivariate, VssDealing};
use crate::simnet::{Endpoint, Envelope, MsgKind, Network, OpMeter, PlayerId};

/// Rounds of [`input_commitment`] for quorums of `q`.
pub fn commitment_rounds(q: usize) -> u64 {
    vss_rounds(q) + check_rounds(q)
}

/// Result of one player's commitment.
#[derive(Debug, Clone)]
pub struct Commitment {
    pub state: NodeState,
    /// False when the player's sharing or masked value was rejected and
    /// its input replaced by the default.
    pub accepted: bool,
}

/// Player `player` commits `x` to the quorum `members`: it shares a fresh
/// mask `r` by VSS and sends `s = x + r`, whose consistency the quorum
/// checks. Either failure makes the quorum use the default input with a
/// zero mask.
pub fn input_commitment(
    net: &mut Network,
    streams: &mut Streams,
    player: PlayerId,
    x: Fe,
    node: usize,
    quorum: usize,
    members: &[PlayerId],
    default: Fe,
) -> Result<Commitment, ProtocolError> {
    let start = net.round();
    let field = net.field();
    let q = members.len();
    let t = fault_bound(q);
    let meter = OpMeter::start();
    let rng = streams.player(player);
    let r = field.sample(rng);
    let f = Polynomial::random_with_constant(r, t, rng);
    let b = Bivariate::with_sharing(&f, t, rng);
    let s = x + r;
    net.charge_ops(player, meter.stop());

    let batch = vss_share(net, members, t, MsgKind::Commit, &[VssDealing { dealer: player, sharings: vec![b] }])?;
    let checked = broadcast_check(net, members, MsgKind::Masked, &[player], &[vec![s.value()]]);
    let g = members.iter().position(|&p| !net.is_bad(p)).unwrap_or(0);
    let value_of = |c: &Checked| match c {
        Checked::Consistent(v) if v.len() == 1 => field.try_elem(v[0]),
        _ => None,
    };
    let accepted = batch.accepted(0) && value_of(&checked[g][0]).is_some();
    let state = if accepted {
        NodeState {
            node,
            quorum,
            masked: checked.iter().map(|c| value_of(&c[0])).collect(),
            mask: Shared::from_rows(members.to_vec(), (0..q).map(|i| batch.rows[i][0][0].clone()).collect()),
        }
    } else {
        NodeState { node, quorum, masked: vec![Some(default); q], mask: Shared::constant(members, field.zero()) }
    };
    let budget = commitment_rounds(q);
    ensure_budget(start, net.round(), budget)?;
    net.set_round(start + budget);
    Ok(Commitment { state, accepted })
}

/// Every member deals a fresh random value; the mask is the sum of the
/// accepted dealings (a disqualified dealer contributes 0).
pub fn gen_mask(net: &mut Network, streams: &mut Streams, members: &[PlayerId]) -> Result<Shared, ProtocolError> {
    let start = net.round();
    let field = net.field();
    let q = members.len();
    let t = fault_bound(q);
    let dealings: Vec<VssDealing> = members
        .iter()
        .map(|&p| {
            let meter = OpMeter::start();
            let rng = streams.player(p);
            let v = field.sample(rng);
            let f = Polynomial::random_with_constant(v, t, rng);
            let b = Bivariate::with_sharing(&f, t, rng);
            net.charge_ops(p, meter.stop());
            VssDealing { dealer: p, sharings: vec![b] }
        })
        .collect();
    let batch = vss_share(net, members, t, MsgKind::Share, &dealings)?;
    let rows = (0..q)
        .map(|i| {
            let mut acc = Polynomial::zero(field);
            for d in 0..q {
                acc.add_scaled(field.one(), &batch.rows[i][d][0]);
            }
            acc
        })
        .collect();
    ensure_budget(start, net.round(), vss_rounds(q))?;
    net.set_round(start + vss_rounds(q));
    Ok(Shared::from_rows(members.to_vec(), rows))
}

/// Root quorum opens its mask among itself; each role outputs `s - r`.
pub fn reconstruct_output(net: &mut Network, root: &NodeState) -> Result<Vec<Option<Fe>>, ProtocolError> {
    let members = root.mask.members().to_vec();
    let opened = open_shared(net, &[&root.mask], &members, MsgKind::Output)?;
    Ok(opened
        .iter()
        .zip(&root.masked)
        .map(|(r, s)| match (r.first(), s) {
            (Some(Ok(r)), Some(s)) => Some(*s - *r),
            _ => None,
        })
        .collect())
}

/// Value occurring in strictly more than two thirds of `received`.
pub fn two_thirds(received: &[u64]) -> Option<u64> {
    let mut tally: Vec<(u64, usize)> = Vec::new();
    for &v in received {
        match tally.iter_mut().find(|(x, _)| *x == v) {
            Some(e) => e.1 += 1,
            None => tally.push((v, 1)),
        }
    }
    tally.into_iter().find(|&(_, c)| 3 * c > 2 * received.len()).map(|(v, _)| v)
}

/// Rounds of [`propagate_output`] for `n` quorums.
pub fn propagation_rounds(n: usize) -> u64 {
    // tree levels below the root, then delivery to uncovered players
    (usize::BITS - n.leading_zeros()) as u64
}

/// Result of output propagation.
#[derive(Debug, Clone)]
pub struct Propagation {
    /// `quorums[i - 1][k]`: what role `k` of quorum `i` adopted.
    pub quorums: Vec<Vec<Option<Fe>>>,
    /// Output of players outside every quorum.
    pub uncovered: Vec<(PlayerId, Option<Fe>)>,
}

/// Quorum `i` forwards the output to quorums `2i` and `2i + 1`; a role
/// adopts the value sent by more than two thirds of what it received.
/// Players outside every quorum then hear from the quorum with their number.
pub fn propagate_output(net: &mut Network, table: &QuorumTable, root: Vec<Option<Fe>>) -> Result<Propagation, ProtocolError> {
    let start = net.round();
    let n = table.count();
    let field = net.field();
    let width = (0..n).map(|i| table.quorum(i + 1).len()).max().unwrap_or(0) as u32;
    let slot = |quorum: usize, k: usize| quorum as u32 * width + k as u32;
    let mut values: Vec<Vec<Option<Fe>>> = (1..=n).map(|i| vec![None; table.quorum(i).len()]).collect();
    values[0] = root;
    let mut level = vec![1usize];
    while !level.is_empty() {
        let next: Vec<usize> = level.iter().flat_map(|&i| tree_children(i, n)).collect();
        if next.is_empty() {
            break;
        }
        let tag = net.fresh_tag();
        let mut envs = Vec::new();
        for &c in &next {
            let parent = c / 2;
            let to: Vec<Endpoint> = table.quorum(c).iter().enumerate().map(|(j, &p)| Endpoint { player: p, slot: slot(c, j) }).collect();
            for (k, &p) in table.quorum(parent).iter().enumerate() {
                if let Some(v) = values[parent - 1][k] {
                    let from = Endpoint { player: p, slot: slot(parent, k) };
                    envs.push(Envelope::multicast(from, to.clone(), tag, MsgKind::Output, vec![v.value()]));
                }
            }
        }
        let got = net.exchange(envs);
        for &c in &next {
            let parent = c / 2;
            let pm = table.quorum(parent);
            for (j, &p) in table.quorum(c).iter().enumerate() {
                let received: Vec<u64> = got
                    .iter()
                    .filter(|m| m.to.player == p && m.to.slot == slot(c, j) && m.payload.len() == 1)
                    .filter(|m| {
                        let k = m.from.slot.wrapping_sub(slot(parent, 0)) as usize;
                        m.from.slot / width.max(1) == parent as u32 && k < pm.len() && pm[k] == m.from.player
                    })
                    .map(|m| m.payload[0])
                    .collect();
                let v = two_thirds(&received).and_then(|v| field.try_elem(v));
                if v.is_none() && !net.is_bad(p) {
                    return Err(ProtocolError::NoMajority { quorum: c });
                }
                values[c - 1][j] = v;
            }
        }
        level = next;
    }

    // players outside every quorum
    let memberships = table.memberships();
    let uncovered: Vec<PlayerId> = (0..table.players()).filter(|&p| memberships[p].is_empty()).collect();
    let tag = net.fresh_tag();
    let mut envs = Vec::new();
    for &u in &uncovered {
        let qid = u % n + 1;
        for (k, &p) in table.quorum(qid).iter().enumerate() {
            if let Some(v) = values[qid - 1][k] {
                envs.push(Envelope::unicast(Endpoint { player: p, slot: slot(qid, k) }, Endpoint::new(u, 0), tag, MsgKind::Output, vec![v.value()]));
            }
        }
    }
    let got = net.exchange(envs);
    let mut outs = Vec::with_capacity(uncovered.len());
    for &u in &uncovered {
        let qid = u % n + 1;
        let qm = table.quorum(qid);
        let received: Vec<u64> = got
            .iter()
            .filter(|m| m.to.player == u && m.payload.len() == 1)
            .filter(|m| {
                let k = m.from.slot.wrapping_sub(slot(qid, 0)) as usize;
                k < qm.len() && qm[k] == m.from.player
            })
            .map(|m| m.payload[0])
            .collect();
        let v = two_thirds(&received).and_then(|v| field.try_elem(v));
        if v.is_none() && !net.is_bad(u) {
            return Err(ProtocolError::NoMajority { quorum: qid });
        }
        outs.push((u, v));
    }
    let budget = propagation_rounds(n);
    ensure_budget(start, net.round(), budget)?;
    net.set_round(start + budget);
    Ok(Propagation { quorums: values, uncovered: outs })
}
