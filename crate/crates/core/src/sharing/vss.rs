//! Batched verifiable secret sharing over a group of roles.
//!
//! Each dealer hides its secrets in symmetric bivariate polynomials and
//! hands role `i` the row `F(x, a_i)`; its share is the row's constant term.
//! Layout:
//!
//! 1. deal rows;
//! 2. every pair of roles cross-checks `row_i(a_j) = row_j(a_i)`;
//! 3. roles broadcast complaints carrying their own value;
//! 4. while disputes remain: the dealer publicly answers each complaint with
//!    `F(a_j, a_i)` and reveals the rows of roles it says are wrong; roles
//!    that disagree with anything public declare themselves unhappy and get
//!    their rows revealed next. More than `t` revealed rows, a missing
//!    reveal, or a public inconsistency disqualifies the dealer.
//!
//! An honest dealer never reveals a good role's row, so it is never
//! disqualified. Dealers outside the group learn the agreed complaints from
//! the members by majority.

use std::collections::BTreeMap;

use super::bivariate::Bivariate;
use super::shamir::abscissas;
use crate::agreement::{broadcast, broadcast_from, broadcast_rounds, ensure_budget, fault_bound, AgreementError};
use crate::field::{Fe, Field};
use crate::poly::Polynomial;
use crate::simnet::{Endpoint, Envelope, MsgKind, Network, OpMeter, PlayerId};

/// One dealer's secrets for a batch.
#[derive(Debug, Clone)]
pub struct VssDealing {
    pub dealer: PlayerId,
    pub sharings: Vec<Bivariate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VssOutcome {
    Accepted,
    DealerDisqualified,
}

/// Public record of one dealer's verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VssTranscript {
    pub dealer: PlayerId,
    pub outcome: VssOutcome,
    pub complaints: usize,
    pub revealed: Vec<usize>,
    pub iterations: usize,
}

/// Result of a batch: `rows[role][dealer][instance]`, each of degree <= t.
/// Rows from a disqualified dealer are zero (default secret 0).
#[derive(Debug, Clone)]
pub struct VssBatch {
    pub threshold: usize,
    pub rows: Vec<Vec<Vec<Polynomial>>>,
    pub transcripts: Vec<VssTranscript>,
}

impl VssBatch {
    pub fn share(&self, role: usize, dealer: usize, instance: usize) -> Fe {
        self.rows[role][dealer][instance].coeff(0)
    }

    pub fn accepted(&self, dealer: usize) -> bool {
        self.transcripts[dealer].outcome == VssOutcome::Accepted
    }
}

/// Fixed round bound of [`vss_share`] for a group of `roles`.
pub fn vss_rounds(roles: usize) -> u64 {
    let b = broadcast_rounds(roles);
    let t = fault_bound(roles) as u64;
    2 + b + (t + 1) * (1 + 2 * b)
}

#[derive(Debug, Clone, Copy)]
struct Complaint {
    instance: usize,
    by: usize,
    about: usize,
    value: Fe,
}

#[derive(Default)]
struct DealerState {
    complaints: Vec<Complaint>,
    answers: Vec<Fe>,
    revealed: BTreeMap<usize, Vec<Polynomial>>,
    requests: Vec<usize>,
    disqualified: bool,
    iterations: usize,
}

fn parse_rows(field: Field, words: &[u64], count: usize, t: usize) -> Option<Vec<Polynomial>> {
    if words.len() != count * (t + 1) {
        return None;
    }
    words.chunks(t + 1).map(|c| Polynomial::from_words(field, c)).collect()
}

/// First role whose player is honest; the simulator evaluates public
/// (agreed) state once from its view, which every good role shares.
fn reference_role(net: &Network, members: &[PlayerId]) -> usize {
    members.iter().position(|&p| !net.is_bad(p)).unwrap_or(0)
}

/// Verifiable sharing of every dealing to `members` with threshold `t`.
/// `deal_kind` labels the row messages. Takes exactly [`vss_rounds`] rounds.
pub fn vss_share(
    net: &mut Network,
    members: &[PlayerId],
    t: usize,
    deal_kind: MsgKind,
    dealings: &[VssDealing],
) -> Result<VssBatch, AgreementError> {
    let r = members.len();
    let field = net.field();
    let start = net.round();
    let budget = vss_rounds(r);
    let tag = net.fresh_tag();
    let xs = abscissas(field, r);
    let eps: Vec<Endpoint> = members.iter().enumerate().map(|(i, &p)| Endpoint::new(p, i)).collect();
    let lens: Vec<usize> = dealings.iter().map(|d| d.sharings.len()).collect();
    let zero = Polynomial::zero(field);

    // 1. deal
    let mut envs = Vec::with_capacity(dealings.len() * r);
    for (d, dl) in dealings.iter().enumerate() {
        let meter = OpMeter::start();
        for i in 0..r {
            let mut payload = Vec::with_capacity(lens[d] * (t + 1));
            for b in &dl.sharings {
                payload.extend(b.row(xs[i]).padded_words(t + 1));
            }
            envs.push(Envelope::unicast(Endpoint::new(dl.dealer, d), eps[i], tag, deal_kind, payload));
        }
        net.charge_ops(dl.dealer, meter.stop());
    }
    let got = net.exchange(envs);
    let mut rows: Vec<Vec<Vec<Polynomial>>> =
        vec![lens.iter().map(|&l| vec![zero.clone(); l]).collect(); r];
    let mut dealt = vec![vec![false; dealings.len()]; r];
    for m in &got {
        let (i, d) = (m.to.slot as usize, m.from.slot as usize);
        if i < r && d < dealings.len() && m.from.player == dealings[d].dealer {
            if let Some(p) = parse_rows(field, &m.payload, lens[d], t) {
                rows[i][d] = p;
                dealt[i][d] = true;
            }
        }
    }

    // 2. cross-check
    let mut envs = Vec::with_capacity(r * r);
    for i in 0..r {
        let meter = OpMeter::start();
        for j in 0..r {
            if i == j {
                continue;
            }
            let payload: Vec<u64> = rows[i].iter().flatten().map(|p| p.eval(xs[j]).value()).collect();
            envs.push(Envelope::unicast(eps[i], eps[j], tag, MsgKind::CrossCheck, payload));
        }
        net.charge_ops(members[i], meter.stop());
    }
    let got = net.exchange(envs);
    let total: usize = lens.iter().sum();
    let mut received: Vec<Vec<Option<&[u64]>>> = vec![vec![None; r]; r];
    for m in &got {
        let (j, i) = (m.to.slot as usize, m.from.slot as usize);
        if j < r && i < r && m.payload.len() == total {
            received[j][i] = Some(m.payload.as_slice());
        }
    }
    let mut lists: Vec<Option<Vec<u64>>> = Vec::with_capacity(r);
    for j in 0..r {
        let meter = OpMeter::start();
        let mut list = Vec::new();
        // A missing or malformed row is a complaint about oneself.
        for d in (0..dealings.len()).filter(|&d| !dealt[j][d]) {
            list.extend([d as u64, 0, j as u64, 0]);
        }
        for i in (0..r).filter(|&i| i != j) {
            let mut k = 0;
            for (d, l) in lens.iter().enumerate() {
                for inst in 0..*l {
                    let own = rows[j][d][inst].eval(xs[i]);
                    if received[j][i].is_none_or(|w| w[k] != own.value()) {
                        list.extend([d as u64, inst as u64, i as u64, own.value()]);
                    }
                    k += 1;
                }
            }
        }
        net.charge_ops(members[j], meter.stop());
        lists.push(Some(list));
    }
    drop(received);

    // 3. complaints
    let agreed = broadcast(net, members, MsgKind::Agreement, &lists);
    let g = reference_role(net, members);
    let mut state: Vec<DealerState> = (0..dealings.len()).map(|_| DealerState::default()).collect();
    for j in 0..r {
        let words = agreed.value(g, j);
        if words.len() % 4 != 0 {
            continue;
        }
        let parsed: Option<Vec<(usize, Complaint)>> = words
            .chunks(4)
            .map(|c| {
                let (d, inst, about) = (c[0] as usize, c[1] as usize, c[2] as usize);
                let ok = d < dealings.len() && inst < lens[d] && about < r;
                let value = field.try_elem(c[3])?;
                ok.then_some((d, Complaint { instance: inst, by: j, about, value }))
            })
            .collect();
        for (d, c) in parsed.into_iter().flatten() {
            state[d].complaints.push(c);
        }
    }

    let mut active: Vec<usize> = (0..dealings.len()).filter(|&d| !state[d].complaints.is_empty()).collect();
    let mut first = true;
    while !active.is_empty() {
        // Dealers outside the group hear what was agreed from the members.
        let mut envs = Vec::new();
        for &d in &active {
            if members.contains(&dealings[d].dealer) {
                continue;
            }
            let to = Endpoint::new(dealings[d].dealer, d);
            let news = encode_news(&state[d], first);
            for i in 0..r {
                envs.push(Envelope::unicast(eps[i], to, tag, MsgKind::Agreement, news.clone()));
            }
        }
        let got = net.exchange(envs);

        let mut payloads: Vec<Option<Vec<u64>>> = vec![None; dealings.len()];
        for &d in &active {
            let dl = &dealings[d];
            let view = if members.contains(&dl.dealer) {
                Some(encode_news(&state[d], first))
            } else {
                majority(got.iter().filter(|m| m.to.slot as usize == d && m.to.player == dl.dealer).map(|m| m.payload.as_slice()), t + 1)
            };
            let meter = OpMeter::start();
            payloads[d] = Some(view.map_or_else(Vec::new, |v| dealer_answer(dl, &v, first, &xs, t)));
            net.charge_ops(dl.dealer, meter.stop());
        }
        let senders: Vec<PlayerId> = dealings.iter().map(|d| d.dealer).collect();
        let answers = broadcast_from(net, members, MsgKind::Agreement, &senders, &payloads);
        let g = reference_role(net, members);

        let mut unhappy: Vec<Option<Vec<u64>>> = vec![Some(Vec::new()); r];
        for &d in &active {
            let st = &mut state[d];
            st.iterations += 1;
            if !apply_answer(st, answers.value(g, d), first, field, &xs, t, lens[d]) {
                st.disqualified = true;
                continue;
            }
            for k in 0..r {
                if st.revealed.contains_key(&k) {
                    continue;
                }
                let meter = OpMeter::start();
                if is_unhappy(st, &rows[k][d], k, &xs) {
                    unhappy[k].as_mut().unwrap().push(d as u64);
                }
                net.charge_ops(members[k], meter.stop());
            }
        }
        let flags = broadcast(net, members, MsgKind::Agreement, &unhappy);
        let g = reference_role(net, members);
        let mut requests: Vec<Vec<usize>> = vec![Vec::new(); dealings.len()];
        for k in 0..r {
            for &w in flags.value(g, k) {
                let d = w as usize;
                if d < dealings.len() && !requests[d].contains(&k) {
                    requests[d].push(k);
                }
            }
        }
        let mut next = Vec::new();
        for &d in &active {
            let st = &mut state[d];
            if st.disqualified {
                continue;
            }
            st.requests = requests[d].iter().copied().filter(|k| !st.revealed.contains_key(k)).collect();
            if st.requests.is_empty() {
                continue;
            }
            if st.revealed.len() + st.requests.len() > t {
                st.disqualified = true;
            } else {
                next.push(d);
            }
        }
        active = next;
        first = false;
    }
    ensure_budget(start, net.round(), budget)?;
    net.set_round(start + budget);

    for (d, st) in state.iter().enumerate() {
        for (k, role_rows) in rows.iter_mut().enumerate() {
            if st.disqualified {
                role_rows[d] = vec![zero.clone(); lens[d]];
            } else if let Some(rev) = st.revealed.get(&k) {
                role_rows[d] = rev.clone();
            }
        }
    }
    let transcripts = state
        .iter()
        .zip(dealings)
        .map(|(st, dl)| VssTranscript {
            dealer: dl.dealer,
            outcome: if st.disqualified { VssOutcome::DealerDisqualified } else { VssOutcome::Accepted },
            complaints: st.complaints.len(),
            revealed: st.revealed.keys().copied().collect(),
            iterations: st.iterations,
        })
        .collect();
    Ok(VssBatch { threshold: t, rows, transcripts })
}

/// What the dealer needs to know: the complaints (first round) or the
/// roles whose rows it must reveal.
fn encode_news(st: &DealerState, first: bool) -> Vec<u64> {
    if first {
        st.complaints.iter().flat_map(|c| [c.instance as u64, c.by as u64, c.about as u64, c.value.value()]).collect()
    } else {
        st.requests.iter().map(|&k| k as u64).collect()
    }
}

fn majority<'a>(views: impl Iterator<Item = &'a [u64]>, need: usize) -> Option<Vec<u64>> {
    let mut tally: Vec<(&[u64], usize)> = Vec::new();
    for v in views {
        match tally.iter_mut().find(|(x, _)| *x == v) {
            Some(e) => e.1 += 1,
            None => tally.push((v, 1)),
        }
    }
    tally.into_iter().find(|(_, c)| *c >= need).map(|(v, _)| v.to_vec())
}

/// Honest dealer logic: `[n_answers, answers.., n_reveals, (role, rows..)..]`.
fn dealer_answer(dl: &VssDealing, news: &[u64], first: bool, xs: &[Fe], t: usize) -> Vec<u64> {
    let r = xs.len();
    let mut answers = Vec::new();
    let mut reveal: Vec<usize> = Vec::new();
    if first {
        for c in news.chunks(4) {
            if c.len() < 4 {
                break;
            }
            let (inst, by, about) = (c[0] as usize, c[1] as usize, c[2] as usize);
            if inst >= dl.sharings.len() || by >= r || about >= r {
                answers.push(0);
                continue;
            }
            if by == about {
                answers.push(0);
                if !reveal.contains(&by) {
                    reveal.push(by);
                }
                continue;
            }
            let a = dl.sharings[inst].eval(xs[by], xs[about]);
            answers.push(a.value());
            if a.value() != c[3] && !reveal.contains(&by) {
                reveal.push(by);
            }
        }
    } else {
        reveal = news.iter().map(|&k| k as usize).filter(|&k| k < r).collect();
    }
    reveal.sort_unstable();
    reveal.dedup();
    let mut out = vec![answers.len() as u64];
    out.extend(answers);
    out.push(reveal.len() as u64);
    for k in reveal {
        out.push(k as u64);
        for b in &dl.sharings {
            out.extend(b.row(xs[k]).padded_words(t + 1));
        }
    }
    out
}

/// Public checks of a dealer's answer; false means disqualification.
fn apply_answer(st: &mut DealerState, words: &[u64], first: bool, field: Field, xs: &[Fe], t: usize, count: usize) -> bool {
    let Some(&n_ans) = words.first() else { return false };
    let n_ans = n_ans as usize;
    let expected = if first { st.complaints.len() } else { 0 };
    if n_ans != expected || words.len() < 2 + n_ans {
        return false;
    }
    let Some(answers) = words[1..1 + n_ans].iter().map(|&w| field.try_elem(w)).collect::<Option<Vec<Fe>>>() else {
        return false;
    };
    let n_rev = words[1 + n_ans] as usize;
    let body = &words[2 + n_ans..];
    let stride = 1 + count * (t + 1);
    if body.len() != n_rev.saturating_mul(stride) {
        return false;
    }
    for chunk in body.chunks(stride) {
        let k = chunk[0] as usize;
        if k >= xs.len() {
            return false;
        }
        let Some(p) = parse_rows(field, &chunk[1..], count, t) else { return false };
        if let Some(prev) = st.revealed.get(&k) {
            if *prev != p {
                return false;
            }
        }
        st.revealed.insert(k, p);
    }
    if first {
        st.answers = answers;
        for (c, a) in st.complaints.iter().zip(&st.answers) {
            if (c.by == c.about || c.value != *a) && !st.revealed.contains_key(&c.by) {
                return false;
            }
        }
    } else if st.requests.iter().any(|k| !st.revealed.contains_key(k)) {
        return false;
    }
    if st.revealed.len() > t {
        return false;
    }
    // Revealed rows must agree with each other and with the answers.
    let rev: Vec<(&usize, &Vec<Polynomial>)> = st.revealed.iter().collect();
    for (a, (&ka, ra)) in rev.iter().enumerate() {
        for (&kb, rb) in &rev[a + 1..] {
            for inst in 0..count {
                if ra[inst].eval(xs[kb]) != rb[inst].eval(xs[ka]) {
                    return false;
                }
            }
        }
    }
    for (c, a) in st.complaints.iter().zip(&st.answers).filter(|(c, _)| c.by != c.about) {
        if let Some(rb) = st.revealed.get(&c.by) {
            if rb[c.instance].eval(xs[c.about]) != *a {
                return false;
            }
        }
        if let Some(ra) = st.revealed.get(&c.about) {
            if ra[c.instance].eval(xs[c.by]) != *a {
                return false;
            }
        }
    }
    true
}

fn is_unhappy(st: &DealerState, own: &[Polynomial], k: usize, xs: &[Fe]) -> bool {
    for (&j, rj) in &st.revealed {
        for (inst, p) in own.iter().enumerate() {
            if rj[inst].eval(xs[k]) != p.eval(xs[j]) {
                return true;
            }
        }
    }
    for (c, a) in st.complaints.iter().zip(&st.answers).filter(|(c, _)| c.by != c.about) {
        if c.by == k && own[c.instance].eval(xs[c.about]) != *a {
            return true;
        }
        if c.about == k && own[c.instance].eval(xs[c.by]) != *a {
            return true;
        }
    }
    false
}
