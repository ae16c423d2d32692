use std::collections::BTreeSet;

use rand::Rng;

use super::{MpcError, MpcSession, Shared};
use crate::agreement::{broadcast, broadcast_rounds, ensure_budget};
use crate::decode::{berlekamp_welch, parity_check, syndrome_decode};
use crate::field::Fe;
use crate::poly::{lagrange_coefficients, Polynomial};
use crate::rng::Streams;
use crate::sharing::{open_to, vss_rounds, vss_share, Bivariate, VssDealing};
use crate::simnet::{Endpoint, Envelope, MsgKind, Network, OpMeter};

/// Fixed round count of [`multiply`] in a session of `roles`.
pub fn multiply_rounds(roles: usize) -> u64 {
    vss_rounds(roles) + 3 + broadcast_rounds(roles)
}

/// Splits `h = fa * fb` (degree `2t`) as `C + sum_l x^l D_l` with `C` and
/// every `D_l` of degree `t` and `C(0) = h(0)`. The `D_l` are random apart
/// from their top coefficients, so any `t` evaluations of them are uniform.
pub(crate) fn product_split<R: Rng + ?Sized>(fa: &Polynomial, fb: &Polynomial, t: usize, rng: &mut R) -> (Polynomial, Vec<Polynomial>) {
    let field = fa.field();
    let h = fa.mul(fb);
    let mut d: Vec<Vec<Fe>> = (0..t).map(|_| (0..=t).map(|_| field.sample(rng)).collect()).collect();
    for s in (t + 1..=2 * t).rev() {
        let l = s - t;
        let higher = (l + 1..=t).fold(field.zero(), |acc, m| acc + d[m - 1][s - m]);
        d[l - 1][t] = h.coeff(s) - higher;
    }
    let c: Vec<Fe> = (0..=t)
        .map(|s| (1..=s.min(t)).fold(h.coeff(s), |acc, l| acc - d[l - 1][s - l]))
        .collect();
    (Polynomial::new(field, c), d.into_iter().map(|c| Polynomial::new(field, c)).collect())
}

/// Does role `x` see a product dealing consistent with its factor shares?
fn product_holds(x: Fe, a: Fe, b: Fe, c: Fe, ds: &[Fe]) -> bool {
    let mut rhs = a * b;
    let mut pw = x;
    for d in ds {
        rhs -= pw * *d;
        pw *= x;
    }
    rhs == c
}

/// Shares of `a * b` for every pair, at degree `t`.
///
/// Role `k` reshares its factor shares `a_k`, `b_k` and deals `c_k = a_k b_k`
/// together with masking polynomials `D_l` that let every role check its
/// point of the product locally. Reshared factors are corrected through
/// their syndrome; a role that sees an inconsistent product complains, the
/// complainer's points are revealed (known to the adversary whichever side
/// lied), and a convicted dealer's factors are opened so its product
/// becomes public. The result interpolates the `c_k` at 0.
pub fn multiply(
    net: &mut Network,
    session: &MpcSession,
    streams: &mut Streams,
    pairs: &[(&Shared, &Shared)],
) -> Result<Vec<Shared>, MpcError> {
    if pairs.iter().any(|(a, b)| a.members() != session.members() || b.members() != session.members()) {
        return Err(MpcError::MismatchedRoleSets);
    }
    let t = session.threshold();
    let mut dealings = Vec::with_capacity(session.roles());
    for (k, &p) in session.members().iter().enumerate() {
        let meter = OpMeter::start();
        let rng = streams.player(p);
        let mut sharings = Vec::with_capacity(pairs.len() * (t + 3));
        for (a, b) in pairs {
            let fa = Polynomial::random_with_constant(a.share(k), t, rng);
            let fb = Polynomial::random_with_constant(b.share(k), t, rng);
            let (c, ds) = product_split(&fa, &fb, t, rng);
            for f in [&fa, &fb, &c].into_iter().chain(&ds) {
                sharings.push(Bivariate::with_sharing(f, t, rng));
            }
        }
        net.charge_ops(p, meter.stop());
        dealings.push(VssDealing { dealer: p, sharings });
    }
    multiply_dealt(net, session, pairs.len(), &dealings)
}

/// Verification and recombination for given product dealings (role `k`
/// deals `[A', B', C, D_1..D_t]` per pair).
pub(crate) fn multiply_dealt(
    net: &mut Network,
    session: &MpcSession,
    pairs: usize,
    dealings: &[VssDealing],
) -> Result<Vec<Shared>, MpcError> {
    let start = net.round();
    let r = session.roles();
    let t = session.threshold();
    let field = session.field();
    let xs = session.abscissas().to_vec();
    let members = session.members().to_vec();
    let budget = multiply_rounds(r);
    let stride = t + 3;
    let (ia, ib, ic, id) = (0, 1, 2, 3);

    let batch = vss_share(net, &members, t, MsgKind::Share, dealings)?;
    let accepted: Vec<bool> = (0..r).map(|k| batch.accepted(k)).collect();
    let inst = |p: usize, which: usize| p * stride + which;

    // 2. syndromes of the reshared factors
    let h = parity_check(&xs, t);
    let mut shares = vec![Vec::new(); r];
    for (i, out) in shares.iter_mut().enumerate() {
        let meter = OpMeter::start();
        for p in 0..pairs {
            for which in [ia, ib] {
                for hrow in &h {
                    out.push((0..r).fold(field.zero(), |acc, k| acc + hrow[k] * batch.share(i, k, inst(p, which))));
                }
            }
        }
        net.charge_ops(members[i], meter.stop());
    }
    let opened = open_to(net, &members, &members, MsgKind::Share, &shares, t);
    let g = session.reference_role(net);
    let syn = opened[g].iter().cloned().collect::<Result<Vec<_>, _>>()?;
    let mut errs = Vec::with_capacity(pairs);
    for p in 0..pairs {
        let base = 2 * p * h.len();
        let ea = syndrome_decode(&xs, t, &syn[base..base + h.len()])?;
        let eb = syndrome_decode(&xs, t, &syn[base + h.len()..base + 2 * h.len()])?;
        errs.push((ea, eb));
    }

    // 3. local product checks and complaints
    let mut lists: Vec<Option<Vec<u64>>> = Vec::with_capacity(r);
    for j in 0..r {
        let meter = OpMeter::start();
        let mut list = Vec::new();
        for (p, (ea, eb)) in errs.iter().enumerate() {
            for k in (0..r).filter(|&k| accepted[k]) {
                let a = batch.share(j, k, inst(p, ia)) - ea[k];
                let b = batch.share(j, k, inst(p, ib)) - eb[k];
                let c = batch.share(j, k, inst(p, ic));
                let ds: Vec<Fe> = (0..t).map(|l| batch.share(j, k, inst(p, id + l))).collect();
                if !product_holds(xs[j], a, b, c, &ds) {
                    list.extend([p as u64, k as u64]);
                }
            }
        }
        net.charge_ops(members[j], meter.stop());
        lists.push(Some(list));
    }
    let agreed = broadcast(net, &members, MsgKind::Agreement, &lists);
    let g = session.reference_role(net);
    let mut disputes: Vec<(usize, usize, usize)> = Vec::new();
    for j in 0..r {
        let words = agreed.value(g, j);
        for c in words.chunks_exact(2) {
            let (p, k) = (c[0] as usize, c[1] as usize);
            if p < pairs && k < r && accepted[k] && !disputes.contains(&(j, p, k)) {
                disputes.push((j, p, k));
            }
        }
    }

    // 4. reveal the complainers' points of the disputed dealings
    let tag = net.fresh_tag();
    let eps: Vec<Endpoint> = members.iter().enumerate().map(|(i, &p)| Endpoint::new(p, i)).collect();
    let mut envs = Vec::new();
    if !disputes.is_empty() {
        for i in 0..r {
            let meter = OpMeter::start();
            let mut payload = Vec::with_capacity(disputes.len() * stride);
            for &(j, p, k) in &disputes {
                for q in 0..stride {
                    payload.push(batch.rows[i][k][inst(p, q)].eval(xs[j]).value());
                }
            }
            net.charge_ops(members[i], meter.stop());
            envs.push(Envelope::multicast(eps[i], eps.clone(), tag, MsgKind::Share, payload));
        }
    }
    let got = net.exchange(envs);
    let mut view: Vec<Option<&[u64]>> = vec![None; r];
    for m in &got {
        let i = m.from.slot as usize;
        if m.to.slot as usize == g && i < r && m.from.player == members[i] && m.payload.len() == disputes.len() * stride {
            view[i] = Some(m.payload.as_slice());
        }
    }
    let mut convicted: BTreeSet<(usize, usize)> = BTreeSet::new();
    let meter = OpMeter::start();
    for (n, &(j, p, k)) in disputes.iter().enumerate() {
        if convicted.contains(&(p, k)) {
            continue;
        }
        let mut vals = Vec::with_capacity(stride);
        for q in 0..stride {
            let points: Vec<(Fe, Fe)> = view
                .iter()
                .enumerate()
                .filter_map(|(i, w)| Some((xs[i], field.try_elem((*w)?[n * stride + q])?)))
                .collect();
            vals.push(berlekamp_welch(&points, t)?.coeff(0));
        }
        let (ea, eb) = &errs[p];
        if !product_holds(xs[j], vals[ia] - ea[k], vals[ib] - eb[k], vals[ic], &vals[id..]) {
            convicted.insert((p, k));
        }
    }
    let ops = meter.stop();
    for &m in &members {
        net.charge_ops(m, ops);
    }

    // 5. open the factors of convicted dealers
    let convicted: Vec<(usize, usize)> = convicted.into_iter().collect();
    let shares: Vec<Vec<Fe>> = (0..r)
        .map(|i| {
            convicted
                .iter()
                .flat_map(|&(p, k)| [batch.share(i, k, inst(p, ia)), batch.share(i, k, inst(p, ib))])
                .collect()
        })
        .collect();
    let opened = if convicted.is_empty() {
        net.exchange(Vec::new());
        Vec::new()
    } else {
        let o = open_to(net, &members, &members, MsgKind::Share, &shares, t);
        o[session.reference_role(net)].iter().cloned().collect::<Result<Vec<_>, _>>()?
    };
    // public products: disqualified dealers (factors read off the error
    // pattern, since they contributed 0) and convicted ones
    let mut public: Vec<Vec<Option<Fe>>> = vec![vec![None; r]; pairs];
    for (p, (ea, eb)) in errs.iter().enumerate() {
        for k in (0..r).filter(|&k| !accepted[k]) {
            public[p][k] = Some((-ea[k]) * (-eb[k]));
        }
    }
    for (n, &(p, k)) in convicted.iter().enumerate() {
        let (ea, eb) = &errs[p];
        public[p][k] = Some((opened[2 * n] - ea[k]) * (opened[2 * n + 1] - eb[k]));
    }

    // 6. degree reduction by interpolation at 0
    let lambda = lagrange_coefficients(&xs, field.zero()).expect("distinct abscissas");
    let mut out = Vec::with_capacity(pairs);
    for (p, pubs) in public.iter().enumerate() {
        let constant = lambda.iter().zip(pubs).fold(field.zero(), |acc, (l, c)| acc + c.map_or(field.zero(), |c| *l * c));
        let mut rows = Vec::with_capacity(r);
        for i in 0..r {
            let meter = OpMeter::start();
            let mut acc = Polynomial::constant(constant);
            for k in (0..r).filter(|&k| pubs[k].is_none()) {
                acc.add_scaled(lambda[k], &batch.rows[i][k][inst(p, ic)]);
            }
            net.charge_ops(members[i], meter.stop());
            rows.push(acc);
        }
        out.push(Shared::from_rows(members.clone(), rows));
    }
    ensure_budget(start, net.round(), budget)?;
    net.set_round(start + budget);
    Ok(out)
}
