use super::{import, import_rounds, mpc_linear, multiply, multiply_rounds, open_shared, MpcError, MpcSession, Shared};
use crate::agreement::{ensure_budget, fault_bound};
use crate::circuit::GateOp;
use crate::field::Fe;
use crate::rng::Streams;
use crate::simnet::{Endpoint, Envelope, MsgKind, Network};

/// Fixed round count of [`mpc_run`] for a session of `roles`, whatever
/// the gate: masked-value transfer, import, one multiplication slot and
/// the final opening.
pub fn gate_rounds(roles: usize) -> u64 {
    1 + import_rounds(roles) + multiply_rounds(roles) + 1
}

/// A child node as seen by the gate: the masked value each holder believes
/// in (indexed like `mask.members()`) and the holders' shares of the mask.
#[derive(Debug, Clone)]
pub struct ChildInput<'a> {
    pub masked: Vec<Fe>,
    pub mask: &'a Shared,
}

#[derive(Debug, Clone)]
pub struct GateOutcome {
    /// What each role learned as the gate's masked value.
    pub masked: Vec<Option<Fe>>,
    /// Masked child values as agreed by the session.
    pub inputs: Vec<Fe>,
}

/// Evaluates `s_g = f(O_1, ..) + r_g` where `O_c = s_c - r_c`.
///
/// Masked child values are public and redundant: each holder sends its copy
/// and a role adopts the value sent by at least `q - t` holders. Child masks
/// are imported, unmasked under sharing, combined, re-masked with `r_g` and
/// the result opened to the session.
pub fn mpc_run(
    net: &mut Network,
    session: &MpcSession,
    streams: &mut Streams,
    op: &GateOp,
    children: &[ChildInput<'_>],
    mask: &Shared,
) -> Result<GateOutcome, MpcError> {
    let start = net.round();
    let r = session.roles();
    let budget = gate_rounds(r);
    let field = session.field();
    if mask.members() != session.members() {
        return Err(MpcError::MismatchedRoleSets);
    }

    // masked child values, redundantly
    let tag = net.fresh_tag();
    let to: Vec<Endpoint> = session.members().iter().enumerate().map(|(i, &p)| Endpoint::new(p, i)).collect();
    let mut offsets = Vec::with_capacity(children.len());
    let mut envs = Vec::new();
    let mut slot = 0;
    for ch in children {
        offsets.push(slot);
        for (k, &p) in ch.mask.members().iter().enumerate() {
            envs.push(Envelope::multicast(Endpoint::new(p, slot + k), to.clone(), tag, MsgKind::Masked, vec![ch.masked[k].value()]));
        }
        slot += ch.mask.members().len();
    }
    let got = net.exchange(envs);
    let g = session.reference_role(net);
    let mut inputs = Vec::with_capacity(children.len());
    for (c, ch) in children.iter().enumerate() {
        let holders = ch.mask.members();
        let need = holders.len() - fault_bound(holders.len());
        let mut tally: Vec<(u64, usize)> = Vec::new();
        for m in got.iter().filter(|m| m.to.slot as usize == g) {
            let k = (m.from.slot as usize).wrapping_sub(offsets[c]);
            if k >= holders.len() || m.from.player != holders[k] || m.payload.len() != 1 {
                continue;
            }
            match tally.iter_mut().find(|(v, _)| *v == m.payload[0]) {
                Some(e) => e.1 += 1,
                None => tally.push((m.payload[0], 1)),
            }
        }
        let v = tally.into_iter().find(|&(_, n)| n >= need).and_then(|(v, _)| field.try_elem(v));
        inputs.push(v.ok_or(MpcError::NoMajority)?);
    }

    let masks: Vec<&Shared> = children.iter().map(|c| c.mask).collect();
    let imported = import(net, session, streams, &masks)?;
    let values: Vec<Shared> = imported
        .iter()
        .zip(&inputs)
        .map(|(rc, s)| mpc_linear(&[-field.one()], &[rc], *s))
        .collect::<Result<_, _>>()?;

    let f = match op {
        GateOp::Add => {
            let refs: Vec<&Shared> = values.iter().collect();
            mpc_linear(&vec![field.one(); refs.len()], &refs, field.zero())?
        }
        GateOp::CMul(c) => mpc_linear(&[field.elem(*c)], &[&values[0]], field.zero())?,
        GateOp::Mul => multiply(net, session, streams, &[(&values[0], &values[1])])?.remove(0),
    };
    net.set_round(start + 1 + import_rounds(r) + multiply_rounds(r));

    let s = mpc_linear(&[field.one(), field.one()], &[&f, mask], field.zero())?;
    let opened = open_shared(net, &[&s], session.members(), MsgKind::Masked)?;
    let masked = opened.into_iter().map(|v| v.into_iter().next().and_then(|x| x.ok())).collect();
    ensure_budget(start, net.round(), budget)?;
    net.set_round(start + budget);
    Ok(GateOutcome { masked, inputs })
}
