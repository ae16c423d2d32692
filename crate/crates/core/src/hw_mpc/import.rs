use super::{check_quorum, MpcError, MpcSession, Shared};
use crate::agreement::{ensure_budget, fault_bound};
use crate::decode::{parity_check, syndrome_decode};
use crate::poly::{lagrange_coefficients, Polynomial};
use crate::rng::Streams;
use crate::sharing::{abscissas, open_to, vss_rounds, vss_share, Bivariate, VssDealing};
use crate::simnet::{MsgKind, Network, OpMeter};

/// Fixed round count of [`import`] into a session of `roles`.
pub fn import_rounds(roles: usize) -> u64 {
    vss_rounds(roles) + 1
}

/// Brings values shared by other quorums into the session.
///
/// Every holder of a source value reshares its share by VSS. The dealt
/// vector should be a codeword of the source's sharing code; the session
/// opens its syndrome, which depends only on the errors introduced by bad
/// holders, decodes the error pattern and removes it publicly. A holder
/// whose dealing was disqualified contributes 0 and is corrected the same
/// way.
pub fn import(
    net: &mut Network,
    session: &MpcSession,
    streams: &mut Streams,
    sources: &[&Shared],
) -> Result<Vec<Shared>, MpcError> {
    let start = net.round();
    let budget = import_rounds(session.roles());
    let field = session.field();
    let t = session.threshold();
    let r = session.roles();

    let mut dealings = Vec::new();
    let mut offsets = Vec::with_capacity(sources.len());
    for src in sources {
        check_quorum(net, src.members())?;
        offsets.push(dealings.len());
        for (k, &p) in src.members().iter().enumerate() {
            let meter = OpMeter::start();
            let rng = streams.player(p);
            let f = Polynomial::random_with_constant(src.share(k), t, rng);
            let b = Bivariate::with_sharing(&f, t, rng);
            net.charge_ops(p, meter.stop());
            dealings.push(VssDealing { dealer: p, sharings: vec![b] });
        }
    }
    let batch = vss_share(net, session.members(), t, MsgKind::Share, &dealings)?;

    // Syndrome shares, all sources opened together.
    let codes: Vec<_> = sources
        .iter()
        .map(|src| {
            let xs = abscissas(field, src.members().len());
            let ts = fault_bound(xs.len());
            let h = parity_check(&xs, ts);
            (xs, ts, h)
        })
        .collect();
    let mut shares = vec![Vec::new(); r];
    for (i, out) in shares.iter_mut().enumerate() {
        let meter = OpMeter::start();
        for (s, (_, _, h)) in codes.iter().enumerate() {
            for hrow in h {
                let v = hrow
                    .iter()
                    .enumerate()
                    .fold(field.zero(), |acc, (k, c)| acc + *c * batch.share(i, offsets[s] + k, 0));
                out.push(v);
            }
        }
        net.charge_ops(session.members()[i], meter.stop());
    }
    let opened = open_to(net, session.members(), session.members(), MsgKind::Share, &shares, t);
    let g = session.reference_role(net);
    let syndromes = opened[g].iter().cloned().collect::<Result<Vec<_>, _>>()?;

    let mut out = Vec::with_capacity(sources.len());
    let mut at = 0;
    for (s, (xs, ts, h)) in codes.iter().enumerate() {
        let syn = &syndromes[at..at + h.len()];
        at += h.len();
        let e = syndrome_decode(xs, *ts, syn)?;
        let lambda = lagrange_coefficients(xs, field.zero()).expect("distinct abscissas");
        let shift = lambda.iter().zip(&e).fold(field.zero(), |acc, (l, e)| acc - *l * *e);
        let mut rows = Vec::with_capacity(r);
        for i in 0..r {
            let meter = OpMeter::start();
            let mut acc = Polynomial::constant(shift);
            for (k, l) in lambda.iter().enumerate() {
                acc.add_scaled(*l, &batch.rows[i][offsets[s] + k][0]);
            }
            net.charge_ops(session.members()[i], meter.stop());
            rows.push(acc);
        }
        out.push(Shared::from_rows(session.members().to_vec(), rows));
    }
    ensure_budget(start, net.round(), budget)?;
    net.set_round(start + budget);
    Ok(out)
}
