//! Opening shared values to a set of recipients with error correction.

use std::collections::HashMap;
use std::rc::Rc;

use super::shamir::abscissas;
use super::SharingError;
use crate::decode::berlekamp_welch;
use crate::field::Fe;
use crate::simnet::{Endpoint, Envelope, MsgKind, Network, OpMeter, PlayerId};

/// Sender role `i` (abscissa `i + 1`) sends `shares[i][k]` of value `k` to
/// every recipient, who decodes each degree-`degree` sharing. Silent or
/// lying senders are corrected as long as the code distance allows.
/// Returns `values[recipient][k]`. One round.
pub fn open_to(
    net: &mut Network,
    senders: &[PlayerId],
    recipients: &[PlayerId],
    kind: MsgKind,
    shares: &[Vec<Fe>],
    degree: usize,
) -> Vec<Vec<Result<Fe, SharingError>>> {
    let field = net.field();
    let count = shares.first().map_or(0, |s| s.len());
    let tag = net.fresh_tag();
    let to: Vec<Endpoint> = recipients.iter().enumerate().map(|(i, &p)| Endpoint::new(p, i)).collect();
    let envs = senders
        .iter()
        .zip(shares)
        .enumerate()
        .map(|(i, (&p, s))| Envelope::multicast(Endpoint::new(p, i), to.clone(), tag, kind, s.iter().map(|v| v.value()).collect()))
        .collect();
    let got = net.exchange(envs);
    let xs = abscissas(field, senders.len());

    let mut inbox: Vec<Vec<Option<Rc<Vec<u64>>>>> = vec![vec![None; senders.len()]; recipients.len()];
    for m in &got {
        let (r, i) = (m.to.slot as usize, m.from.slot as usize);
        if r < recipients.len() && i < senders.len() && m.from.player == senders[i] && inbox[r][i].is_none() {
            inbox[r][i] = Some(m.payload.clone());
        }
    }
    // Recipients that saw exactly the same payloads decode once.
    let mut cache: HashMap<Vec<usize>, Vec<Result<Fe, SharingError>>> = HashMap::new();
    let mut out = Vec::with_capacity(recipients.len());
    for (r, row) in inbox.iter().enumerate() {
        let key: Vec<usize> = row.iter().map(|p| p.as_ref().map_or(0, |p| Rc::as_ptr(p) as usize)).collect();
        if let Some(v) = cache.get(&key) {
            out.push(v.clone());
            continue;
        }
        let meter = OpMeter::start();
        let decoded: Vec<Result<Fe, SharingError>> = (0..count)
            .map(|k| {
                let points: Vec<(Fe, Fe)> = row
                    .iter()
                    .enumerate()
                    .filter_map(|(i, p)| {
                        let w = *p.as_ref()?.get(k)?;
                        if p.as_ref()?.len() != count {
                            return None;
                        }
                        Some((xs[i], field.try_elem(w)?))
                    })
                    .collect();
                berlekamp_welch(&points, degree)
                    .map(|poly| poly.coeff(0))
                    .map_err(|_| SharingError::DecodingFailure { threshold: degree })
            })
            .collect();
        net.charge_ops(recipients[r], meter.stop());
        cache.insert(key, decoded.clone());
        out.push(decoded);
    }
    out
}

/// Every member learns every shared value; `shares[member][k]`.
pub fn vss_reconstruct(
    net: &mut Network,
    members: &[PlayerId],
    shares: &[Vec<Fe>],
    t: usize,
) -> Vec<Vec<Result<Fe, SharingError>>> {
    open_to(net, members, members, MsgKind::Share, shares, t)
}
