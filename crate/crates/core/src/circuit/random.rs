use rand::seq::IndexedRandom;
use rand::Rng;

use super::{Circuit, Gate, GateOp, Wire};
use crate::field::Field;

/// Whether [`random_circuit`] can place `m` gates over `n` inputs.
pub fn random_circuit_fits(n: usize, m: usize, max_depth: usize) -> bool {
    m <= 1 || max_depth >= 2 && (m - 1).div_ceil(max_depth.min(m) - 1) <= n
}

/// Random layered circuit with `m` gates over `n` inputs, height at most
/// `max_depth`, fan-in and fan-out at most 2. Gates mix add (40%), mul (40%)
/// and constant multiplication (20%). Sources not yet consumed are preferred,
/// so almost every node feeds the output.
///
/// Every gate takes one source from the level just below, so a level holds
/// at most `n` gates and `m` must not exceed `1 + (max_depth - 1) * n`.
pub fn random_circuit<R: Rng + ?Sized>(n: usize, m: usize, max_depth: usize, field: Field, rng: &mut R) -> Circuit {
    assert!(n >= 1 && max_depth >= 1);
    if m == 0 {
        return Circuit::new(n, Vec::new(), 2).expect("identity circuit");
    }
    let log = usize::BITS as usize - m.leading_zeros() as usize;
    let mut depth = max_depth.min(m).min(log + 1).max(1);
    // levels below the root hold at most n gates each
    while depth < max_depth.min(m) && (m - 1).div_ceil(depth - 1) > n {
        depth += 1;
    }
    assert!(random_circuit_fits(n, m, max_depth), "{m} gates do not fit {max_depth} levels over {n} inputs with fan-out 2");

    // widths[h - 1] gates at height h; the root alone at the top.
    let mut widths = vec![0usize; depth];
    widths[depth - 1] = 1;
    if depth > 1 {
        let rest = m - 1;
        let lower = depth - 1;
        for (h, w) in widths[..lower].iter_mut().enumerate() {
            *w = rest / lower + usize::from(h < rest % lower);
        }
    }
    // Ids: root is 1, then higher levels get lower ids.
    let mut ids_at: Vec<Vec<usize>> = vec![Vec::new(); depth + 1];
    let mut next = 1;
    for h in (1..=depth).rev() {
        for _ in 0..widths[h - 1] {
            ids_at[h].push(next);
            next += 1;
        }
    }

    let mut fan_out = vec![0usize; m + n + 1];
    let key = |w: Wire| match w {
        Wire::Gate(g) => g,
        Wire::Input(i) => m + i,
    };
    let mut level: Vec<Vec<Wire>> = vec![(1..=n).map(Wire::Input).collect()];
    level.extend((1..=depth).map(|h| ids_at[h].iter().map(|&g| Wire::Gate(g)).collect()));

    let pick = |pool: Vec<Wire>, fan_out: &mut Vec<usize>, avoid: Option<Wire>, rng: &mut R| -> Wire {
        let mut open: Vec<Wire> = pool.iter().copied().filter(|&w| fan_out[key(w)] < 2 && Some(w) != avoid).collect();
        if open.is_empty() {
            open = pool.into_iter().filter(|&w| fan_out[key(w)] < 2).collect();
        }
        let unused: Vec<Wire> = open.iter().copied().filter(|&w| fan_out[key(w)] == 0).collect();
        let from = if unused.is_empty() { &open } else { &unused };
        let w = *from.choose(rng).expect("no source with spare fan-out");
        fan_out[key(w)] += 1;
        w
    };
    let mut gates: Vec<Option<Gate>> = vec![None; m];
    for h in 1..=depth {
        // first sources of the whole level before any second source, so the
        // level below is never drained by second picks
        let mut placed = Vec::with_capacity(ids_at[h].len());
        for &id in &ids_at[h] {
            let roll = rng.random_range(0..10);
            let op = match roll {
                0..=3 => GateOp::Add,
                4..=7 => GateOp::Mul,
                _ => GateOp::CMul(field.sample_nonzero(rng).value()),
            };
            let first = pick(level[h - 1].clone(), &mut fan_out, None, rng);
            placed.push((id, op, first));
        }
        let below: Vec<Wire> = level[..h].iter().flatten().copied().collect();
        for (id, op, first) in placed {
            let mut sources = vec![first];
            if !matches!(op, GateOp::CMul(_)) {
                sources.push(pick(below.clone(), &mut fan_out, Some(first), rng));
            }
            gates[id - 1] = Some(Gate { op, sources });
        }
    }
    let gates = gates.into_iter().map(|g| g.expect("every gate placed")).collect();
    Circuit::new(n, gates, 2).expect("generator produces valid circuits")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateGraph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_limits_across_sizes() {
        let f = Field::new(101).unwrap();
        for n in [8usize, 16, 32] {
            for m in [1, n, 2 * n, 4 * n, 5 * n + 1] {
                for seed in 0..5 {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let c = random_circuit(n, m, 6, f, &mut rng);
                    assert_eq!(c.gate_count(), m);
                    let g = GateGraph::build(&c, n).unwrap();
                    assert!(g.root_height() <= 6 && g.max_height() <= 6);
                }
            }
        }
    }

    #[test]
    fn deeper_limit_admits_more_gates() {
        let f = Field::new(101).unwrap();
        let c = random_circuit(32, 256, 10, f, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(c.gate_count(), 256);
        assert!(GateGraph::build(&c, 32).unwrap().root_height() <= 10);
    }

    #[test]
    #[should_panic(expected = "do not fit")]
    fn infeasible_request_is_refused() {
        let f = Field::new(101).unwrap();
        random_circuit(32, 256, 6, f, &mut ChaCha8Rng::seed_from_u64(1));
    }

    #[test]
    fn deterministic_per_seed() {
        let f = Field::new(101).unwrap();
        let a = random_circuit(8, 16, 6, f, &mut ChaCha8Rng::seed_from_u64(3));
        let b = random_circuit(8, 16, 6, f, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }
}
