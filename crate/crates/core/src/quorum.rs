//! Quorum formation, node assignment and the output propagation tree.
//!
//! Formation is idealized: quorums are sampled at random and the table is
//! rejected if any quorum has a third or more bad members, which models the
//! low-probability failure of a real formation protocol. Its communication
//! cost is charged to the metrics ledger by formula instead of simulated.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use crate::circuit::GateGraph;
use crate::simnet::PlayerId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuorumError {
    #[error("no table with every quorum under 1/3 bad after {attempts} attempts")]
    FormationFailure { attempts: usize },
    #[error("{bad} bad players exceed the tolerated {limit} of {players}")]
    TooManyBad { bad: usize, limit: usize, players: usize },
    #[error("quorum size {size} is invalid for {players} players (need 4..=n)")]
    BadQuorumSize { size: usize, players: usize },
    #[error("quorum table line {line}: {message}")]
    ParseError { line: usize, message: String },
}

/// `ceil(c * log2 n)`, at least 4 and at most `n`.
pub fn quorum_size(players: usize, multiplier: f64) -> usize {
    let raw = (multiplier * (players.max(2) as f64).log2()).ceil() as usize;
    raw.max(4).min(players.max(4))
}

/// Size with the default multiplier 2.
pub fn default_quorum_size(players: usize) -> usize {
    quorum_size(players, 2.0)
}

pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

/// Modeled per-player message cost of forming the quorums:
/// `ceil(sqrt n) * ceil(log2 n)`.
pub fn formation_charge(players: usize) -> u64 {
    let s = (players as f64).sqrt().ceil() as u64;
    s * ceil_log2(players).max(1) as u64
}

/// Modeled round count of forming the quorums: `ceil(log2 n)^2`.
pub fn formation_rounds(players: usize) -> u64 {
    let l = ceil_log2(players).max(1) as u64;
    l * l
}

/// Quorum ids are 1-based; `quorum(i)` lists its members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuorumTable {
    players: usize,
    quorums: Vec<Vec<PlayerId>>,
}

impl QuorumTable {
    pub fn new(players: usize, quorums: Vec<Vec<PlayerId>>) -> Self {
        QuorumTable { players, quorums }
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn count(&self) -> usize {
        self.quorums.len()
    }

    pub fn quorum(&self, id: usize) -> &[PlayerId] {
        &self.quorums[id - 1]
    }

    /// Quorum ids (1-based) each player belongs to.
    pub fn memberships(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.players];
        for (i, q) in self.quorums.iter().enumerate() {
            for &p in q {
                if !m[p].contains(&(i + 1)) {
                    m[p].push(i + 1);
                }
            }
        }
        m
    }

    pub fn bad_count(&self, id: usize, bad: &BTreeSet<PlayerId>) -> usize {
        self.quorum(id).iter().filter(|p| bad.contains(p)).count()
    }

    /// Every quorum has fewer than a third bad members.
    pub fn all_good(&self, bad: &BTreeSet<PlayerId>) -> bool {
        (1..=self.count()).all(|i| 3 * self.bad_count(i, bad) < self.quorum(i).len())
    }

    /// Deterministic text dump: `quorum <id>: <members>` per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("players {}\n", self.players);
        for (i, q) in self.quorums.iter().enumerate() {
            let members: Vec<String> = q.iter().map(|p| p.to_string()).collect();
            let _ = writeln!(s, "quorum {}: {}", i + 1, members.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, QuorumError> {
        let err = |line: usize, message: &str| QuorumError::ParseError { line, message: message.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or_else(|| err(1, "empty table"))?;
        let players: usize = head
            .strip_prefix("players ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| err(1, "expected `players <n>`"))?;
        let mut quorums = Vec::new();
        for (i, l) in lines {
            let line = i + 1;
            let rest = l.strip_prefix("quorum ").ok_or_else(|| err(line, "expected `quorum <id>: ...`"))?;
            let (id, members) = rest.split_once(':').ok_or_else(|| err(line, "missing `:`"))?;
            if id.trim().parse::<usize>().ok() != Some(quorums.len() + 1) {
                return Err(err(line, "quorum ids must be consecutive from 1"));
            }
            let members = members
                .split_whitespace()
                .map(|p| p.parse::<usize>().ok().filter(|&p| p < players))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| err(line, "bad member id"))?;
            quorums.push(members);
        }
        Ok(QuorumTable { players, quorums })
    }
}

/// A formed table plus how many samples it took.
#[derive(Debug, Clone)]
pub struct Formation {
    pub table: QuorumTable,
    pub attempts: usize,
}

/// Samples `n` quorums of `size` distinct players each, retrying up to
/// `retries` times while some quorum is a third or more bad.
pub fn form_quorums<R: Rng + ?Sized>(
    players: usize,
    bad: &BTreeSet<PlayerId>,
    size: usize,
    epsilon: f64,
    retries: usize,
    rng: &mut R,
) -> Result<Formation, QuorumError> {
    if size < 4 || size > players {
        return Err(QuorumError::BadQuorumSize { size, players });
    }
    let limit = ((1.0 / 3.0 - epsilon) * players as f64).floor().max(0.0) as usize;
    if bad.len() > limit {
        return Err(QuorumError::TooManyBad { bad: bad.len(), limit, players });
    }
    for attempt in 1..=retries + 1 {
        let quorums: Vec<Vec<PlayerId>> = (0..players)
            .map(|_| {
                let mut q = sample(rng, players, size).into_vec();
                q.sort_unstable();
                q
            })
            .collect();
        let table = QuorumTable { players, quorums };
        if table.all_good(bad) {
            return Ok(Formation { table, attempts: attempt });
        }
    }
    Err(QuorumError::FormationFailure { attempts: retries + 1 })
}

/// Quorum serving node `j` (1-based): `((j - 1) mod n) + 1`.
pub fn quorum_of(node: usize, players: usize) -> usize {
    (node - 1) % players + 1
}

/// `assignment[j - 1]` is the quorum of node `j`.
pub fn assign_nodes(graph: &GateGraph, table: &QuorumTable) -> Vec<usize> {
    (1..=graph.len()).map(|j| quorum_of(j, table.count())).collect()
}

/// Largest number of nodes any quorum serves.
pub fn max_load(assignment: &[usize]) -> usize {
    let mut counts = std::collections::HashMap::new();
    for &q in assignment {
        *counts.entry(q).or_insert(0usize) += 1;
    }
    counts.into_values().max().unwrap_or(0)
}

pub fn tree_parent(quorum: usize) -> Option<usize> {
    (quorum > 1).then_some(quorum / 2)
}

pub fn tree_children(quorum: usize, count: usize) -> Vec<usize> {
    [2 * quorum, 2 * quorum + 1].into_iter().filter(|&c| c <= count).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_bad_set_always_succeeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let f = form_quorums(16, &BTreeSet::new(), 8, 0.05, 0, &mut rng).unwrap();
            assert_eq!(f.attempts, 1);
            assert_eq!(f.table.count(), 16);
            assert!((1..=16).all(|i| f.table.quorum(i).len() == 8));
        }
    }

    #[test]
    fn assignment_rule() {
        assert_eq!(quorum_of(9, 8), 1);
        assert_eq!(quorum_of(8, 8), 8);
        assert_eq!(quorum_of(1, 8), 1);
    }

    #[test]
    fn load_bounds() {
        let mut t = String::new();
        for i in 1..=8 {
            t.push_str(&format!("input {i}\n"));
        }
        t.push_str("gate 1 mul g2 g3\ngate 2 add g4 g5\ngate 3 mul g6 g7\n");
        t.push_str("gate 4 add x1 x2\ngate 5 add x3 x4\ngate 6 add x5 x6\ngate 7 mul x7 x8\n");
        let g = GateGraph::build(&parse_circuit(&t, 2).unwrap(), 8).unwrap();
        let table = QuorumTable::new(8, vec![vec![0, 1, 2, 3]; 8]);
        let a = assign_nodes(&g, &table);
        assert_eq!(a.len(), 15);
        assert_eq!(max_load(&a), 2);
        // m = 3n: every quorum serves exactly 4 nodes
        let a: Vec<usize> = (1..=32).map(|j| quorum_of(j, 8)).collect();
        let mut counts = [0; 9];
        for q in a {
            counts[q] += 1;
        }
        assert!(counts[1..].iter().all(|&c| c == 4));
    }

    #[test]
    fn tree_links() {
        assert_eq!(tree_children(1, 8), vec![2, 3]);
        assert_eq!(tree_parent(5), Some(2));
        assert!(tree_children(5, 8).is_empty());
        assert_eq!(tree_children(3, 8), vec![6, 7]);
        assert_eq!(tree_parent(1), None);
    }

    #[test]
    fn text_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = form_quorums(8, &[1].into(), 5, 0.05, 100, &mut rng).unwrap();
        assert_eq!(QuorumTable::from_text(&f.table.to_text()).unwrap(), f.table);
        assert!(QuorumTable::from_text("players 2\nquorum 2: 0 1\n").is_err());
    }

    #[test]
    fn rejects_too_many_bad_and_bad_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bad: BTreeSet<usize> = (0..4).collect();
        assert!(matches!(form_quorums(12, &bad, 6, 0.05, 0, &mut rng), Err(QuorumError::TooManyBad { .. })));
        assert!(matches!(form_quorums(12, &BTreeSet::new(), 3, 0.05, 0, &mut rng), Err(QuorumError::BadQuorumSize { .. })));
    }

    #[test]
    fn charges() {
        assert_eq!(formation_charge(64), 8 * 6);
        assert_eq!(formation_rounds(32), 25);
        assert_eq!(default_quorum_size(32), 10);
        assert_eq!(default_quorum_size(8), 6);
    }
}
