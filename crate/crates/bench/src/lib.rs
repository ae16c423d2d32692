//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmpc_core::quorum::default_quorum_size;
use qmpc_core::{random_circuit, Circuit, Fe, Field, ProtocolParams};

/// Random depth-6 circuit and inputs for `n` players and `m` gates.
pub fn workload(n: usize, m: usize, seed: u64) -> (ProtocolParams, Circuit, Vec<Fe>) {
    let f = Field::mersenne61();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = random_circuit(n, m, 6, f, &mut rng);
    let inputs = (0..n).map(|_| f.sample(&mut rng)).collect();
    let mut p = ProtocolParams::new(f, default_quorum_size(n));
    p.formation_retries = 100_000;
    (p, c, inputs)
}

#[cfg(test)]
mod tests {
    #[test]
    fn workload_matches_request() {
        let (p, c, x) = super::workload(16, 20, 1);
        assert_eq!(c.gate_count(), 20);
        assert_eq!(x.len(), 16);
        assert_eq!(p.quorum_size, 8);
    }
}
