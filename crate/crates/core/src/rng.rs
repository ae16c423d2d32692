//! Deterministic randomness: one ChaCha stream per player plus one for the
//! environment (quorum sampling, adversary), all derived from a master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::simnet::PlayerId;

pub struct Streams {
    env: ChaCha8Rng,
    players: Vec<ChaCha8Rng>,
}

impl Streams {
    pub fn new(seed: u64, players: usize) -> Self {
        let stream = |s: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(s);
            r
        };
        Streams { env: stream(0), players: (0..players).map(|p| stream(p as u64 + 1)).collect() }
    }

    pub fn env(&mut self) -> &mut ChaCha8Rng {
        &mut self.env
    }

    pub fn player(&mut self, p: PlayerId) -> &mut ChaCha8Rng {
        &mut self.players[p]
    }
}
