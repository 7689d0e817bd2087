//! Deterministic random streams derived from the scenario seed.
//!
//! Every consumer draws from its own ChaCha stream keyed by a domain tag, the
//! round and the agent, so adding draws in one place never shifts another.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::orderbook::AgentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Shuffle = 1,
    Dividend = 2,
    Linear = 3,
    Sweep = 4,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for `(domain, round, agent)` under `seed`.
pub fn substream(seed: u64, domain: Domain, round: u32, agent: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key = splitmix(splitmix(domain as u64) ^ ((round as u64) << 32 | agent as u64));
    rng.set_stream(key);
    rng
}

/// Submission order of `ids` in `round`.
pub fn seeded_shuffle(ids: &[AgentId], seed: u64, round: u32) -> Vec<AgentId> {
    let mut out = ids.to_vec();
    out.shuffle(&mut substream(seed, Domain::Shuffle, round, 0));
    out
}
