//! Independent reference implementations and seeded generators used by the
//! integration and acceptance tests. Nothing here calls the code it checks:
//! counting, statistics, filter evaluation and URL decoding are all
//! re-derived from scratch with plain integer arithmetic.

pub mod gen;
pub mod interp;
pub mod mailto;
pub mod oracle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
