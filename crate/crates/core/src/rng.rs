//! Deterministic sampling.
//!
//! Every random quantity in the crate is drawn from a [`SeedSpec`]: a 64-bit
//! base seed plus a 64-bit stream id. The pair selects one ChaCha8 keystream
//! (`seed_from_u64(base_seed)` followed by `set_stream(stream_id)`), so
//! parallel trials never share generator state.
//!
//! Normal variates come from the Ziggurat method of `rand_distr::StandardNormal`
//! applied to that keystream. Child seeds are derived with the SplitMix64
//! finalizer over `base_seed ^ (index + 1) * 0x9E3779B97F4A7C15`; the map is a
//! bijection of `index` for a fixed base, so derived seeds never collide.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream ids for the distinct random quantities of one trial.
pub mod streams {
    pub const MATRIX: u64 = 1;
    pub const SIGNAL: u64 = 2;
    pub const INIT: u64 = 3;
    pub const PAIRS: u64 = 4;
    pub const SUBSET: u64 = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub base_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub const fn new(base_seed: u64, stream_id: u64) -> Self {
        Self {
            base_seed,
            stream_id,
        }
    }

    pub const fn with_stream(self, stream_id: u64) -> Self {
        Self {
            base_seed: self.base_seed,
            stream_id,
        }
    }

    /// Child seed for trial (or sample) `index`. See [`derive_seed`].
    pub fn child(self, index: u64) -> Self {
        derive_seed(self, index)
    }

    /// Fresh generator positioned at the start of this seed's stream.
    pub fn generator(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

impl From<u64> for SeedSpec {
    fn from(base_seed: u64) -> Self {
        Self::new(base_seed, 0)
    }
}

#[inline]
fn splitmix64_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the `index`-th child of `base`. The stream id is carried over.
pub fn derive_seed(base: SeedSpec, index: u64) -> SeedSpec {
    let mixed = base.base_seed ^ index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA);
    SeedSpec {
        base_seed: splitmix64_finalize(mixed),
        stream_id: base.stream_id,
    }
}

/// `count` i.i.d. standard normal draws from the stream selected by `seed`.
pub fn sample_standard_normal(seed: SeedSpec, count: usize) -> Vec<f64> {
    let mut rng = seed.generator();
    let mut out = vec![0.0; count];
    fill_standard_normal(&mut rng, &mut out);
    out
}

pub(crate) fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
}
