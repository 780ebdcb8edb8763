//! Seed derivation. Every stochastic component draws from its own stream so
//! that switching one component on or off never perturbs another's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Named sub-streams of a run's master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    PolicyInit,
    ValueInit,
    FeatureInit,
    RndInit,
    Env,
    Action,
    Latent,
    Shuffle,
    Noise,
    RndDrop,
    WhiteNoise,
    Eval,
    Bootstrap,
    Warmup,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::PolicyInit => 1,
            Stream::ValueInit => 2,
            Stream::FeatureInit => 3,
            Stream::RndInit => 4,
            Stream::Env => 5,
            Stream::Action => 6,
            Stream::Latent => 7,
            Stream::Shuffle => 8,
            Stream::Noise => 9,
            Stream::RndDrop => 10,
            Stream::WhiteNoise => 11,
            Stream::Eval => 12,
            Stream::Bootstrap => 13,
            Stream::Warmup => 14,
        }
    }
}

// splitmix64 finalizer
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    mix(mix(master ^ mix(stream.tag())) ^ mix(index.wrapping_add(0xA5A5)))
}

pub fn stream(master: u64, stream: Stream) -> Rng {
    Rng::seed_from_u64(derive_seed(master, stream, 0))
}

/// Independent stream for one lane (worker) of a component.
pub fn lane(master: u64, stream: Stream, index: usize) -> Rng {
    Rng::seed_from_u64(derive_seed(master, stream, index as u64 + 1))
}
