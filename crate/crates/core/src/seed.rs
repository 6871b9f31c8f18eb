//! Deterministic seed derivation.
//!
//! Every stochastic consumer gets its own RNG whose seed is a hash of the master
//! seed and a path of labels (stage, function id, trial, repetition). The result
//! does not depend on scheduling, so parallel and sequential execution agree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG used throughout the crate. ChaCha keeps streams stable across platforms.
pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over raw bytes.
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// One component of a seed path.
#[derive(Debug, Clone, Copy)]
pub enum Part<'a> {
    Label(&'a str),
    Index(u64),
}

impl<'a> From<&'a str> for Part<'a> {
    fn from(s: &'a str) -> Self {
        Part::Label(s)
    }
}

impl From<u64> for Part<'_> {
    fn from(i: u64) -> Self {
        Part::Index(i)
    }
}

impl From<usize> for Part<'_> {
    fn from(i: usize) -> Self {
        Part::Index(i as u64)
    }
}

/// Mix a master seed with a path of labels and indices.
pub fn derive(master: u64, parts: &[Part<'_>]) -> u64 {
    let mut h = splitmix(master);
    for part in parts {
        let v = match part {
            Part::Label(s) => hash_bytes(s.as_bytes()),
            Part::Index(i) => splitmix(*i ^ 0xA076_1D64_78BD_642F),
        };
        h = splitmix(h ^ v);
    }
    h
}

#[macro_export]
macro_rules! seed_path {
    ($master:expr $(, $part:expr)* $(,)?) => {
        $crate::seed::derive($master, &[$($crate::seed::Part::from($part)),*])
    };
}
