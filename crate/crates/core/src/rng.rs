//! SplitMix64 streams with an explicit derivation path.
//!
//! Every random draw in the crate goes through [`RngStream`]. A stream is
//! created from a master seed and children are split off by drawing their
//! seed from the parent, so the full history of a stream is described by its
//! [`StreamOrigin`].

use std::fmt;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Master seed plus the sequence of child labels leading to a stream.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StreamOrigin {
    pub master_seed: u64,
    pub path: Vec<u64>,
}

impl fmt::Display for StreamOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.master_seed)?;
        for p in &self.path {
            write!(f, "/{p}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RngStream {
    state: u64,
    origin: StreamOrigin,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        RngStream { state: master_seed, origin: StreamOrigin { master_seed, path: Vec::new() } }
    }

    pub fn origin(&self) -> &StreamOrigin {
        &self.origin
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`.
    #[inline]
    pub fn next_f64_left_open(&mut self) -> f64 {
        1.0 - self.next_f64()
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift with rejection).
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        let mut m = (self.next_u64() as u128) * (n as u128);
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = (self.next_u64() as u128) * (n as u128);
            }
        }
        (m >> 64) as usize
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Splits off a child stream. The child's seed is the next draw of
    /// `self`, so the order in which children are created is part of the
    /// experiment definition.
    pub fn child(&mut self, label: u64) -> RngStream {
        let seed = self.next_u64();
        let mut path = self.origin.path.clone();
        path.push(label);
        RngStream { state: seed, origin: StreamOrigin { master_seed: self.origin.master_seed, path } }
    }
}
