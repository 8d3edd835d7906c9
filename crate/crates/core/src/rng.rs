//! Counter-based splitmix64 streams and seed derivation.
//!
//! Every random decision in the crate is addressed by a position in a
//! splitmix64 stream, so results never depend on the order in which
//! workers or loops happen to consume numbers.

use crate::real::Real;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a, used to turn stream labels such as `"aug"` into seed words.
pub fn tag(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Derives a child seed from a parent seed and a sequence of words.
pub fn derive(parent: u64, words: &[u64]) -> u64 {
    words.iter().fold(mix64(parent ^ GOLDEN_GAMMA), |acc, &w| {
        mix64(acc ^ mix64(w.wrapping_add(GOLDEN_GAMMA)))
    })
}

/// Random access into the splitmix64 stream started at `key`.
///
/// `at(i)` equals the `i`-th value produced by [`SplitMix64::new(key)`](SplitMix64).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterStream {
    key: u64,
}

impl CounterStream {
    pub fn new(key: u64) -> Self {
        Self { key }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    #[inline]
    pub fn at(&self, index: u64) -> u64 {
        mix64(self.key.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    #[inline]
    pub fn unit_at<T: Real>(&self, index: u64) -> T {
        T::unit_from_bits(self.at(index))
    }
}

/// Sequential splitmix64 generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    #[inline]
    pub fn next_unit<T: Real>(&mut self) -> T {
        T::unit_from_bits(self.next_u64())
    }

    /// Uniform index in `0..bound` by multiply-shift.
    #[inline]
    pub fn below(&mut self, bound: usize) -> usize {
        ((u128::from(self.next_u64()) * bound as u128) >> 64) as usize
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<E>(&mut self, items: &mut [E]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
