//! Counter-mode pseudo-random generation.
//!
//! Projection entries must be recomputable from `(seed, index, column)`
//! alone, and experiment trials need independent substreams that are stable
//! across thread schedules. Both come from hashing the coordinates with a
//! few avalanche rounds of the splitmix64 finalizer; nothing here keeps
//! state, so memory stays O(1) no matter how large the index domain is.

use std::f64::consts::PI;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const MUL_A: u64 = 0xA24B_AED4_963E_E407;
const MUL_B: u64 = 0x9FB2_1C65_1E98_DF25;

/// splitmix64 finalizer: a full-avalanche 64-bit mix.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One 64-bit lane keyed by (seed, a, b, lane).
#[inline]
pub fn keyed_lane(seed: u64, a: u64, b: u64, lane: u64) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    h = mix64(h ^ a.wrapping_mul(MUL_A));
    h = mix64(h ^ b.wrapping_mul(MUL_B));
    mix64(h.wrapping_add(lane.wrapping_mul(GOLDEN)))
}

/// Map 64 random bits to the open interval (0, 1).
///
/// Uses the top 52 bits plus a half-ulp offset. The extremes 2^-53 and
/// 1 - 2^-53 are exactly representable, so 0 and 1 are unreachable even
/// after rounding (a 53-bit mantissa would round the top value to 1).
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}

/// The (angle, exponential) pair driving one stable draw: an angle uniform
/// on (-pi/2, pi/2) and an independent unit exponential, from lanes 0 and 1
/// of the keyed generator.
#[inline]
pub fn angle_exp_pair(seed: u64, a: u64, b: u64) -> (f64, f64) {
    let u = PI * (unit_open(keyed_lane(seed, a, b, 0)) - 0.5);
    let w = -unit_open(keyed_lane(seed, a, b, 1)).ln();
    (u, w)
}

/// Derive a domain-separated substream seed.
#[inline]
pub fn substream(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag ^ 0xD6E8_FEB8_6659_FD93))
}

/// Minimal sequential generator for stream synthesis.
#[derive(Debug, Clone)]
pub struct SplitMix {
    state: u64,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        SplitMix { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Next value in the open interval (0, 1).
    #[inline]
    pub fn next_unit_open(&mut self) -> f64 {
        unit_open(self.next_u64())
    }
}
