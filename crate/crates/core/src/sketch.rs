//! The linear Turnstile sketch.
//!
//! k accumulators hold x_j = sum_i A[i] r_ij, where A is the aggregated
//! signal and the projection entries r_ij are skewed stable draws
//! regenerated on demand from (seed, i, j). Nothing scales with the index
//! domain: memory is O(k) and any two sketches built with the same
//! (alpha, k, seed) add.

use crate::error::{Error, Result};
use crate::estimators::{
    self, cached_optimal_power, gm_variance_factor, hm_variance_factor, EstimateReport, Method,
};
use crate::rng::angle_exp_pair;
use crate::stable::{Sampler, StableParams};
use std::borrow::Cow;
use std::fs;
use std::path::Path;

const MAGIC: [u8; 4] = *b"SKSM";
const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 34;

/// One Turnstile arrival (i, I_t). Negative increments delete mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamUpdate {
    pub index: u64,
    pub increment: f64,
}

impl StreamUpdate {
    pub fn new(index: u64, increment: f64) -> Result<Self> {
        let u = StreamUpdate { index, increment };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        if self.index == 0 {
            return Err(Error::domain("stream indices start at 1, got 0"));
        }
        if !self.increment.is_finite() {
            return Err(Error::domain(format!(
                "increment must be finite, got {} at index {}",
                self.increment, self.index
            )));
        }
        Ok(())
    }
}

/// The projection entry r_ij: one skewed stable draw S(alpha, 1, 1), a pure
/// function of (seed, index, j, alpha). Columns j count from 0.
pub fn projection_entry(seed: u64, index: u64, j: u32, alpha: f64) -> Result<f64> {
    let params = StableParams::skewed(alpha, 1.0)?;
    let (u, w) = angle_exp_pair(seed, index, u64::from(j));
    Ok(Sampler::new(&params).sample(u, w))
}

/// Streaming sketch with k accumulators over fully skewed projections.
#[derive(Debug, Clone)]
pub struct SkewedSketch {
    alpha: f64,
    k: u32,
    seed: u64,
    update_count: u64,
    accumulators: Vec<f64>,
    /// Neumaier carries, present only when compensation was requested.
    /// Applied at read time, never serialized: rounding state, not signal.
    carries: Option<Vec<f64>>,
    sampler: Sampler,
}

/// One Neumaier step: sum += v with the rounding loss banked in `carry`.
/// Unlike the classic Kahan update this keeps the carry out of the addend,
/// so a later huge cancellation cannot quantize it away.
#[inline]
fn neumaier_add(sum: &mut f64, carry: &mut f64, v: f64) {
    let t = *sum + v;
    *carry += if sum.abs() >= v.abs() {
        (*sum - t) + v
    } else {
        (v - t) + *sum
    };
    *sum = t;
}

impl SkewedSketch {
    pub fn new(alpha: f64, k: u32, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain(format!("need at least 2 accumulators, got {k}")));
        }
        let params = StableParams::skewed(alpha, 1.0)?;
        Ok(SkewedSketch {
            alpha,
            k,
            seed,
            update_count: 0,
            accumulators: vec![0.0; k as usize],
            carries: None,
            sampler: Sampler::new(&params),
        })
    }

    /// Switch the accumulators to compensated summation. Off by default:
    /// projection noise dwarfs rounding except under adversarial
    /// cancellation (huge inserts later deleted).
    pub fn with_compensated_summation(mut self) -> Self {
        if self.carries.is_none() {
            self.carries = Some(vec![0.0; self.k as usize]);
        }
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    /// The accumulator values x_j. Borrowed in the default mode; under
    /// compensated summation the pending carries are resolved into a fresh
    /// vector first.
    pub fn accumulators(&self) -> Cow<'_, [f64]> {
        match &self.carries {
            None => Cow::Borrowed(&self.accumulators),
            Some(carries) => Cow::Owned(
                self.accumulators
                    .iter()
                    .zip(carries)
                    .map(|(a, c)| a + c)
                    .collect(),
            ),
        }
    }

    pub fn is_compensated(&self) -> bool {
        self.carries.is_some()
    }

    /// The entry this sketch uses for (index, j).
    pub fn entry(&self, index: u64, j: u32) -> f64 {
        let (u, w) = angle_exp_pair(self.seed, index, u64::from(j));
        self.sampler.sample(u, w)
    }

    /// x_j += increment * r_(index)j for every j. The update counter moves
    /// even for a zero increment: it counts arrivals, not effects.
    pub fn update(&mut self, u: StreamUpdate) -> Result<()> {
        u.validate()?;
        self.update_count += 1;
        let (sampler, seed) = (self.sampler, self.seed);
        let entry = |j: u32| {
            let (angle, exp) = angle_exp_pair(seed, u.index, u64::from(j));
            sampler.sample(angle, exp)
        };
        match &mut self.carries {
            None => {
                for j in 0..self.k {
                    self.accumulators[j as usize] += u.increment * entry(j);
                }
            }
            Some(carries) => {
                for j in 0..self.k {
                    let v = u.increment * entry(j);
                    neumaier_add(&mut self.accumulators[j as usize], &mut carries[j as usize], v);
                }
            }
        }
        Ok(())
    }

    /// Accumulator-wise sum. Valid only across sketches of the same
    /// (alpha, k, seed): anything else projects against a different matrix.
    pub fn merge_from(&mut self, other: &SkewedSketch) -> Result<()> {
        if self.alpha.to_bits() != other.alpha.to_bits()
            || self.k != other.k
            || self.seed != other.seed
        {
            return Err(Error::Incompatible(format!(
                "(alpha, k, seed) = ({}, {}, {:#x}) vs ({}, {}, {:#x})",
                self.alpha, self.k, self.seed, other.alpha, other.k, other.seed
            )));
        }
        let incoming = other.accumulators();
        match &mut self.carries {
            None => {
                for (a, b) in self.accumulators.iter_mut().zip(incoming.iter()) {
                    *a += b;
                }
            }
            Some(carries) => {
                for ((a, c), b) in self
                    .accumulators
                    .iter_mut()
                    .zip(carries.iter_mut())
                    .zip(incoming.iter())
                {
                    neumaier_add(a, c, *b);
                }
            }
        }
        self.update_count += other.update_count;
        Ok(())
    }

    /// Estimate F_(alpha) from the accumulators. hm and mle05 carry their
    /// own index restrictions; gm-beta is not dispatchable because the
    /// sketch only produces fully skewed projections. An all-zero sketch
    /// (empty or fully cancelled stream) reports 0 with the degenerate
    /// flag instead of tripping the positivity checks.
    pub fn estimate(&self, method: Method) -> Result<EstimateReport> {
        match method {
            Method::GmBeta => {
                return Err(Error::Config(
                    "the sketch projects with beta = 1; use `gm` (gm-beta exists for \
                     off-line diagnostics only)"
                        .into(),
                ))
            }
            Method::Hm if self.alpha >= 1.0 => {
                return Err(Error::Config(format!(
                    "harmonic means requires alpha < 1, sketch has alpha = {}",
                    self.alpha
                )))
            }
            Method::Mle05 if (self.alpha - 0.5).abs() > 1e-12 => {
                return Err(Error::Config(format!(
                    "the closed-form estimator requires alpha = 1/2, sketch has alpha = {}",
                    self.alpha
                )))
            }
            _ => {}
        }
        let values = self.accumulators();
        if values.iter().all(|&x| x == 0.0) {
            let v = match method {
                Method::Gm => gm_variance_factor(self.alpha)?,
                Method::Hm => hm_variance_factor(self.alpha)?,
                Method::Mle05 => 0.5,
                Method::Op => cached_optimal_power(self.alpha)?.g_min,
                Method::GmBeta => unreachable!(),
            };
            return Ok(EstimateReport {
                estimate: 0.0,
                method,
                alpha: self.alpha,
                k: self.k as usize,
                asymptotic_variance_factor: v,
                degenerate: true,
            });
        }
        match method {
            Method::Gm => estimators::gm_estimate(self.alpha, &values),
            Method::Hm => estimators::hm_estimate(self.alpha, &values, true),
            Method::Mle05 => estimators::mle05_estimate(&values, true),
            Method::Op => {
                let power = cached_optimal_power(self.alpha)?;
                estimators::op_estimate(&power, &values)
            }
            Method::GmBeta => unreachable!(),
        }
    }

    pub fn serialized_len(&self) -> usize {
        HEADER_LEN + 8 * self.k as usize
    }

    /// Little-endian binary: "SKSM", version u16, alpha bits f64, k u32,
    /// seed u64, update_count u64, then the k accumulators. Bit-exact
    /// round trip; pending compensation carries are folded in on write.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.alpha.to_bits().to_le_bytes());
        out.extend_from_slice(&self.k.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.update_count.to_le_bytes());
        for x in self.accumulators().iter() {
            out.extend_from_slice(&x.to_bits().to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let take = |range: std::ops::Range<usize>| -> Result<&[u8]> {
            bytes.get(range).ok_or_else(|| {
                Error::Corrupt(format!("truncated: {} bytes is not a sketch", bytes.len()))
            })
        };
        if take(0..4)? != MAGIC {
            return Err(Error::Corrupt("bad magic, not a sketch file".into()));
        }
        let version = u16::from_le_bytes(take(4..6)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Corrupt(format!(
                "format version {version} (this build reads {FORMAT_VERSION})"
            )));
        }
        let alpha = f64::from_bits(u64::from_le_bytes(take(6..14)?.try_into().unwrap()));
        let k = u32::from_le_bytes(take(14..18)?.try_into().unwrap());
        let seed = u64::from_le_bytes(take(18..26)?.try_into().unwrap());
        let update_count = u64::from_le_bytes(take(26..34)?.try_into().unwrap());
        if k < 2 {
            return Err(Error::Corrupt(format!("header k = {k}, need at least 2")));
        }
        let expected = HEADER_LEN + 8 * k as usize;
        if bytes.len() != expected {
            return Err(Error::Corrupt(format!(
                "length {} does not match header (k = {k} wants {expected})",
                bytes.len()
            )));
        }
        let params = StableParams::skewed(alpha, 1.0)
            .map_err(|e| Error::Corrupt(format!("header alpha = {alpha}: {e}")))?;
        let accumulators = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap())))
            .collect();
        Ok(SkewedSketch {
            alpha,
            k,
            seed,
            update_count,
            accumulators,
            carries: None,
            sampler: Sampler::new(&params),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
