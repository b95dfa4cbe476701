//! Stream file format, synthetic workload generation, and the exact
//! brute-force moment.
//!
//! A stream file is plain text: one "<index> <increment>" pair per line,
//! '#' starts a comment, blank lines are ignored. The format round-trips
//! exactly because increments are printed with the shortest
//! digits-preserving representation.

use crate::error::{Error, Result};
use crate::rng::SplitMix;
use crate::sketch::StreamUpdate;
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::str::FromStr;

fn parse_line(line: &str, line_no: usize) -> Result<Option<StreamUpdate>> {
    let body = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut fields = body.split_whitespace();
    let Some(index_str) = fields.next() else {
        return Ok(None);
    };
    let err = |msg: String| Error::Parse { line: line_no, msg };
    let index: u64 = index_str
        .parse()
        .map_err(|_| err(format!("`{index_str}` is not a positive integer index")))?;
    let Some(inc_str) = fields.next() else {
        return Err(err("missing increment after the index".into()));
    };
    let increment: f64 = inc_str
        .parse()
        .map_err(|_| err(format!("`{inc_str}` is not a real increment")))?;
    if let Some(extra) = fields.next() {
        return Err(err(format!("unexpected trailing field `{extra}`")));
    }
    if index == 0 {
        return Err(err("stream indices start at 1".into()));
    }
    if !increment.is_finite() {
        return Err(err(format!("increment `{inc_str}` is not finite")));
    }
    Ok(Some(StreamUpdate { index, increment }))
}

/// Line-by-line update reader; memory stays constant in both the index
/// domain and the stream length.
pub struct UpdateReader<R> {
    inner: R,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> UpdateReader<R> {
    pub fn new(inner: R) -> Self {
        UpdateReader {
            inner,
            line_no: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for UpdateReader<R> {
    type Item = Result<StreamUpdate>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line_no += 1;
            match parse_line(&self.buf, self.line_no) {
                Ok(None) => continue,
                Ok(Some(u)) => return Some(Ok(u)),
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

pub fn parse_stream<R: BufRead>(reader: R) -> Result<Vec<StreamUpdate>> {
    UpdateReader::new(reader).collect()
}

pub fn write_stream<W: Write>(mut writer: W, updates: &[StreamUpdate]) -> Result<()> {
    for u in updates {
        writeln!(writer, "{} {}", u.index, u.increment)?;
    }
    Ok(())
}

/// Index distribution of the synthetic workload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GenDistribution {
    /// Power-law weights 1/i^s over the domain.
    Zipf { s: f64 },
    Uniform,
}

impl FromStr for GenDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(GenDistribution::Uniform);
        }
        if let Some(expo) = s.strip_prefix("zipf:") {
            let s: f64 = expo
                .parse()
                .map_err(|_| Error::Config(format!("bad zipf exponent `{expo}`")))?;
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!(
                    "zipf exponent must be finite and non-negative, got {s}"
                )));
            }
            return Ok(GenDistribution::Zipf { s });
        }
        Err(Error::Config(format!(
            "unknown distribution `{s}` (expected `uniform` or `zipf:<s>`)"
        )))
    }
}

/// Parameters of the synthetic Turnstile workload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub domain: u64,
    pub updates: u64,
    pub dist: GenDistribution,
    pub deletion_fraction: f64,
    pub seed: u64,
}

impl GenConfig {
    fn validate(&self) -> Result<()> {
        if self.domain == 0 {
            return Err(Error::domain("domain size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.deletion_fraction) {
            return Err(Error::domain(format!(
                "deletion fraction must lie in [0, 1), got {}",
                self.deletion_fraction
            )));
        }
        Ok(())
    }
}

/// Deterministic Turnstile stream whose final signal is strictly positive
/// on every touched index: insertions carry unit-exponential mass, and a
/// deletion removes a uniform fraction of one live index's current mass,
/// so cancellations never overshoot.
pub fn generate_stream(config: &GenConfig) -> Result<Vec<StreamUpdate>> {
    config.validate()?;
    let mut rng = SplitMix::new(config.seed);

    // Inverse-CDF index draw via the cumulative weights; O(D) once.
    let cumulative: Vec<f64> = match config.dist {
        GenDistribution::Uniform => Vec::new(),
        GenDistribution::Zipf { s } => {
            let mut acc = 0.0;
            (1..=config.domain)
                .map(|i| {
                    acc += (i as f64).powf(-s);
                    acc
                })
                .collect()
        }
    };
    let draw_index = |rng: &mut SplitMix| -> u64 {
        match config.dist {
            GenDistribution::Uniform => 1 + (rng.next_unit_open() * config.domain as f64) as u64,
            GenDistribution::Zipf { .. } => {
                let total = *cumulative.last().expect("non-empty domain");
                let target = rng.next_unit_open() * total;
                1 + cumulative.partition_point(|&c| c < target) as u64
            }
        }
        .min(config.domain)
    };

    let mut mass: HashMap<u64, f64> = HashMap::new();
    let mut live: Vec<u64> = Vec::new();
    let mut out = Vec::with_capacity(config.updates as usize);
    for _ in 0..config.updates {
        let delete = !live.is_empty() && rng.next_unit_open() < config.deletion_fraction;
        let (index, increment) = if delete {
            let slot = (rng.next_unit_open() * live.len() as f64) as usize;
            let index = live[slot.min(live.len() - 1)];
            let current = mass[&index];
            let removed = rng.next_unit_open() * current;
            (index, -removed)
        } else {
            (draw_index(&mut rng), -rng.next_unit_open().ln())
        };
        let entry = mass.entry(index).or_insert_with(|| {
            live.push(index);
            0.0
        });
        *entry += increment;
        out.push(StreamUpdate { index, increment });
    }
    Ok(out)
}

/// Exact F_(alpha) = sum_i A[i]^alpha by brute-force aggregation. The
/// oracle accepts the whole index range (0, 2], alpha = 1 included; the
/// estimators' exclusions are theirs, not the moment's. A final value more
/// negative than cancellation dust (1e-12 of the total update magnitude)
/// violates the non-negativity the estimators assume and is reported with
/// its index.
pub fn exact_moment(updates: &[StreamUpdate], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!(
            "moment index must lie in (0, 2], got {alpha}"
        )));
    }
    let mut signal: BTreeMap<u64, f64> = BTreeMap::new();
    let mut total_abs = 0.0;
    for u in updates {
        u.validate()?;
        *signal.entry(u.index).or_insert(0.0) += u.increment;
        total_abs += u.increment.abs();
    }
    let dust = 1e-12 * total_abs;
    let mut moment = 0.0;
    for (&index, &value) in &signal {
        if value < -dust {
            return Err(Error::domain(format!(
                "final signal is negative at index {index} ({value}); the moment \
                 requires a non-negative signal at evaluation time"
            )));
        }
        if value > dust {
            moment += value.powf(alpha);
        }
    }
    Ok(moment)
}
