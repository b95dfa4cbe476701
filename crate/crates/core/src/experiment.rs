//! Monte Carlo harnesses behind the experiment subcommands and the CSV
//! shapes they emit.
//!
//! Reproducibility contract: trial t draws from `substream(seed, t)`, so
//! neither the trial count nor the worker-thread count changes any
//! individual trial, and every table is byte-identical across runs.

use crate::bounds::{self, Side};
use crate::error::{Error, Result};
use crate::estimators::{
    cached_optimal_power, gm_beta_variance_exact, gm_estimate, gm_estimate_beta,
    gm_variance_factor, hm_estimate, hm_variance_factor, mle05_estimate, op_estimate, Method,
};
use crate::numerics::Kahan;
use crate::rng::{angle_exp_pair, substream};
use crate::stable::{Sampler, StableParams};
use rayon::prelude::*;

/// Shortest 10-significant-digit rendering: fixed point for moderate
/// exponents, scientific otherwise, trailing zeros dropped. The CSV files
/// are acceptance artifacts, so the format must be stable and diffable.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let kept = digits.trim_end_matches('0').len().max(1);
    let digits = &digits[..kept];
    let body = if !(-4..10).contains(&exp) {
        if digits.len() == 1 {
            format!("{digits}e{exp}")
        } else {
            format!("{}.{}e{exp}", &digits[..1], &digits[1..])
        }
    } else if exp >= 0 {
        let int_len = (exp + 1) as usize;
        if kept <= int_len {
            format!("{digits}{}", "0".repeat(int_len - kept))
        } else {
            format!("{}.{}", &digits[..int_len], &digits[int_len..])
        }
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    if x < 0.0 {
        format!("-{body}")
    } else {
        body
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

/// One Monte Carlo result row. Tail columns stay empty in variance runs
/// and vice versa.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub alpha: f64,
    pub estimator: String,
    pub k: u32,
    pub trials: u64,
    pub empirical_mean: f64,
    /// k * Var(estimate) / F^2, the finite-sample analogue of the
    /// asymptotic variance factor.
    pub empirical_v: f64,
    pub theoretical_v: Option<f64>,
    pub epsilon: Option<f64>,
    pub empirical_tail: Option<f64>,
    pub bound_tail: Option<f64>,
}

impl ExperimentRow {
    pub const HEADER: &'static str = "alpha,estimator,k,trials,empirical_mean,empirical_v,\
                                      theoretical_v,epsilon,empirical_tail,bound_tail";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_g(self.alpha),
            self.estimator,
            self.k,
            self.trials,
            fmt_g(self.empirical_mean),
            fmt_g(self.empirical_v),
            fmt_opt(self.theoretical_v),
            fmt_opt(self.epsilon),
            fmt_opt(self.empirical_tail),
            fmt_opt(self.bound_tail),
        )
    }
}

pub fn experiment_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(ExperimentRow::HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

fn mean_and_scaled_variance(values: &[f64], k: u32) -> (f64, f64) {
    let n = values.len() as f64;
    let mut total = Kahan::new(0.0);
    for &v in values {
        total.add(v);
    }
    let mean = total.sum() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut squares = Kahan::new(0.0);
    for &v in values {
        let d = v - mean;
        squares.add(d * d);
    }
    (mean, k as f64 * squares.sum() / (n - 1.0))
}

fn validated_grid(values: &[f64], what: &str) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::domain(format!("empty {what} grid")));
    }
    let mut grid = values.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    Ok(())
}

fn check_k(k: u32) -> Result<()> {
    if k < 2 {
        return Err(Error::domain(format!("need at least 2 projections, got {k}")));
    }
    Ok(())
}

/// Draw the k projections of trial t under each sampler; all samplers
/// share the same angle/exponential pairs (common random numbers).
fn draw_trial(seed: u64, t: u64, k: u32, samplers: &[&Sampler]) -> Vec<Vec<f64>> {
    let s = substream(seed, t);
    let mut cols: Vec<Vec<f64>> = samplers
        .iter()
        .map(|_| Vec::with_capacity(k as usize))
        .collect();
    for j in 0..k as u64 {
        let (u, w) = angle_exp_pair(s, j, 0);
        for (col, sampler) in cols.iter_mut().zip(samplers) {
            col.push(sampler.sample(u, w));
        }
    }
    cols
}

/// Empirical vs theoretical variance factors at F = 1, every applicable
/// estimator per alpha, plus the symmetric-projection reference row that
/// the skewed construction is competing against. A beta adds the
/// general-skewness diagnostic row, sampled and estimated at that beta
/// with its exact finite-k variance as the theory column.
pub fn variance_experiment(
    alphas: &[f64],
    beta: Option<f64>,
    k: u32,
    trials: u64,
    seed: u64,
) -> Result<Vec<ExperimentRow>> {
    check_trials(trials)?;
    check_k(k)?;
    let mut rows = Vec::new();
    for alpha in validated_grid(alphas, "alpha")? {
        variance_rows(alpha, beta, k, trials, seed, &mut rows)?;
    }
    Ok(rows)
}

fn variance_rows(
    alpha: f64,
    beta: Option<f64>,
    k: u32,
    trials: u64,
    seed: u64,
    rows: &mut Vec<ExperimentRow>,
) -> Result<()> {
    let skewed = Sampler::new(&StableParams::skewed(alpha, 1.0)?);
    let symmetric = Sampler::new(&StableParams::new(alpha, 0.0, 1.0)?);
    let beta_sampler = match beta {
        Some(b) => Some(Sampler::new(&StableParams::new(alpha, b, 1.0)?)),
        None => None,
    };
    let with_hm = alpha < 1.0;
    let with_mle = (alpha - 0.5).abs() <= 1e-12;
    let power = cached_optimal_power(alpha)?;

    let mut samplers = vec![&skewed, &symmetric];
    if let Some(bs) = beta_sampler.as_ref() {
        samplers.push(bs);
    }
    let trial_outputs: Vec<Result<[f64; 6]>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cols = draw_trial(seed, t, k, &samplers);
            let x = &cols[0];
            Ok([
                gm_estimate(alpha, x)?.estimate,
                match beta {
                    Some(b) => gm_estimate_beta(alpha, b, &cols[2])?.estimate,
                    None => 0.0,
                },
                gm_estimate_beta(alpha, 0.0, &cols[1])?.estimate,
                if with_hm {
                    hm_estimate(alpha, x, true)?.estimate
                } else {
                    0.0
                },
                if with_mle {
                    mle05_estimate(x, true)?.estimate
                } else {
                    0.0
                },
                op_estimate(&power, x)?.estimate,
            ])
        })
        .collect();
    let trial_outputs: Vec<[f64; 6]> = trial_outputs.into_iter().collect::<Result<_>>()?;

    let column = |slot: usize| -> Vec<f64> { trial_outputs.iter().map(|o| o[slot]).collect() };
    let mut push = |estimator: &str, slot: usize, theoretical: f64| {
        let (empirical_mean, empirical_v) = mean_and_scaled_variance(&column(slot), k);
        rows.push(ExperimentRow {
            alpha,
            estimator: estimator.into(),
            k,
            trials,
            empirical_mean,
            empirical_v,
            theoretical_v: Some(theoretical),
            epsilon: None,
            empirical_tail: None,
            bound_tail: None,
        });
    };
    push("gm", 0, gm_variance_factor(alpha)?);
    if let Some(b) = beta {
        push("gm-beta", 1, gm_beta_variance_exact(alpha, b, k as usize)?);
    }
    push("gm-sym", 2, bounds::symmetric_gm_reference_variance(alpha)?);
    if with_hm {
        push("hm", 3, hm_variance_factor(alpha)?);
    }
    if with_mle {
        push("mle05", 4, 0.5);
    }
    push("op", 5, power.g_min);
    Ok(())
}

/// Empirical two-sided tail frequencies at F = 1 against the solved
/// Chernoff bounds exp(-k * rate). The bounds cover the uncorrected
/// estimator forms, so that is what runs here; left rows exist only for
/// eps < 1, and the geometric-means left bound defaults to the honest
/// finite normalizer at the k actually simulated.
pub fn tails_experiment(
    alpha: f64,
    method: Method,
    epsilons: &[f64],
    k: u32,
    trials: u64,
    seed: u64,
    k0: Option<u32>,
) -> Result<Vec<ExperimentRow>> {
    check_trials(trials)?;
    check_k(k)?;
    match method {
        Method::Gm | Method::Hm | Method::Mle05 => {}
        Method::Op | Method::GmBeta => {
            return Err(Error::Config(format!(
                "no exponential tail bound is available for `{method}`"
            )));
        }
    }
    let epsilons = validated_grid(epsilons, "epsilon")?;
    for &eps in &epsilons {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::domain(format!("epsilon must be positive, got {eps}")));
        }
    }
    let skewed = Sampler::new(&StableParams::skewed(alpha, 1.0)?);

    let estimates: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cols = draw_trial(seed, t, k, &[&skewed]);
            let x = &cols[0];
            Ok(match method {
                Method::Gm => gm_estimate(alpha, x)?.estimate,
                Method::Hm => hm_estimate(alpha, x, false)?.estimate,
                Method::Mle05 => mle05_estimate(x, false)?.estimate,
                _ => unreachable!("rejected above"),
            })
        })
        .collect();
    let estimates: Vec<f64> = estimates.into_iter().collect::<Result<_>>()?;
    let (empirical_mean, empirical_v) = mean_and_scaled_variance(&estimates, k);

    let mut rows = Vec::new();
    let mut push = |side: Side, eps: f64, rate: f64| {
        let hit = |e: f64| match side {
            Side::Right => e >= 1.0 + eps,
            Side::Left => e <= 1.0 - eps,
        };
        let count = estimates.iter().filter(|&&e| hit(e)).count();
        rows.push(ExperimentRow {
            alpha,
            estimator: format!("{method}-{side}"),
            k,
            trials,
            empirical_mean,
            empirical_v,
            theoretical_v: None,
            epsilon: Some(eps),
            empirical_tail: Some(count as f64 / trials as f64),
            bound_tail: Some((-(k as f64) * rate).exp()),
        });
    };
    for &eps in &epsilons {
        if eps >= 1.0 {
            continue;
        }
        let rate = match method {
            Method::Gm => bounds::gm_left_rate(alpha, eps, Some(k0.unwrap_or(k)))?.rate,
            Method::Hm => bounds::hm_rate(alpha, eps, Side::Left)?.rate,
            Method::Mle05 => bounds::mle05_rate(eps, Side::Left)?.rate,
            _ => unreachable!(),
        };
        push(Side::Left, eps, rate);
    }
    for &eps in &epsilons {
        let rate = match method {
            Method::Gm => bounds::gm_right_rate(alpha, eps)?.rate,
            Method::Hm => bounds::hm_rate(alpha, eps, Side::Right)?.rate,
            Method::Mle05 => bounds::mle05_rate(eps, Side::Right)?.rate,
            _ => unreachable!(),
        };
        push(Side::Right, eps, rate);
    }
    Ok(rows)
}

/// One tabulated sample-size constant G = eps^2 / rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub estimator: Method,
    pub alpha: f64,
    /// Distance from alpha = 1; populated in delta mode only.
    pub delta: Option<f64>,
    pub epsilon: f64,
    pub g_right: f64,
    pub g_left: Option<f64>,
    pub near_one_approx: Option<f64>,
    pub k: Option<u64>,
}

pub fn bounds_header(with_k: bool) -> String {
    let mut header = String::from("estimator,alpha,delta,epsilon,g_right,g_left,near_one_approx");
    if with_k {
        header.push_str(",k");
    }
    header
}

impl BoundsRow {
    pub fn to_csv(&self, with_k: bool) -> String {
        let mut line = format!(
            "{},{},{},{},{},{},{}",
            self.estimator,
            fmt_g(self.alpha),
            fmt_opt(self.delta),
            fmt_g(self.epsilon),
            fmt_g(self.g_right),
            fmt_opt(self.g_left),
            fmt_opt(self.near_one_approx),
        );
        if with_k {
            line.push(',');
            if let Some(k) = self.k {
                line.push_str(&k.to_string());
            }
        }
        line
    }
}

pub fn bounds_csv(rows: &[BoundsRow], with_k: bool) -> String {
    let mut out = bounds_header(with_k);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv(with_k));
        out.push('\n');
    }
    out
}

fn right_g(method: Method, alpha: f64, eps: f64) -> Result<f64> {
    Ok(match method {
        Method::Gm => bounds::gm_right_rate(alpha, eps)?.g_constant(),
        Method::Hm => bounds::hm_rate(alpha, eps, Side::Right)?.g_constant(),
        Method::Mle05 => {
            require_half(alpha)?;
            bounds::mle05_rate(eps, Side::Right)?.g_constant()
        }
        Method::Op | Method::GmBeta => {
            return Err(Error::Config(format!(
                "no exponential tail bound is available for `{method}`"
            )));
        }
    })
}

fn require_half(alpha: f64) -> Result<()> {
    if (alpha - 0.5).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "the closed-form estimator is defined at alpha = 1/2, got {alpha}"
        )));
    }
    Ok(())
}

/// G constants over an alpha grid. The left column is filled for eps < 1;
/// the geometric-means left bound uses the asymptotic normalizer unless a
/// finite k0 is supplied. With a confidence delta_prob, a sample-size
/// column from the two-sided recipe is appended.
pub fn bounds_table_alpha(
    alphas: &[f64],
    epsilons: &[f64],
    method: Method,
    delta_prob: Option<f64>,
    k0: Option<u32>,
) -> Result<Vec<BoundsRow>> {
    let alphas = validated_grid(alphas, "alpha")?;
    let epsilons = validated_grid(epsilons, "epsilon")?;
    let mut rows = Vec::new();
    for &alpha in &alphas {
        for &eps in &epsilons {
            let g_right = right_g(method, alpha, eps)?;
            let g_left = if eps < 1.0 {
                Some(match method {
                    Method::Gm => bounds::gm_left_rate(alpha, eps, k0)?.g_constant(),
                    Method::Hm => bounds::hm_rate(alpha, eps, Side::Left)?.g_constant(),
                    Method::Mle05 => bounds::mle05_rate(eps, Side::Left)?.g_constant(),
                    _ => unreachable!("rejected by right_g"),
                })
            } else {
                None
            };
            let k = match delta_prob {
                Some(d) => Some(bounds::sample_complexity(alpha, eps, d, method)?.k),
                None => None,
            };
            rows.push(BoundsRow {
                estimator: method,
                alpha,
                delta: None,
                epsilon: eps,
                g_right,
                g_left,
                near_one_approx: None,
                k,
            });
        }
    }
    Ok(rows)
}

/// Near alpha = 1: right-tail G at alpha = 1 -/+ delta beside its
/// square-root approximation. The left bound blows up in this regime and
/// the approximation is a right-tail statement, so the table is
/// right-only; the optional k column is the right-tail sample size
/// ceil(ln(2/delta_prob) / rate).
pub fn bounds_table_delta(
    deltas: &[f64],
    epsilons: &[f64],
    method: Method,
    delta_prob: Option<f64>,
) -> Result<Vec<BoundsRow>> {
    if method != Method::Gm {
        return Err(Error::Config(format!(
            "the near-one table covers the geometric-means bound, not `{method}`"
        )));
    }
    let deltas = validated_grid(deltas, "delta")?;
    let epsilons = validated_grid(epsilons, "epsilon")?;
    for &d in &deltas {
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::domain(format!(
                "alpha offset must lie in (0, 1), got {d}"
            )));
        }
    }
    if let Some(p) = delta_prob {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!(
                "confidence parameter must lie in (0, 1), got {p}"
            )));
        }
    }
    let mut rows = Vec::new();
    for &d in &deltas {
        for alpha in [1.0 - d, 1.0 + d] {
            for &eps in &epsilons {
                let spec = bounds::gm_right_rate(alpha, eps)?;
                let near_one = bounds::near_one_gm_approximation(d, eps)?;
                let k = delta_prob.map(|p| {
                    (((2.0 / p).ln() / spec.rate).ceil() as u64).max(2)
                });
                rows.push(BoundsRow {
                    estimator: method,
                    alpha,
                    delta: Some(d),
                    epsilon: eps,
                    g_right: spec.g_constant(),
                    g_left: None,
                    near_one_approx: Some(near_one),
                    k,
                });
            }
        }
    }
    Ok(rows)
}
