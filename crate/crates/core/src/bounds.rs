//! Exponential tail bounds and sample-size constants.
//!
//! Each bound has the shape Pr(error) <= exp(-k rate(eps)), with the rate
//! obtained by optimizing an explicit exponent over one free parameter. The
//! solvers return both the rate and the optimizing inner constant so callers
//! can cross-check stationarity. The induced sample size for a two-sided
//! (1 +/- eps) guarantee at confidence 1 - delta is
//! k >= G ln(2/delta) / eps^2 with G = eps^2 / min(rate_right, rate_left).

use crate::error::{Error, Result};
use crate::estimators::{ln_gm_normalizer_core, Method};
use crate::numerics::{
    cos_pi, digamma, find_root, ln_gamma, sin_pi, Kahan, RootBracket, EULER_GAMMA,
};
use crate::stable::{kappa, validate_alpha};
use std::f64::consts::PI;
use std::fmt;

/// Which side of the relative-error event a bound covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Overestimation: F_hat >= (1 + eps) F.
    Right,
    /// Underestimation: F_hat <= (1 - eps) F.
    Left,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Right => "right",
            Side::Left => "left",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A solved tail bound: Pr(side event at eps) <= exp(-k * rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundSpec {
    pub alpha: f64,
    pub epsilon: f64,
    pub side: Side,
    pub estimator: Method,
    /// Optimized exponent per projection; positive for every eps > 0.
    pub rate: f64,
    /// The optimizing free parameter (a moment order or a tilt).
    pub inner_constant: f64,
    /// Left geometric-means bounds only: the finite sketch size the
    /// normalizer was bounded at. None means the k -> infinity form.
    pub k0: Option<u32>,
}

impl TailBoundSpec {
    /// Sample-size constant G: k >= G ln(2/delta) / eps^2 drives this
    /// side's failure probability below delta/2.
    pub fn g_constant(&self) -> f64 {
        self.epsilon * self.epsilon / self.rate
    }
}

/// Sample size sufficient for a two-sided (1 +/- eps) guarantee with
/// probability at least 1 - delta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityResult {
    pub k: u64,
    /// The constant in k = G ln(2/delta) / eps^2, the worse of the two sides.
    pub g: f64,
    pub epsilon: f64,
    pub delta: f64,
}

fn validate_epsilon_right(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!(
            "relative error must be positive and finite, got {epsilon}"
        )));
    }
    Ok(())
}

fn validate_epsilon_left(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!(
            "a left bound needs a relative error in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// tan(pi x) via the exactly reduced sin/cos pair.
fn tan_pi(x: f64) -> f64 {
    sin_pi(x) / cos_pi(x)
}

/// Roots of `slope` on grid-adjacent sign changes, keeping the one whose
/// `value` is largest. The grid mixes a geometric low end (optima collapse
/// toward 0 as eps does) with a uniform sweep of the rest of the interval.
fn best_stationary_point<S, V>(slope: S, value: V, lo: f64, hi: f64) -> Result<(f64, f64)>
where
    S: Fn(f64) -> Result<f64>,
    V: Fn(f64) -> Result<f64>,
{
    let mut grid = Vec::with_capacity(600);
    let mut c = lo.max(1e-12);
    while c < hi.min(1e-2) {
        grid.push(c);
        c *= 2.0;
    }
    let lin_lo = grid.last().copied().unwrap_or(lo);
    let n = 512;
    for i in 0..=n {
        grid.push(lin_lo + (hi - lin_lo) * i as f64 / n as f64);
    }

    let mut best: Option<(f64, f64)> = None;
    let mut prev: Option<(f64, f64)> = None;
    for &x in &grid {
        let fx = slope(x)?;
        if let Some((px, pfx)) = prev {
            if pfx.is_finite() && fx.is_finite() && pfx.signum() != fx.signum() {
                let bracket = RootBracket::new(px, x, 1e-13)?;
                let root = find_root(|t| slope(t).unwrap_or(f64::NAN), &bracket)?;
                let v = value(root)?;
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((root, v));
                }
            }
        }
        prev = Some((x, fx));
    }
    best.ok_or_else(|| {
        Error::Numeric(format!(
            "no stationary point of the tail exponent in ({lo}, {hi})"
        ))
    })
}

fn gm_right_rate_value(alpha: f64, kap: f64, epsilon: f64, c: f64) -> Result<f64> {
    Ok(c * (1.0 + epsilon).ln() - c * EULER_GAMMA * (alpha - 1.0)
        - (cos_pi(kap * c / 2.0).ln()
            + (2.0 / PI).ln()
            + ln_gamma(alpha * c)?
            + ln_gamma(1.0 - c)?
            + sin_pi(alpha * c / 2.0).ln()))
}

fn gm_right_slope(alpha: f64, kap: f64, epsilon: f64, c: f64) -> Result<f64> {
    Ok((1.0 + epsilon).ln() - EULER_GAMMA * (alpha - 1.0)
        + (kap * PI / 2.0) * tan_pi(kap * c / 2.0)
        - alpha * digamma(alpha * c)?
        + digamma(1.0 - c)?
        - (alpha * PI / 2.0) * cos_pi(alpha * c / 2.0) / sin_pi(alpha * c / 2.0))
}

/// Overestimation bound for the geometric means estimator, valid for every
/// k >= 2. The moment order C* solves a stationarity condition on (0, 1);
/// the exponent vanishes at both ends and the slope at 0 is ln(1 + eps), so
/// an interior maximum always exists.
pub fn gm_right_rate(alpha: f64, epsilon: f64) -> Result<TailBoundSpec> {
    validate_alpha(alpha)?;
    validate_epsilon_right(epsilon)?;
    let kap = kappa(alpha)?;
    let (c_star, rate) = best_stationary_point(
        |c| gm_right_slope(alpha, kap, epsilon, c),
        |c| gm_right_rate_value(alpha, kap, epsilon, c),
        1e-12,
        1.0 - 1e-6,
    )?;
    Ok(TailBoundSpec {
        alpha,
        epsilon,
        side: Side::Right,
        estimator: Method::Gm,
        rate,
        inner_constant: c_star,
        k0: None,
    })
}

fn gm_left_ln_b(alpha: f64, k0: Option<u32>) -> Result<f64> {
    match k0 {
        Some(k0) => ln_gm_normalizer_core(alpha, k0 as usize),
        None => Ok(-EULER_GAMMA * (alpha - 1.0)),
    }
}

fn gm_left_rate_value(alpha: f64, epsilon: f64, ln_b: f64, c: f64) -> Result<f64> {
    let mut ln_inner = ln_gamma(1.0 + c)? - ln_gamma(1.0 + alpha * c)?;
    if alpha > 1.0 {
        // Below 1 the two cosine factors cancel exactly; evaluating them
        // anyway would plant spurious poles at odd integer alpha C.
        ln_inner += cos_pi((2.0 - alpha) * c / 2.0).ln() - cos_pi(alpha * c / 2.0).ln();
    }
    Ok(-c * (1.0 - epsilon).ln() - ln_inner - c * ln_b)
}

fn gm_left_slope(alpha: f64, epsilon: f64, ln_b: f64, c: f64) -> Result<f64> {
    let mut slope = -(1.0 - epsilon).ln() - ln_b - digamma(1.0 + c)?
        + alpha * digamma(1.0 + alpha * c)?;
    if alpha > 1.0 {
        let kap = 2.0 - alpha;
        slope += (kap * PI / 2.0) * tan_pi(kap * c / 2.0)
            - (alpha * PI / 2.0) * tan_pi(alpha * c / 2.0);
    }
    Ok(slope)
}

/// Underestimation bound for the geometric means estimator. The negative
/// moment order is unconstrained for alpha < 1 and the optimum grows like
/// exp(const / (1 - alpha)) as alpha -> 1, so the search is capped at 1e200
/// and reports a numeric error past it rather than a fabricated rate.
///
/// `k0`: the bound holds for every sketch with k >= k0 because the
/// normalizer term it uses decreases in k; None takes the k -> infinity
/// value, giving the asymptotic constant quoted alongside the estimator
/// variances. Small k0 can make the exponent slope negative at 0, in which
/// case no valid bound exists at this eps and the solver says so.
pub fn gm_left_rate(alpha: f64, epsilon: f64, k0: Option<u32>) -> Result<TailBoundSpec> {
    validate_alpha(alpha)?;
    validate_epsilon_left(epsilon)?;
    if let Some(k0) = k0 {
        if k0 < 2 {
            return Err(Error::domain(format!("need k0 >= 2, got {k0}")));
        }
    }
    let ln_b = gm_left_ln_b(alpha, k0)?;
    let slope = |c: f64| gm_left_slope(alpha, epsilon, ln_b, c);
    let value = |c: f64| gm_left_rate_value(alpha, epsilon, ln_b, c);

    let (c_star, rate) = if alpha > 1.0 {
        // tan(pi alpha C / 2) blows up at C = 1/alpha, pinning the optimum
        // inside (0, 1/alpha).
        best_stationary_point(slope, value, 1e-12, (1.0 - 1e-6) / alpha)?
    } else {
        let mut lo = 1e-12;
        let mut flo = slope(lo)?;
        if flo <= 0.0 {
            return Err(Error::Numeric(format!(
                "left tail exponent has no positive region at eps = {epsilon} \
                 (k0 too small for this accuracy)"
            )));
        }
        let mut hi = lo;
        loop {
            hi *= 2.0;
            if hi > 1e200 {
                return Err(Error::Numeric(format!(
                    "left tail moment order exceeds floating range at alpha = {alpha}"
                )));
            }
            let fhi = slope(hi)?;
            if fhi.signum() != flo.signum() {
                break;
            }
            lo = hi;
            flo = fhi;
        }
        let bracket = RootBracket::new(lo, hi, 1e-13)?;
        let root = find_root(|t| slope(t).unwrap_or(f64::NAN), &bracket)?;
        (root, value(root)?)
    };
    Ok(TailBoundSpec {
        alpha,
        epsilon,
        side: Side::Left,
        estimator: Method::Gm,
        rate,
        inner_constant: c_star,
        k0,
    })
}

/// ln Phi(x) and Phi'(x) / Phi(x) for the harmonic-means moment series
/// Phi(x) = sum_m Gamma^m(1 + alpha) x^m / Gamma(1 + m alpha).
///
/// Terms are built by a log-Gamma recurrence and accumulated with
/// compensation; the sum is rescaled when it threatens overflow (the left
/// tilt can be large). Truncation stops once a term drops below 1e-15
/// relative to the running sum, with a hard cap of 500 terms.
fn hm_series(alpha: f64, x: f64) -> Result<(f64, f64)> {
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    let lg_step = ln_gamma(1.0 + alpha)?;
    let mut phi = Kahan::new(1.0);
    let mut dphi = Kahan::new(0.0);
    let mut term = 1.0f64;
    let mut lg_prev = 0.0f64;
    let mut ln_offset = 0.0f64;
    for m in 1..=500u32 {
        let mf = f64::from(m);
        let lg_cur = ln_gamma(1.0 + mf * alpha)?;
        term *= x * (lg_step + lg_prev - lg_cur).exp();
        lg_prev = lg_cur;
        phi.add(term);
        dphi.add(mf * term / x);
        let s = phi.sum();
        if !s.is_finite() {
            return Err(Error::Numeric(format!(
                "harmonic-means moment series overflowed at x = {x}"
            )));
        }
        if term.abs() <= 1e-15 * s.abs().max(1.0) {
            if s <= 0.0 {
                return Err(Error::Numeric(format!(
                    "harmonic-means moment series lost all precision at x = {x}"
                )));
            }
            return Ok((s.ln() + ln_offset, dphi.sum() / s));
        }
        if s.abs() > 1e270 {
            phi.scale(1e-270);
            dphi.scale(1e-270);
            term *= 1e-270;
            ln_offset += 270.0 * std::f64::consts::LN_10;
        }
    }
    Err(Error::Numeric(format!(
        "harmonic-means moment series did not converge within 500 terms at x = {x}"
    )))
}

/// Expand [lo, 2 lo, 4 lo, ...] until f changes sign, then solve on the
/// final doubling interval.
fn doubling_root<F: Fn(f64) -> Result<f64>>(f: F, start: f64, cap: f64) -> Result<f64> {
    let mut lo = start;
    let mut flo = f(lo)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    let mut hi = lo;
    loop {
        hi *= 2.0;
        if hi > cap {
            return Err(Error::Numeric(format!(
                "no sign change found below {cap} while solving a tail tilt"
            )));
        }
        let fhi = f(hi)?;
        if fhi.signum() != flo.signum() || fhi == 0.0 {
            break;
        }
        lo = hi;
        flo = fhi;
    }
    let bracket = RootBracket::new(lo, hi, 1e-13)?;
    find_root(|t| f(t).unwrap_or(f64::NAN), &bracket)
}

/// Tail bound for the (uncorrected) harmonic means estimator, alpha < 1.
/// The optimal exponential tilt solves Phi'(-t)/Phi(-t) = 1/(1 + eps) on
/// the right and Phi'(t)/Phi(t) = 1/(1 - eps) on the left; both ratios are
/// monotone, so a doubling search brackets the root.
pub fn hm_rate(alpha: f64, epsilon: f64, side: Side) -> Result<TailBoundSpec> {
    validate_alpha(alpha)?;
    if alpha >= 1.0 {
        return Err(Error::domain(format!(
            "harmonic means requires an index below 1, got {alpha}"
        )));
    }
    let (t_star, rate) = match side {
        Side::Right => {
            validate_epsilon_right(epsilon)?;
            let target = 1.0 / (1.0 + epsilon);
            let t = doubling_root(|t| Ok(hm_series(alpha, -t)?.1 - target), 1e-8, 1e8)?;
            let (ln_phi, _) = hm_series(alpha, -t)?;
            (t, -ln_phi - t * target)
        }
        Side::Left => {
            validate_epsilon_left(epsilon)?;
            let target = 1.0 / (1.0 - epsilon);
            let t = doubling_root(|t| Ok(hm_series(alpha, t)?.1 - target), 1e-8, 1e8)?;
            let (ln_phi, _) = hm_series(alpha, t)?;
            (t, -ln_phi + t * target)
        }
    };
    Ok(TailBoundSpec {
        alpha,
        epsilon,
        side,
        estimator: Method::Hm,
        rate,
        inner_constant: t_star,
        k0: None,
    })
}

/// Tail bound for the (uncorrected) alpha = 1/2 closed-form estimator.
/// Both sides reduce to chi-square deviation bounds and are closed form:
/// rate = ln(1 + eps) - 1/2 + 1/(2 (1 + eps)^2) on the right and the
/// (1 - eps) mirror on the left.
pub fn mle05_rate(epsilon: f64, side: Side) -> Result<TailBoundSpec> {
    let (rate, t_star) = match side {
        Side::Right => {
            validate_epsilon_right(epsilon)?;
            let r = 1.0 + epsilon;
            (r.ln() - 0.5 + 0.5 / (r * r), (r * r - 1.0) / 2.0)
        }
        Side::Left => {
            validate_epsilon_left(epsilon)?;
            let r = 1.0 - epsilon;
            (r.ln() - 0.5 + 0.5 / (r * r), (1.0 - r * r) / 2.0)
        }
    };
    Ok(TailBoundSpec {
        alpha: 0.5,
        epsilon,
        side,
        estimator: Method::Mle05,
        rate,
        inner_constant: t_star,
        k0: None,
    })
}

/// Back-substitute a solved bound into its first-order optimality
/// condition and return the absolute residual. A healthy solve sits at
/// ~1e-12; consumers of tabulated bounds can use this as a self-check.
pub fn rate_residual(spec: &TailBoundSpec) -> Result<f64> {
    let TailBoundSpec {
        alpha,
        epsilon,
        side,
        estimator,
        inner_constant: c,
        k0,
        ..
    } = *spec;
    Ok(match (estimator, side) {
        (Method::Gm, Side::Right) => {
            let kap = kappa(alpha)?;
            gm_right_slope(alpha, kap, epsilon, c)?.abs()
        }
        (Method::Gm, Side::Left) => {
            let ln_b = gm_left_ln_b(alpha, k0)?;
            gm_left_slope(alpha, epsilon, ln_b, c)?.abs()
        }
        (Method::Hm, Side::Right) => (hm_series(alpha, -c)?.1 - 1.0 / (1.0 + epsilon)).abs(),
        (Method::Hm, Side::Left) => (hm_series(alpha, c)?.1 - 1.0 / (1.0 - epsilon)).abs(),
        (Method::Mle05, Side::Right) => {
            let r = 1.0 + epsilon;
            (1.0 / (1.0 + 2.0 * c) - 1.0 / (r * r)).abs()
        }
        (Method::Mle05, Side::Left) => {
            let r = 1.0 - epsilon;
            (1.0 / (1.0 - 2.0 * c) - 1.0 / (r * r)).abs()
        }
        (other, _) => {
            return Err(Error::Config(format!(
                "no exponential tail bound is available for `{other}`"
            )));
        }
    })
}

/// Sample size sufficient for Pr(|F_hat - F| > eps F) <= delta, using the
/// worse of the two one-sided exponents. Only estimators with exponential
/// bounds qualify; eps >= 1 drops the left side (underestimation by a
/// factor below zero is impossible).
pub fn sample_complexity(
    alpha: f64,
    epsilon: f64,
    delta: f64,
    method: Method,
) -> Result<ComplexityResult> {
    validate_epsilon_right(epsilon)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!(
            "confidence parameter must lie in (0, 1), got {delta}"
        )));
    }
    let mut min_rate = f64::INFINITY;
    match method {
        Method::Gm => {
            min_rate = min_rate.min(gm_right_rate(alpha, epsilon)?.rate);
            if epsilon < 1.0 {
                min_rate = min_rate.min(gm_left_rate(alpha, epsilon, None)?.rate);
            }
        }
        Method::Hm => {
            min_rate = min_rate.min(hm_rate(alpha, epsilon, Side::Right)?.rate);
            if epsilon < 1.0 {
                min_rate = min_rate.min(hm_rate(alpha, epsilon, Side::Left)?.rate);
            }
        }
        Method::Mle05 => {
            if (alpha - 0.5).abs() > 1e-12 {
                return Err(Error::domain(format!(
                    "the closed-form estimator is defined at alpha = 1/2, got {alpha}"
                )));
            }
            min_rate = min_rate.min(mle05_rate(epsilon, Side::Right)?.rate);
            if epsilon < 1.0 {
                min_rate = min_rate.min(mle05_rate(epsilon, Side::Left)?.rate);
            }
        }
        Method::Op | Method::GmBeta => {
            return Err(Error::Config(format!(
                "no exponential tail bound is available for `{method}`"
            )));
        }
    }
    let k = ((2.0 / delta).ln() / min_rate).ceil().max(2.0);
    Ok(ComplexityResult {
        k: k as u64,
        g: epsilon * epsilon / min_rate,
        epsilon,
        delta,
    })
}

/// Asymptotic variance factor of the geometric means estimator built from
/// symmetric projections, (alpha^2 + 2) pi^2 / 12. Defined for the whole
/// index range including alpha = 1; the comparison against the skewed
/// factor is what motivates skewing in the first place.
pub fn symmetric_gm_reference_variance(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!(
            "stability index must lie in (0, 2], got {alpha}"
        )));
    }
    Ok((alpha * alpha + 2.0) * PI * PI / 12.0)
}

/// The k-dependent part of the geometric means normalizer,
/// [k-fold product of fractional-moment factors] as a plain value. It
/// decreases monotonically in k toward exp(-gamma_e (alpha - 1)), and its
/// distance from that limit measures how far a finite sketch sits from the
/// asymptotic regime.
pub fn gm_normalizer_limit(alpha: f64, k: usize) -> Result<f64> {
    validate_alpha(alpha)?;
    Ok(ln_gm_normalizer_core(alpha, k)?.exp())
}

/// Closed-form approximation to the right-side sample-size constant of the
/// geometric means estimator at alpha = 1 +/- delta:
/// G ~ eps^2 / (ln(1 + eps) - 2 sqrt(delta ln(1 + eps))).
/// Valid while the perturbation is small enough that the denominator stays
/// positive.
pub fn near_one_gm_approximation(delta: f64, epsilon: f64) -> Result<f64> {
    validate_epsilon_right(epsilon)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!(
            "index perturbation must be positive, got {delta}"
        )));
    }
    let l = (1.0 + epsilon).ln();
    let denom = l - 2.0 * (delta * l).sqrt();
    if denom <= 0.0 {
        return Err(Error::domain(format!(
            "index perturbation {delta} is too large for the near-one approximation at eps = {epsilon}"
        )));
    }
    Ok(epsilon * epsilon / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::gm_variance_factor;
    use crate::rng::angle_exp_pair;
    use crate::stable::{Sampler, StableParams};
    use approx::assert_relative_eq;

    #[test]
    fn side_names() {
        assert_eq!(Side::Right.to_string(), "right");
        assert_eq!(Side::Left.to_string(), "left");
    }

    #[test]
    fn closed_form_rates_frozen_values() {
        // Both closed forms recomputed by hand at eps = 0.1.
        let r = mle05_rate(0.1, Side::Right).unwrap();
        assert_relative_eq!(r.rate, 0.008533320300192661, max_relative = 1e-14);
        assert_relative_eq!(r.inner_constant, 0.105, max_relative = 1e-12);
        let l = mle05_rate(0.1, Side::Left).unwrap();
        assert_relative_eq!(l.rate, 0.011923434959457608, max_relative = 1e-13);
        assert_relative_eq!(l.inner_constant, 0.095, max_relative = 1e-12);
        assert!(mle05_rate(1.0, Side::Left).is_err());
        assert!(mle05_rate(-0.1, Side::Right).is_err());
        // The left event is the rarer one for this estimator.
        assert!(l.rate > r.rate);
    }

    #[test]
    fn gm_right_stationary_and_positive() {
        for &alpha in &[0.5, 0.75, 1.25, 1.5, 2.0] {
            for &eps in &[0.1, 0.5, 1.0, 3.0] {
                let b = gm_right_rate(alpha, eps).unwrap();
                assert!(b.rate > 0.0, "alpha {alpha} eps {eps}: rate {}", b.rate);
                assert!(b.inner_constant > 0.0 && b.inner_constant < 1.0);
                let kap = kappa(alpha).unwrap();
                let resid = gm_right_slope(alpha, kap, eps, b.inner_constant).unwrap();
                assert!(
                    resid.abs() <= 1e-9,
                    "alpha {alpha} eps {eps}: residual {resid}"
                );
                assert_relative_eq!(
                    gm_right_rate_value(alpha, kap, eps, b.inner_constant).unwrap(),
                    b.rate,
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn gm_right_tiny_eps_stays_positive() {
        // The optimal order collapses toward 0 with eps; the geometric part
        // of the scan grid must still lock onto it.
        let b = gm_right_rate(0.5, 1e-6).unwrap();
        assert!(b.rate > 0.0 && b.rate < 1e-9);
        assert!(b.inner_constant < 1e-4);
    }

    #[test]
    fn gm_left_stationary_and_positive() {
        for &alpha in &[0.5, 0.75, 1.25, 1.5] {
            for &eps in &[0.1, 0.5, 0.9] {
                for &k0 in &[None, Some(1000u32)] {
                    let b = gm_left_rate(alpha, eps, k0).unwrap();
                    assert!(
                        b.rate > 0.0,
                        "alpha {alpha} eps {eps} k0 {k0:?}: rate {}",
                        b.rate
                    );
                    let ln_b = gm_left_ln_b(alpha, k0).unwrap();
                    let resid = gm_left_slope(alpha, eps, ln_b, b.inner_constant).unwrap();
                    assert!(
                        resid.abs() <= 1e-9,
                        "alpha {alpha} eps {eps} k0 {k0:?}: residual {resid}"
                    );
                }
            }
        }
    }

    #[test]
    fn gm_left_finite_k0_tracks_asymptotic() {
        let asym = gm_left_rate(0.5, 0.3, None).unwrap().rate;
        let big = gm_left_rate(0.5, 0.3, Some(1_000_000)).unwrap().rate;
        assert_relative_eq!(asym, big, max_relative = 1e-4);
        // Finite k0 can only weaken the bound.
        let small = gm_left_rate(0.5, 0.3, Some(50)).unwrap().rate;
        assert!(small < asym);
    }

    #[test]
    fn gm_left_rejects_hopeless_requests() {
        // k0 = 2 pushes the slope at 0 negative for small eps: no exponent
        // certifies the bound and the solver must say so.
        assert!(gm_left_rate(0.5, 0.1, Some(2)).is_err());
        // Close to alpha = 1 the optimal order overflows f64.
        assert!(gm_left_rate(0.9999, 0.1, None).is_err());
        assert!(gm_left_rate(0.5, 0.1, Some(1)).is_err());
        assert!(gm_left_rate(0.5, 1.0, None).is_err());
    }

    #[test]
    fn gm_rates_shrink_with_eps() {
        let mut prev = f64::INFINITY;
        for &eps in &[0.9, 0.5, 0.3, 0.1] {
            let r = gm_right_rate(0.75, eps).unwrap().rate;
            assert!(r < prev);
            prev = r;
        }
        let r1 = gm_left_rate(0.75, 0.5, None).unwrap().rate;
        let r2 = gm_left_rate(0.75, 0.2, None).unwrap().rate;
        assert!(r2 < r1);
    }

    #[test]
    fn hm_series_matches_gaussian_quadrature() {
        // At alpha = 1/2 the series is the moment generating function of
        // |N(0,1)| after rescaling: Phi(x) = E exp(x sqrt(pi/2) |N|).
        for &x in &[-1.2, -0.4, 0.6, 1.4] {
            let c = x * (PI / 2.0).sqrt();
            let n_steps = 40_000;
            let upper = 16.0;
            let h = upper / n_steps as f64;
            let f = |n: f64| (2.0 / PI).sqrt() * (-0.5 * n * n + c * n).exp();
            let fd = |n: f64| n * (-0.5 * n * n + c * n).exp();
            let (mut s, mut sd) = (f(0.0) + f(upper), fd(0.0) + fd(upper));
            for i in 1..n_steps {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(i as f64 * h);
                sd += w * fd(i as f64 * h);
            }
            s *= h / 3.0;
            sd *= h / 3.0;
            let (ln_phi, ratio) = hm_series(0.5, x).unwrap();
            assert_relative_eq!(ln_phi, s.ln(), max_relative = 1e-10);
            assert_relative_eq!(ratio, sd / s, max_relative = 1e-9);
        }
    }

    #[test]
    fn hm_series_matches_monte_carlo() {
        // Phi(x) = E exp(s W) with W = Z^(-alpha), Z skewed stable, and
        // s = x Gamma(1 + alpha) / cos(pi alpha / 2).
        for &(alpha, x) in &[(0.3, 0.5), (0.7, -0.8), (0.7, 0.4)] {
            let s = x * crate::numerics::gamma(1.0 + alpha).unwrap() / cos_pi(alpha / 2.0);
            let sampler = Sampler::new(&StableParams::skewed(alpha, 1.0).unwrap());
            let trials = 400_000u64;
            let (mut sum, mut sum2) = (0.0, 0.0);
            for t in 0..trials {
                let (u, w) = angle_exp_pair(0xB0B5, t, 7);
                let z = sampler.sample(u, w);
                let v = (s * z.powf(-alpha)).exp();
                sum += v;
                sum2 += v * v;
            }
            let mean = sum / trials as f64;
            let var = (sum2 / trials as f64 - mean * mean).max(0.0);
            let se = (var / trials as f64).sqrt();
            let phi = hm_series(alpha, x).unwrap().0.exp();
            assert!(
                (phi - mean).abs() <= 5.0 * se + 1e-12,
                "alpha {alpha} x {x}: series {phi} vs mc {mean} (se {se})"
            );
        }
    }

    #[test]
    fn hm_rates_stationary_and_positive() {
        for &alpha in &[0.2, 0.5, 0.8] {
            let r = hm_rate(alpha, 0.5, Side::Right).unwrap();
            assert!(r.rate > 0.0);
            let (_, ratio) = hm_series(alpha, -r.inner_constant).unwrap();
            assert!((ratio - 1.0 / 1.5).abs() <= 1e-9, "alpha {alpha}");

            let l = hm_rate(alpha, 0.5, Side::Left).unwrap();
            assert!(l.rate > 0.0);
            let (_, ratio) = hm_series(alpha, l.inner_constant).unwrap();
            assert!((ratio - 2.0).abs() <= 1e-9, "alpha {alpha}");
        }
        assert!(hm_rate(0.5, 1.0, Side::Right).unwrap().rate > 0.0);
        assert!(hm_rate(1.2, 0.5, Side::Right).is_err());
        assert!(hm_rate(0.5, 1.0, Side::Left).is_err());
    }

    #[test]
    fn rates_vanish_continuously_at_zero_eps() {
        assert!(mle05_rate(1e-8, Side::Right).unwrap().rate < 1e-10);
        assert!(hm_rate(0.5, 1e-6, Side::Left).unwrap().rate < 1e-9);
        let r = gm_left_rate(0.5, 1e-6, None).unwrap().rate;
        assert!(r > 0.0 && r < 1e-9);
    }

    #[test]
    fn complexity_hand_value_and_floor() {
        // mle05 at eps = 0.5: right rate 0.12768..., left 0.80685...;
        // k = ceil(ln 40 / 0.12768...) = 29.
        let c = sample_complexity(0.5, 0.5, 0.05, Method::Mle05).unwrap();
        assert_eq!(c.k, 29);
        assert_relative_eq!(c.g * (40f64).ln() / 0.25, 28.889, max_relative = 1e-3);
        // Very loose request bottoms out at the floor of 2.
        let c = sample_complexity(0.5, 10.0, 0.9, Method::Gm).unwrap();
        assert_eq!(c.k, 2);
    }

    #[test]
    fn complexity_rejections_and_monotonicity() {
        assert!(sample_complexity(0.5, 0.1, 2.0, Method::Mle05).is_err());
        assert!(sample_complexity(0.5, 0.1, 0.0, Method::Gm).is_err());
        assert!(sample_complexity(0.5, 0.1, 0.05, Method::Op).is_err());
        assert!(sample_complexity(0.5, 0.1, 0.05, Method::GmBeta).is_err());
        assert!(sample_complexity(0.7, 0.1, 0.05, Method::Mle05).is_err());
        let mut prev = u64::MAX;
        for &eps in &[0.1, 0.2, 0.4, 0.8] {
            let c = sample_complexity(0.75, eps, 0.05, Method::Gm).unwrap();
            assert!(c.k <= prev, "k not shrinking with eps");
            prev = c.k;
        }
        // hm path exercises both sides.
        let c = sample_complexity(0.3, 0.25, 0.05, Method::Hm).unwrap();
        assert!(c.k >= 2);
    }

    #[test]
    fn near_one_approximation_tracks_solved_constant() {
        // Right-side constant at alpha = 1 +/- delta against the closed
        // approximation; this is the regime the skewing was built for.
        for &delta in &[1e-3] {
            for &eps in &[0.1, 0.5] {
                let approx = near_one_gm_approximation(delta, eps).unwrap();
                for &alpha in &[1.0 - delta, 1.0 + delta] {
                    let g = gm_right_rate(alpha, eps).unwrap().g_constant();
                    assert!(
                        (g / approx - 1.0).abs() <= 0.05,
                        "alpha {alpha} eps {eps}: {g} vs {approx}"
                    );
                }
            }
        }
        assert!(near_one_gm_approximation(0.05, 0.1).is_err());
        assert!(near_one_gm_approximation(-1e-3, 0.1).is_err());
    }

    #[test]
    fn normalizer_limit_monotone_in_k() {
        for &alpha in &[0.3, 1.7] {
            let target = (-EULER_GAMMA * (alpha - 1.0)).exp();
            let mut prev = f64::INFINITY;
            for &k in &[2usize, 3, 5, 10, 100, 1000] {
                let v = gm_normalizer_limit(alpha, k).unwrap();
                assert!(v < prev, "alpha {alpha} k {k}");
                assert!(v > target * (1.0 - 1e-12));
                prev = v;
            }
            let far = gm_normalizer_limit(alpha, 100_000).unwrap();
            assert!((far - target).abs() <= 1e-4, "alpha {alpha}: {far} vs {target}");
        }
        // Continuous through the excluded index: at alpha = 1 +/- 1e-8 the
        // value is 1 to within ~1e-8 for every k.
        for &alpha in &[1.0 - 1e-8, 1.0 + 1e-8] {
            for &k in &[2usize, 7, 64] {
                assert!((gm_normalizer_limit(alpha, k).unwrap() - 1.0).abs() < 1e-6);
            }
        }
        assert!(gm_normalizer_limit(1.0, 10).is_err());
        assert!(gm_normalizer_limit(0.5, 1).is_err());
    }

    #[test]
    fn symmetric_reference_values() {
        assert_relative_eq!(
            symmetric_gm_reference_variance(1.0).unwrap(),
            PI * PI / 4.0,
            max_relative = 1e-14
        );
        // At alpha = 2 skewing buys nothing: the two factors agree.
        assert_relative_eq!(
            symmetric_gm_reference_variance(2.0).unwrap(),
            gm_variance_factor(2.0).unwrap(),
            max_relative = 1e-14
        );
        assert!(symmetric_gm_reference_variance(0.0).is_err());
        assert!(symmetric_gm_reference_variance(2.5).is_err());
    }

    #[test]
    fn g_constant_shape() {
        let b = gm_right_rate(0.5, 0.1).unwrap();
        assert_relative_eq!(b.g_constant() * b.rate, 0.01, max_relative = 1e-12);
    }

    #[test]
    fn residuals_back_substitute_to_zero() {
        let mut specs = Vec::new();
        for eps in [0.2, 0.5, 1.0] {
            specs.push(gm_right_rate(0.5, eps).unwrap());
            specs.push(gm_right_rate(1.5, eps).unwrap());
            specs.push(hm_rate(0.5, eps, Side::Right).unwrap());
            specs.push(mle05_rate(eps, Side::Right).unwrap());
            if eps < 1.0 {
                specs.push(gm_left_rate(0.5, eps, None).unwrap());
                specs.push(gm_left_rate(1.5, eps, Some(50)).unwrap());
                specs.push(hm_rate(0.5, eps, Side::Left).unwrap());
                specs.push(mle05_rate(eps, Side::Left).unwrap());
            }
        }
        for spec in &specs {
            let residual = rate_residual(spec).unwrap();
            assert!(
                residual <= 1e-9,
                "{} {} eps {}: residual {residual}",
                spec.estimator,
                spec.side,
                spec.epsilon
            );
        }
        let op = TailBoundSpec {
            estimator: Method::Op,
            ..specs[0]
        };
        assert!(rate_residual(&op).is_err());
    }
}
