//! Skewed stable distributions.
//!
//! A variate Z ~ S(alpha, beta, F) is defined by the characteristic function
//! E exp(i t Z) = exp(-F |t|^alpha (1 - i beta sgn(t) tan(pi alpha / 2))),
//! for 0 < alpha <= 2, alpha != 1, |beta| <= 1 and scale F > 0. The sketch
//! uses the fully skewed case beta = 1, where for alpha < 1 the support is
//! the non-negative reals. alpha = 2 is the Gaussian with variance 2F
//! regardless of beta.

use crate::error::{Error, Result};
use crate::numerics::{cos_pi, gamma, ln_gamma, sin_pi};
use std::f64::consts::{FRAC_PI_2, PI};

/// Index kappa(alpha): alpha below 1, 2 - alpha above (0 at alpha = 2).
pub fn kappa(alpha: f64) -> Result<f64> {
    validate_alpha(alpha)?;
    Ok(if alpha < 1.0 { alpha } else { 2.0 - alpha })
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) || !alpha.is_finite() {
        return Err(Error::domain(format!(
            "stability index must lie in (0, 2], got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Err(Error::domain("stability index 1 is not supported"));
    }
    Ok(())
}

/// tan(pi alpha / 2) via exact half-integer reduction; exactly 0 at alpha = 2.
pub(crate) fn tan_half_pi(alpha: f64) -> f64 {
    sin_pi(alpha / 2.0) / cos_pi(alpha / 2.0)
}

/// Parameters of a skewed stable distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    pub alpha: f64,
    pub beta: f64,
    pub scale: f64,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, scale: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::domain(format!(
                "skewness must lie in [-1, 1], got {beta}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!("scale must be positive, got {scale}")));
        }
        Ok(StableParams { alpha, beta, scale })
    }

    /// Fully skewed (beta = 1) parameters, the projection distribution.
    pub fn skewed(alpha: f64, scale: f64) -> Result<Self> {
        StableParams::new(alpha, 1.0, scale)
    }

    /// One draw from the distribution via the angle-exponential transform.
    /// `u` must lie in (-pi/2, pi/2) and `w` must be a positive exponential.
    pub fn sample(&self, u: f64, w: f64) -> Result<f64> {
        if !(u > -FRAC_PI_2 && u < FRAC_PI_2) {
            return Err(Error::domain(format!(
                "angle must lie in (-pi/2, pi/2), got {u}"
            )));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::domain(format!(
                "exponential draw must be positive, got {w}"
            )));
        }
        Ok(Sampler::new(self).sample(u, w))
    }

    /// E |Z|^lambda in closed form.
    ///
    /// Exists for lambda < alpha, and additionally lambda > -1 unless
    /// beta = 1 with alpha < 1 (one-sided case, where every negative order
    /// is finite). lambda = 0 returns 1 exactly.
    pub fn abs_moment(&self, lambda: f64) -> Result<f64> {
        if !lambda.is_finite() {
            return Err(Error::domain("moment order must be finite"));
        }
        if lambda >= self.alpha {
            return Err(Error::domain(format!(
                "moment order must be below the stability index, got {lambda} >= {}",
                self.alpha
            )));
        }
        if lambda == 0.0 {
            return Ok(1.0);
        }
        let one_sided = self.beta == 1.0 && self.alpha < 1.0;
        if !one_sided && lambda <= -1.0 {
            return Err(Error::domain(format!(
                "moment order must exceed -1 for a two-sided distribution, got {lambda}"
            )));
        }
        if one_sided {
            one_sided_abs_moment(self.alpha, self.scale, lambda)
        } else {
            two_sided_abs_moment(self.alpha, self.beta, self.scale, lambda)
        }
    }
}

/// log E |Z|^lambda for the one-sided case (beta = 1, alpha < 1), valid for
/// every lambda < alpha. All factors are positive, so the log form is safe
/// for arbitrarily negative orders.
pub(crate) fn ln_one_sided_abs_moment(alpha: f64, scale: f64, lambda: f64) -> Result<f64> {
    let ratio = lambda / alpha;
    Ok(ratio * scale.ln() + ln_gamma(1.0 - ratio)? - ratio * cos_pi(alpha / 2.0).ln()
        - ln_gamma(1.0 - lambda)?)
}

fn one_sided_abs_moment(alpha: f64, scale: f64, lambda: f64) -> Result<f64> {
    Ok(ln_one_sided_abs_moment(alpha, scale, lambda)?.exp())
}

/// (2/pi) sin(pi lambda / 2) Gamma(lambda), continuous on (-1, 2).
///
/// For lambda < 1/2 the reflection form 1 / (cos(pi lambda / 2) Gamma(1 - lambda))
/// removes the 0/0 at lambda = 0; for lambda >= 1/2 the direct product is
/// regular (including lambda = 1, where the reflection form is 0 * inf).
fn sine_gamma_factor(lambda: f64) -> Result<f64> {
    if lambda < 0.5 {
        Ok(1.0 / (cos_pi(lambda / 2.0) * gamma(1.0 - lambda)?))
    } else {
        Ok((2.0 / PI) * sin_pi(lambda / 2.0) * gamma(lambda)?)
    }
}

fn two_sided_abs_moment(alpha: f64, beta: f64, scale: f64, lambda: f64) -> Result<f64> {
    let t = tan_half_pi(alpha);
    let skew_angle = (beta * t).atan();
    let amplitude = (1.0 + beta * beta * t * t).powf(lambda / (2.0 * alpha));
    Ok(scale.powf(lambda / alpha)
        * ((lambda / alpha) * skew_angle).cos()
        * amplitude
        * gamma(1.0 - lambda / alpha)?
        * sine_gamma_factor(lambda)?)
}

/// Precomputed transform from an (angle, exponential) pair to one stable
/// draw. Hot path of sketch updates, so all constants are cached.
#[derive(Debug, Clone, Copy)]
pub struct Sampler {
    alpha: f64,
    scale: f64,
    gaussian: bool,
    scale_pow: f64, // scale^(1/alpha)
    skew_amp: f64,  // (1 + beta^2 tan^2(pi alpha/2))^(1/(2 alpha))
    theta0: f64,    // arctan(beta tan(pi alpha/2)) / alpha
    inv_alpha: f64,
    exp_ratio: f64, // (1 - alpha)/alpha
}

impl Sampler {
    /// Parameters must already be validated (see `StableParams::new`).
    pub fn new(p: &StableParams) -> Self {
        let t = tan_half_pi(p.alpha);
        Sampler {
            alpha: p.alpha,
            scale: p.scale,
            gaussian: p.alpha == 2.0,
            scale_pow: p.scale.powf(1.0 / p.alpha),
            skew_amp: (1.0 + p.beta * p.beta * t * t).powf(1.0 / (2.0 * p.alpha)),
            theta0: (p.beta * t).atan() / p.alpha,
            inv_alpha: 1.0 / p.alpha,
            exp_ratio: (1.0 - p.alpha) / p.alpha,
        }
    }

    #[inline]
    pub fn sample(&self, u: f64, w: f64) -> f64 {
        if self.gaussian {
            // Exact N(0, 2 scale): the transform degenerates cleanly here.
            return 2.0 * u.sin() * (self.scale * w).sqrt();
        }
        let su = self.alpha * (u + self.theta0);
        self.scale_pow
            * self.skew_amp
            * (su.sin() / u.cos().powf(self.inv_alpha))
            * (((u - su).cos() / w).powf(self.exp_ratio))
    }
}

/// Density of the one-sided alpha = 1/2 member at scale F:
/// f(z) = F exp(-F^2 / (2 z)) / (sqrt(2 pi) z^(3/2)) for z > 0.
pub fn levy_pdf(z: f64, scale: f64) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::domain(format!("scale must be positive, got {scale}")));
    }
    if !(z > 0.0) {
        return Err(Error::domain(format!(
            "density support is the positive axis, got z = {z}"
        )));
    }
    Ok(scale / (2.0 * PI).sqrt() * (-scale * scale / (2.0 * z)).exp() / z.powf(1.5))
}
