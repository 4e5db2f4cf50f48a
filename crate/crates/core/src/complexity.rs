//! Sample size needed for `|xi_hat - xi| <= epsilon` with probability at
//! least `1 - delta`, and the inverse question.
//!
//! With `n` validation points of which a fraction `alpha` is abnormal, the
//! guarantee holds once
//!
//! ```text
//! n >= 8/eps^2 * ( ln(2 / (1 - sqrt(1 - delta))) * ((2 - alpha)/alpha)^2
//!                + ln(2/delta) / (1 - alpha) * ((l_a/l_0)^2 + (l'_a/l'_0)^2) )
//! ```
//!
//! where `l_a`, `l'_a` are Lipschitz constants of the abnormal-score CDFs and
//! `l_0`, `l'_0` those of the normal-score quantile functions. Logarithms
//! are natural and the ceiling is taken once, at the end.

use serde::{Deserialize, Serialize};

use crate::bias::GaussianScoreModel;
use crate::error::{Error, Result};
use crate::normal::{std_normal_pdf, std_normal_quantile};

/// Largest sample size representable as a signed 64-bit count.
pub const MAX_SAMPLES: f64 = 9_223_372_036_854_775_807.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzConstants {
    /// `l_a`, for `F_a`.
    pub lip_a: f64,
    /// `l'_a`, for `F'_a`.
    pub lip_a_prime: f64,
    /// `l_0^-`, for `F_0^{-1}`.
    pub lip_0_inv: f64,
    /// `l'_0^-`, for `F'_0^{-1}`.
    pub lip_0_inv_prime: f64,
}

impl LipschitzConstants {
    pub fn uniform(value: f64) -> Self {
        Self {
            lip_a: value,
            lip_a_prime: value,
            lip_0_inv: value,
            lip_0_inv_prime: value,
        }
    }

    /// Constants for two Gaussian score models.
    ///
    /// `F_a` is globally Lipschitz with constant equal to its peak density.
    /// `F_0^{-1}` is not globally Lipschitz for a Gaussian, so its constant is
    /// taken over the quantile interval `[q_lo, q_hi]`, where it equals the
    /// reciprocal of the smallest density on the matching score interval.
    pub fn from_gaussian(
        m: &GaussianScoreModel,
        mprime: &GaussianScoreModel,
        interval: QuantileInterval,
    ) -> Result<Self> {
        m.validate()?;
        mprime.validate()?;
        let z_lo = std_normal_quantile(interval.lo)?;
        let z_hi = std_normal_quantile(interval.hi)?;
        let z_far = z_lo.abs().max(z_hi.abs());
        let peak = |sigma: f64| std_normal_pdf(0.0) / sigma;
        let inv = |sigma: f64| sigma / std_normal_pdf(z_far);
        Ok(Self {
            lip_a: peak(m.sigmaa),
            lip_a_prime: peak(mprime.sigmaa),
            lip_0_inv: inv(m.sigma0),
            lip_0_inv_prime: inv(mprime.sigma0),
        })
    }

    /// `(l_a/l_0)^2 + (l'_a/l'_0)^2`.
    fn ratio_term(&self) -> f64 {
        (self.lip_a / self.lip_0_inv).powi(2) + (self.lip_a_prime / self.lip_0_inv_prime).powi(2)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lip_a", self.lip_a),
            ("lip_a_prime", self.lip_a_prime),
            ("lip_0_inv", self.lip_0_inv),
            ("lip_0_inv_prime", self.lip_0_inv_prime),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Quantile range over which the normal-score quantile function is taken to
/// be Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantileInterval {
    pub lo: f64,
    pub hi: f64,
}

impl Default for QuantileInterval {
    fn default() -> Self {
        Self { lo: 0.5, hi: 0.999 }
    }
}

/// Everything except the target accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub delta: f64,
    pub alpha: f64,
    #[serde(flatten)]
    pub lipschitz: LipschitzConstants,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        self.lipschitz.validate()
    }

    /// The bracketed sum, i.e. `n * eps^2 / 8` at the bound.
    fn bracket(&self) -> f64 {
        abnormal_cdf_log_term(self.delta, self.alpha)
            + (2.0 / self.delta).ln() / (1.0 - self.alpha) * self.lipschitz.ratio_term()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityInput {
    pub epsilon: f64,
    #[serde(flatten)]
    pub params: BoundParams,
}

impl ComplexityInput {
    pub fn new(
        epsilon: f64,
        delta: f64,
        alpha: f64,
        lipschitz: LipschitzConstants,
    ) -> Result<Self> {
        let c = Self {
            epsilon,
            params: BoundParams {
                delta,
                alpha,
                lipschitz,
            },
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::domain(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        self.params.validate()
    }

    /// Unrounded right-hand side of the bound.
    pub fn bound(&self) -> Result<f64> {
        self.validate()?;
        Ok(8.0 / (self.epsilon * self.epsilon) * self.params.bracket())
    }
}

/// `ln(2 / (1 - sqrt(1 - delta))) * ((2 - alpha)/alpha)^2`, with
/// `1 - sqrt(1 - delta)` written as `delta / (1 + sqrt(1 - delta))` to avoid
/// cancellation for small `delta`.
fn abnormal_cdf_log_term(delta: f64, alpha: f64) -> f64 {
    let gap = delta / (1.0 + (1.0 - delta).sqrt());
    (2.0 / gap).ln() * ((2.0 - alpha) / alpha).powi(2)
}

fn saturating_ceil(rhs: f64, what: &'static str) -> Result<u64> {
    let n = rhs.ceil();
    if !n.is_finite() || n > MAX_SAMPLES {
        return Err(Error::TooLarge {
            what,
            value: rhs,
            limit: MAX_SAMPLES,
        });
    }
    Ok((n as u64).max(1))
}

/// Smallest integer `n` satisfying the bound.
pub fn required_samples(c: &ComplexityInput) -> Result<u64> {
    saturating_ceil(c.bound()?, "required sample size")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AchievableEpsilon {
    pub epsilon: f64,
    /// The bound exceeds 1, the largest possible `|xi_hat - xi|`.
    pub vacuous: bool,
}

/// Accuracy guaranteed at sample size `n`: `sqrt(8/n * bracket)`.
pub fn achievable_epsilon(n: u64, params: &BoundParams) -> Result<AchievableEpsilon> {
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    params.validate()?;
    let epsilon = (8.0 / n as f64 * params.bracket()).sqrt();
    Ok(AchievableEpsilon {
        epsilon,
        vacuous: epsilon > 1.0,
    })
}

/// Samples needed for the abnormal-score ECDF to be uniformly within
/// `epsilon1` of `F_a` with probability `1 - delta`, when only a fraction
/// `alpha` of the mixture is abnormal.
pub fn abnormal_cdf_samples(epsilon1: f64, delta: f64, alpha: f64) -> Result<u64> {
    if !(epsilon1 > 0.0 && epsilon1.is_finite()) {
        return Err(Error::domain(format!(
            "epsilon1 must be positive, got {epsilon1}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let rhs = abnormal_cdf_log_term(delta, alpha) / (2.0 * epsilon1 * epsilon1);
    saturating_ceil(rhs, "abnormal-CDF sample size")
}
