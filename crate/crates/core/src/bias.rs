//! Relative scoring bias between two score functions.
//!
//! For scorers `s` and `s'` thresholded at the same level, the relative bias
//! is `xi(s, s') = TPR(s', tau') - TPR(s, tau)`. Three estimators are
//! provided: the finite-sample one on labelled scores, the plug-in identity
//! `F_a(F_0^{-1}(q)) - F'_a(F'_0^{-1}(q))` over any pair of distributions,
//! and its closed form when all four class-conditional score distributions
//! are Gaussian.
//!
//! The absolute scoring bias against the best detector of a model class is
//! the special case where `s'` is that optimum; computing the optimum is
//! outside what this crate can do.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::detector::{
    evaluate_split, split_classes, threshold_with_rule, Mode, TargetLevel, ThresholdRule,
};
use crate::ecdf::{EmpiricalCdf, LabeledScore};
use crate::error::{Error, Result};
use crate::normal::{std_normal_cdf, std_normal_quantile, std_normal_sf};

/// Class-conditional score distributions of one scorer: normal scores follow
/// `N(mu0, sigma0^2)` and abnormal scores `N(mua, sigmaa^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianScoreModel {
    pub mu0: f64,
    pub sigma0: f64,
    pub mua: f64,
    pub sigmaa: f64,
}

impl GaussianScoreModel {
    pub fn new(mu0: f64, sigma0: f64, mua: f64, sigmaa: f64) -> Result<Self> {
        let m = Self {
            mu0,
            sigma0,
            mua,
            sigmaa,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu0.is_finite() && self.mua.is_finite()) {
            return Err(Error::domain("Gaussian means must be finite"));
        }
        for (name, s) in [("sigma0", self.sigma0), ("sigmaa", self.sigmaa)] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn normal_dist(&self) -> Normal {
        Normal {
            mean: self.mu0,
            std_dev: self.sigma0,
        }
    }

    pub fn abnormal_dist(&self) -> Normal {
        Normal {
            mean: self.mua,
            std_dev: self.sigmaa,
        }
    }

    /// Applies `x -> a x + b` to the score, `a > 0`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        Self {
            mu0: a * self.mu0 + b,
            sigma0: a * self.sigma0,
            mua: a * self.mua + b,
            sigmaa: a * self.sigmaa,
        }
    }

    /// Argument of `Phi` in the closed form: `F_a(F_0^{-1}(q))` standardised.
    fn standardized_threshold(&self, z_q: f64) -> f64 {
        self.sigma0 * z_q / self.sigmaa + (self.mu0 - self.mua) / self.sigmaa
    }
}

/// Anything that can play the role of a class-conditional score distribution
/// in the plug-in identity.
pub trait ScoreDistribution {
    fn cdf(&self, t: f64) -> f64;
    fn quantile(&self, p: f64) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normal {
    pub mean: f64,
    pub std_dev: f64,
}

impl ScoreDistribution for Normal {
    fn cdf(&self, t: f64) -> f64 {
        std_normal_cdf((t - self.mean) / self.std_dev)
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        Ok(self.mean + self.std_dev * std_normal_quantile(p)?)
    }
}

impl ScoreDistribution for EmpiricalCdf {
    fn cdf(&self, t: f64) -> f64 {
        self.eval(t)
    }

    /// Order statistic `ceil(p n)`, the same one the detector thresholds at.
    fn quantile(&self, p: f64) -> Result<f64> {
        let level = TargetLevel::fix_fpr(p)?;
        Ok(threshold_with_rule(self, level, ThresholdRule::Conservative).value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasKind {
    Empirical,
    Plugin,
    Gaussian,
}

/// `xi = tpr_sprime - tpr_s`.
///
/// In fix-TPR mode the compared rate is the FPR, so `tpr_s` and
/// `tpr_sprime` hold false-positive rates there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    pub xi: f64,
    pub kind: BiasKind,
    pub tpr_s: f64,
    pub tpr_sprime: f64,
    pub level: TargetLevel,
}

impl BiasEstimate {
    fn new(kind: BiasKind, tpr_s: f64, tpr_sprime: f64, level: TargetLevel) -> Self {
        Self {
            xi: tpr_sprime - tpr_s,
            kind,
            tpr_s,
            tpr_sprime,
            level,
        }
    }
}

fn compared_rate(normal: &EmpiricalCdf, abnormal: &EmpiricalCdf, level: TargetLevel) -> f64 {
    let ev = evaluate_split(normal, abnormal, level, ThresholdRule::Conservative);
    match level.mode() {
        Mode::FixFpr => ev.tpr,
        Mode::FixTpr => ev.fpr,
    }
}

/// Finite-sample relative bias; each scorer is thresholded on its own
/// normal scores and its recall normalised by its abnormal count.
pub fn empirical_relative_bias(
    scores_s: &[LabeledScore],
    scores_sprime: &[LabeledScore],
    level: TargetLevel,
) -> Result<BiasEstimate> {
    let (n, a) = split_classes(scores_s)?;
    let (np, ap) = split_classes(scores_sprime)?;
    Ok(empirical_bias_from_cdfs(&n, &a, &np, &ap, level))
}

pub fn empirical_bias_from_cdfs(
    normal_s: &EmpiricalCdf,
    abnormal_s: &EmpiricalCdf,
    normal_sprime: &EmpiricalCdf,
    abnormal_sprime: &EmpiricalCdf,
    level: TargetLevel,
) -> BiasEstimate {
    BiasEstimate::new(
        BiasKind::Empirical,
        compared_rate(normal_s, abnormal_s, level),
        compared_rate(normal_sprime, abnormal_sprime, level),
        level,
    )
}

/// Plug-in bias at quantile level `q` (fix-FPR semantics):
/// `F_a(F_0^{-1}(q)) - F'_a(F'_0^{-1}(q))`.
pub fn plugin_relative_bias<N, A, Np, Ap>(
    normal_s: &N,
    abnormal_s: &A,
    normal_sprime: &Np,
    abnormal_sprime: &Ap,
    q: f64,
) -> Result<BiasEstimate>
where
    N: ScoreDistribution + ?Sized,
    A: ScoreDistribution + ?Sized,
    Np: ScoreDistribution + ?Sized,
    Ap: ScoreDistribution + ?Sized,
{
    let level = TargetLevel::fix_fpr(q)?;
    let tau = normal_s.quantile(q)?;
    let tau_prime = normal_sprime.quantile(q)?;
    Ok(BiasEstimate::new(
        BiasKind::Plugin,
        1.0 - abnormal_s.cdf(tau),
        1.0 - abnormal_sprime.cdf(tau_prime),
        level,
    ))
}

/// Closed-form bias when all four score distributions are Gaussian.
pub fn gaussian_relative_bias(
    m: &GaussianScoreModel,
    mprime: &GaussianScoreModel,
    q: f64,
) -> Result<BiasEstimate> {
    m.validate()?;
    mprime.validate()?;
    let level = TargetLevel::fix_fpr(q)?;
    let z = std_normal_quantile(q)?;
    // 1 - Phi(a) evaluated as the upper tail to keep precision near 1.
    let tpr_s = std_normal_sf(m.standardized_threshold(z));
    let tpr_sprime = std_normal_sf(mprime.standardized_threshold(z));
    Ok(BiasEstimate::new(
        BiasKind::Gaussian,
        tpr_s,
        tpr_sprime,
        level,
    ))
}

/// The closed form as displayed: `Phi(a) - Phi(a')`.
pub fn gaussian_relative_bias_phi_form(
    m: &GaussianScoreModel,
    mprime: &GaussianScoreModel,
    q: f64,
) -> Result<f64> {
    let z = std_normal_quantile(q)?;
    Ok(std_normal_cdf(m.standardized_threshold(z))
        - std_normal_cdf(mprime.standardized_threshold(z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upward,
    Downward,
    Flat,
}

impl Direction {
    pub fn arrow(self) -> &'static str {
        match self {
            Direction::Upward => "↑",
            Direction::Downward => "↓",
            Direction::Flat => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasDirection {
    pub direction: Direction,
    pub tpr_baseline: f64,
    pub tpr_treatment: f64,
    pub class_tag: String,
}

/// Upward when the treatment scorer has the higher recall on this class.
pub fn classify_bias_direction(
    tpr_baseline: f64,
    tpr_treatment: f64,
    class_tag: impl Into<String>,
) -> BiasDirection {
    let direction = match tpr_treatment.partial_cmp(&tpr_baseline) {
        Some(Ordering::Greater) => Direction::Upward,
        Some(Ordering::Less) => Direction::Downward,
        _ => Direction::Flat,
    };
    BiasDirection {
        direction,
        tpr_baseline,
        tpr_treatment,
        class_tag: class_tag.into(),
    }
}
