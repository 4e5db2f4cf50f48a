//! Threshold selection at a target rate and (TPR, FPR) evaluation.
//!
//! An instance is flagged anomalous when its score is strictly greater than
//! the threshold, so scores tied with the threshold count as normal.

use serde::{Deserialize, Serialize};

use crate::ecdf::{scores_of, EmpiricalCdf, Label, LabeledScore};
use crate::error::{Error, Result};

/// Which rate is held fixed when picking the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Maximise TPR subject to `FPR <= 1 - q`; threshold from normal scores.
    #[default]
    FixFpr,
    /// Minimise FPR subject to `TPR >= 1 - q`; threshold from abnormal scores.
    FixTpr,
}

/// Quantile level `q` in (0, 1). The held-fixed rate targets `1 - q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLevel")]
pub struct TargetLevel {
    q: f64,
    mode: Mode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLevel {
    q: f64,
    #[serde(default)]
    mode: Mode,
}

impl TryFrom<RawLevel> for TargetLevel {
    type Error = Error;

    fn try_from(raw: RawLevel) -> Result<Self> {
        Self::new(raw.q, raw.mode)
    }
}

impl TargetLevel {
    pub fn new(q: f64, mode: Mode) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain(format!(
                "target level q must lie in (0, 1), got {q}"
            )));
        }
        Ok(Self { q, mode })
    }

    pub fn fix_fpr(q: f64) -> Result<Self> {
        Self::new(q, Mode::FixFpr)
    }

    pub fn fix_tpr(q: f64) -> Result<Self> {
        Self::new(q, Mode::FixTpr)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// The target FPR (fix-FPR mode) or TPR (fix-TPR mode), `1 - q`.
    pub fn target_rate(&self) -> f64 {
        1.0 - self.q
    }

    pub(crate) fn validate(&self) -> Result<()> {
        Self::new(self.q, self.mode).map(|_| ())
    }
}

impl Default for TargetLevel {
    /// Target FPR of 0.05.
    fn default() -> Self {
        Self {
            q: 0.95,
            mode: Mode::FixFpr,
        }
    }
}

/// How the order-statistic index is rounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// Fix-FPR: `k = ceil(q n)`, so the calibration FPR never exceeds `1 - q`.
    /// Fix-TPR: `k = floor(q n)`, so the calibration TPR reaches `1 - q` when
    /// there are no ties.
    #[default]
    Conservative,
    /// The opposite rounding: `floor(q n)` for fix-FPR, `ceil(q n)` for fix-TPR.
    LiteralMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorWarning {
    /// `q n < 1`: the calibration sample is too small to certify the target
    /// rate and the index was clamped to the first order statistic.
    SmallCalibrationSample { n: usize, q: f64 },
}

/// A chosen threshold with the order statistic it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub value: f64,
    /// 1-indexed order statistic of the calibration sample.
    pub k: usize,
    pub clamped: bool,
}

/// `x` nudged onto the nearest integer when within rounding error of it, so
/// that e.g. `0.07 * 100` is treated as exactly 7.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

fn order_index(level: TargetLevel, rule: ThresholdRule, n: usize) -> (usize, bool) {
    let x = snap(level.q * n as f64);
    let round_up = matches!(
        (level.mode, rule),
        (Mode::FixFpr, ThresholdRule::Conservative) | (Mode::FixTpr, ThresholdRule::LiteralMax)
    );
    let raw = if round_up { x.ceil() } else { x.floor() };
    let k = (raw as usize).clamp(1, n);
    (k, x < 1.0)
}

/// Threshold from an already sorted calibration sample.
pub fn threshold_with_rule(
    calibration: &EmpiricalCdf,
    level: TargetLevel,
    rule: ThresholdRule,
) -> Threshold {
    let (k, clamped) = order_index(level, rule, calibration.len());
    Threshold {
        value: calibration.values()[k - 1],
        k,
        clamped,
    }
}

/// Threshold from the calibration sample under the default rule.
///
/// In fix-FPR mode `calibration` holds normal scores; in fix-TPR mode it
/// holds abnormal scores.
pub fn threshold_for_level(calibration: &EmpiricalCdf, level: TargetLevel) -> f64 {
    threshold_with_rule(calibration, level, ThresholdRule::Conservative).value
}

/// Same order statistic as [`threshold_with_rule`], found by selection
/// instead of a full sort. Reorders `scores`.
pub fn threshold_unsorted(
    scores: &mut [f64],
    level: TargetLevel,
    rule: ThresholdRule,
) -> Result<Threshold> {
    if scores.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some((index, &value)) = scores.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteScore { index, value });
    }
    let (k, clamped) = order_index(level, rule, scores.len());
    let (_, &mut value, _) = scores.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(Threshold { value, k, clamped })
}

/// `1 - F_a(tau)`: fraction of abnormal scores strictly above `tau`.
pub fn recall_at_threshold(abnormal: &EmpiricalCdf, tau: f64) -> f64 {
    abnormal.exceedance(tau)
}

/// Fraction of `scores` strictly above `tau`.
pub fn exceedance(scores: &[f64], tau: f64) -> f64 {
    if scores.is_empty() {
        return f64::NAN;
    }
    scores.iter().filter(|&&s| s > tau).count() as f64 / scores.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorEvaluation {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub n_normal: usize,
    pub n_abnormal: usize,
    pub level: TargetLevel,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<DetectorWarning>,
}

/// Evaluates a detector whose class samples are already split and sorted.
pub fn evaluate_split(
    normal: &EmpiricalCdf,
    abnormal: &EmpiricalCdf,
    level: TargetLevel,
    rule: ThresholdRule,
) -> DetectorEvaluation {
    let calibration = match level.mode {
        Mode::FixFpr => normal,
        Mode::FixTpr => abnormal,
    };
    let t = threshold_with_rule(calibration, level, rule);
    let mut warnings = Vec::new();
    if t.clamped {
        log::warn!(
            "q * n = {} * {} < 1; threshold clamped to the minimum calibration score",
            level.q,
            calibration.len()
        );
        warnings.push(DetectorWarning::SmallCalibrationSample {
            n: calibration.len(),
            q: level.q,
        });
    }
    DetectorEvaluation {
        threshold: t.value,
        tpr: abnormal.exceedance(t.value),
        fpr: normal.exceedance(t.value),
        n_normal: normal.len(),
        n_abnormal: abnormal.len(),
        level,
        warnings,
    }
}

pub fn evaluate_with_rule(
    scores: &[LabeledScore],
    level: TargetLevel,
    rule: ThresholdRule,
) -> Result<DetectorEvaluation> {
    let (normal, abnormal) = split_classes(scores)?;
    Ok(evaluate_split(&normal, &abnormal, level, rule))
}

/// Splits by label, thresholds at `level`, and reports the achieved rates.
pub fn evaluate_detector(
    scores: &[LabeledScore],
    level: TargetLevel,
) -> Result<DetectorEvaluation> {
    evaluate_with_rule(scores, level, ThresholdRule::Conservative)
}

pub(crate) fn split_classes(scores: &[LabeledScore]) -> Result<(EmpiricalCdf, EmpiricalCdf)> {
    let normal = scores_of(scores, Label::Normal);
    let abnormal = scores_of(scores, Label::Abnormal);
    if normal.is_empty() {
        return Err(Error::MissingClass(Label::Normal));
    }
    if abnormal.is_empty() {
        return Err(Error::MissingClass(Label::Abnormal));
    }
    Ok((
        EmpiricalCdf::from_vec(normal)?,
        EmpiricalCdf::from_vec(abnormal)?,
    ))
}
