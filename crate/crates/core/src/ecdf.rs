//! Empirical distribution functions over anomaly scores.
//!
//! The CDF uses the right-continuous `<=` convention: `F(t)` is the fraction
//! of the sample at or below `t`. Ties are counted with multiplicity and the
//! sample is kept fully sorted in memory.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground-truth class of a scored instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Abnormal,
}

impl Label {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Label::Normal),
            1 => Some(Label::Abnormal),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::Abnormal => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
        })
    }
}

/// One anomaly score together with its ground-truth label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    pub score: f64,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_tag: Option<String>,
}

impl LabeledScore {
    pub fn new(score: f64, label: Label) -> Self {
        Self {
            score,
            label,
            class_tag: None,
        }
    }

    pub fn normal(score: f64) -> Self {
        Self::new(score, Label::Normal)
    }

    pub fn abnormal(score: f64) -> Self {
        Self::new(score, Label::Abnormal)
    }

    pub fn with_class(mut self, tag: impl Into<String>) -> Self {
        self.class_tag = Some(tag.into());
        self
    }
}

/// Scores of one class, in input order.
pub fn scores_of(scores: &[LabeledScore], label: Label) -> Vec<f64> {
    scores
        .iter()
        .filter(|s| s.label == label)
        .map(|s| s.score)
        .collect()
}

/// A sorted score sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        Self::from_vec(samples.to_vec())
    }

    /// Takes ownership of `values` and sorts it in place.
    pub fn from_vec(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteScore { index, value });
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; an empty sample cannot be constructed.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Number of sample values `<= t`.
    pub fn count_le(&self, t: f64) -> usize {
        self.values.partition_point(|&v| v <= t)
    }

    /// `F(t) = #{v <= t} / n`.
    pub fn eval(&self, t: f64) -> f64 {
        self.count_le(t) as f64 / self.len() as f64
    }

    /// Fraction of the sample strictly above `t`, i.e. `1 - F(t)`.
    pub fn exceedance(&self, t: f64) -> f64 {
        (self.len() - self.count_le(t)) as f64 / self.len() as f64
    }

    /// The `k`-th smallest value, 1-indexed.
    pub fn order_statistic(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.len() {
            return Err(Error::IndexOutOfRange { k, n: self.len() });
        }
        Ok(self.values[k - 1])
    }

    /// Kolmogorov distance `sup_t |F(t) - G(t)|` to a continuous CDF `G`.
    ///
    /// For continuous `G` the supremum is attained at a jump of the step
    /// function, so checking both sides of every sample point is exact.
    pub fn sup_distance<G: Fn(f64) -> f64>(&self, cdf: G) -> f64 {
        let n = self.len() as f64;
        let mut worst = 0.0f64;
        let mut i = 0;
        while i < self.values.len() {
            let v = self.values[i];
            let mut j = i;
            while j < self.values.len() && self.values[j] == v {
                j += 1;
            }
            let g = cdf(v);
            let below = i as f64 / n;
            let at = j as f64 / n;
            worst = worst.max((g - below).abs()).max((at - g).abs());
            i = j;
        }
        worst
    }
}

/// Parameters of the Massart tail inequality
/// `P(sqrt(n) * sup|F_n - F| > lambda) <= 2 exp(-2 lambda^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassartQuery {
    n: usize,
    lambda: f64,
}

impl MassartQuery {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("Massart query needs n >= 1"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        Ok(Self { n, lambda })
    }

    /// The deviation scale that gives tail probability `delta`.
    pub fn for_confidence(n: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 2.0) {
            return Err(Error::domain(format!(
                "delta must lie in (0, 2), got {delta}"
            )));
        }
        Self::new(n, ((2.0 / delta).ln() / 2.0).sqrt())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Half-width of the uniform confidence band in CDF units, `lambda / sqrt(n)`.
    pub fn band(&self) -> f64 {
        self.lambda / (self.n as f64).sqrt()
    }
}

/// `2 exp(-2 lambda^2)`. Does not depend on `n`.
pub fn massart_tail(q: &MassartQuery) -> f64 {
    2.0 * (-2.0 * q.lambda * q.lambda).exp()
}
