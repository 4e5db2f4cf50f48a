//! Synthetic anomaly data and stand-in scorers.
//!
//! Normal points have every coordinate i.i.d. `N(0, 1)`. An abnormal point
//! picks 3 coordinates with probability `p_three_dims` and 4 otherwise,
//! uniformly without replacement and independently per point, and draws
//! those from `N(anomaly_mean, spread)`; the rest stay `N(0, 1)`.
//!
//! Draw order within a point is fixed: branch uniform, coordinate subset,
//! then one standard normal per coordinate in index order.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bias::GaussianScoreModel;
use crate::ecdf::{Label, LabeledScore};
use crate::error::{Error, Result};
use crate::rng::{generate, generate_chunked, Role, StreamKey};

/// How the second parameter of the anomaly distribution is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadKind {
    #[default]
    StdDev,
    Variance,
}

fn default_dim() -> usize {
    9
}
fn default_anomaly_mean() -> f64 {
    1.6
}
fn default_anomaly_spread() -> f64 {
    0.8
}
fn default_p_three() -> f64 {
    0.4
}
fn default_alpha() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_anomaly_mean")]
    pub anomaly_mean: f64,
    #[serde(default = "default_anomaly_spread")]
    pub anomaly_spread: f64,
    #[serde(default)]
    pub spread_kind: SpreadKind,
    #[serde(default = "default_p_three")]
    pub p_three_dims: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            dim: default_dim(),
            anomaly_mean: default_anomaly_mean(),
            anomaly_spread: default_anomaly_spread(),
            spread_kind: SpreadKind::default(),
            p_three_dims: default_p_three(),
            alpha: default_alpha(),
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 4 {
            return Err(Error::config(format!(
                "dim must be at least 4, got {}",
                self.dim
            )));
        }
        if !self.anomaly_mean.is_finite() {
            return Err(Error::config("anomaly_mean must be finite"));
        }
        if !(self.anomaly_spread > 0.0 && self.anomaly_spread.is_finite()) {
            return Err(Error::config("anomaly_spread must be positive"));
        }
        if !(0.0..=1.0).contains(&self.p_three_dims) {
            return Err(Error::config("p_three_dims must lie in [0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("alpha must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Standard deviation of the elevated coordinates.
    pub fn anomaly_std(&self) -> f64 {
        match self.spread_kind {
            SpreadKind::StdDev => self.anomaly_spread,
            SpreadKind::Variance => self.anomaly_spread.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub features: Vec<f64>,
    pub label: Label,
}

fn fill_normal(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
}

/// Writes one abnormal point into `out` and returns how many coordinates
/// were elevated.
fn fill_abnormal(
    cfg: &SyntheticConfig,
    rng: &mut ChaCha8Rng,
    out: &mut [f64],
    mask: &mut [bool],
) -> usize {
    let k = if rng.random::<f64>() < cfg.p_three_dims {
        3
    } else {
        4
    };
    mask.iter_mut().for_each(|m| *m = false);
    for i in index::sample(rng, cfg.dim, k) {
        mask[i] = true;
    }
    let mean = cfg.anomaly_mean;
    let std = cfg.anomaly_std();
    for (x, &elevated) in out.iter_mut().zip(mask.iter()) {
        let z: f64 = rng.sample(StandardNormal);
        *x = if elevated { mean + std * z } else { z };
    }
    k
}

fn fill_point(
    cfg: &SyntheticConfig,
    label: Label,
    rng: &mut ChaCha8Rng,
    out: &mut [f64],
    mask: &mut [bool],
) {
    match label {
        Label::Normal => fill_normal(rng, out),
        Label::Abnormal => {
            fill_abnormal(cfg, rng, out, mask);
        }
    }
}

/// `n` points of one class from the stream `key`.
pub fn sample_class_points(
    cfg: &SyntheticConfig,
    key: StreamKey,
    n: usize,
    label: Label,
) -> Result<Vec<DataPoint>> {
    cfg.validate()?;
    let dim = cfg.dim;
    Ok(generate_chunked(cfg.seed, key, n, |rng, len, out| {
        let mut mask = vec![false; dim];
        for _ in 0..len {
            let mut features = vec![0.0; dim];
            fill_point(cfg, label, rng, &mut features, &mut mask);
            out.push(DataPoint { features, label });
        }
    }))
}

/// `n` i.i.d. draws from the mixture; each point is abnormal with
/// probability `cfg.alpha`. Fully determined by `(cfg, n)`.
pub fn sample_dataset(cfg: &SyntheticConfig, n: usize) -> Result<Vec<DataPoint>> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::config("dataset size must be at least 1"));
    }
    let key = StreamKey::new(Role::Dataset, 0, 0, 0);
    let dim = cfg.dim;
    Ok(generate_chunked(cfg.seed, key, n, |rng, len, out| {
        let mut mask = vec![false; dim];
        for _ in 0..len {
            let label = if rng.random::<f64>() < cfg.alpha {
                Label::Abnormal
            } else {
                Label::Normal
            };
            let mut features = vec![0.0; dim];
            fill_point(cfg, label, rng, &mut features, &mut mask);
            out.push(DataPoint { features, label });
        }
    }))
}

/// Number of coordinates elevated in each of `n` abnormal draws, consuming
/// the stream exactly as [`sample_class_points`] does.
pub fn elevated_dim_counts(cfg: &SyntheticConfig, key: StreamKey, n: usize) -> Result<Vec<usize>> {
    cfg.validate()?;
    let dim = cfg.dim;
    Ok(generate_chunked(cfg.seed, key, n, |rng, len, out| {
        let mut buf = vec![0.0; dim];
        let mut mask = vec![false; dim];
        for _ in 0..len {
            out.push(fill_abnormal(cfg, rng, &mut buf, &mut mask));
        }
    }))
}

/// Stand-ins for trained detectors. Higher score means more anomalous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StandInScorer {
    /// `||x - c||`, with `c` the mean of normal training data.
    CenterDistance { center: Vec<f64> },
    /// `||x - c|| - lambda_c * ||x - c_a||`, pulling scores up near the mean
    /// of the labelled anomalies.
    SupervisedContrast {
        center: Vec<f64>,
        abnormal_center: Vec<f64>,
        lambda_c: f64,
    },
    /// Scores drawn directly from a Gaussian score model.
    GaussianDirect { model: GaussianScoreModel },
}

fn distance(x: &[f64], c: &[f64]) -> f64 {
    x.iter()
        .zip(c)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

impl StandInScorer {
    pub fn dim(&self) -> Option<usize> {
        match self {
            StandInScorer::CenterDistance { center } => Some(center.len()),
            StandInScorer::SupervisedContrast { center, .. } => Some(center.len()),
            StandInScorer::GaussianDirect { .. } => None,
        }
    }

    pub fn is_point_scorer(&self) -> bool {
        self.dim().is_some()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        match self.dim() {
            None => Err(Error::config(
                "a gaussian_direct scorer draws scores directly and does not score points",
            )),
            Some(d) if d != x.len() => Err(Error::config(format!(
                "point has {} features, scorer expects {d}",
                x.len()
            ))),
            Some(_) => Ok(self.score_unchecked(x)),
        }
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            StandInScorer::CenterDistance { center } => distance(x, center),
            StandInScorer::SupervisedContrast {
                center,
                abnormal_center,
                lambda_c,
            } => {
                let base = distance(x, center);
                if *lambda_c == 0.0 {
                    base
                } else {
                    base - lambda_c * distance(x, abnormal_center)
                }
            }
            StandInScorer::GaussianDirect { .. } => f64::NAN,
        }
    }
}

fn mean_features(points: &[DataPoint]) -> Result<Vec<f64>> {
    let first = points.first().ok_or(Error::EmptySample)?;
    let dim = first.features.len();
    let mut sum = vec![0.0; dim];
    for p in points {
        if p.features.len() != dim {
            return Err(Error::config(
                "training points have inconsistent dimensions",
            ));
        }
        for (s, x) in sum.iter_mut().zip(&p.features) {
            *s += x;
        }
    }
    let n = points.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

pub fn fit_center_scorer(train_normal: &[DataPoint]) -> Result<StandInScorer> {
    Ok(StandInScorer::CenterDistance {
        center: mean_features(train_normal)?,
    })
}

pub fn fit_contrast_scorer(
    train_normal: &[DataPoint],
    train_abnormal: &[DataPoint],
    lambda_c: f64,
) -> Result<StandInScorer> {
    if !(lambda_c >= 0.0 && lambda_c.is_finite()) {
        return Err(Error::config(format!(
            "lambda_c must be >= 0, got {lambda_c}"
        )));
    }
    let center = mean_features(train_normal)?;
    let abnormal_center = mean_features(train_abnormal)?;
    if center.len() != abnormal_center.len() {
        return Err(Error::config(
            "normal and abnormal training data differ in dimension",
        ));
    }
    Ok(StandInScorer::SupervisedContrast {
        center,
        abnormal_center,
        lambda_c,
    })
}

/// Training-set sizes and contrast weight for [`train_stand_in_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    #[serde(default = "TrainingConfig::default_normal")]
    pub n_normal: usize,
    #[serde(default = "TrainingConfig::default_abnormal")]
    pub n_abnormal: usize,
    #[serde(default = "TrainingConfig::default_lambda")]
    pub lambda_c: f64,
}

impl TrainingConfig {
    fn default_normal() -> usize {
        10_000
    }
    fn default_abnormal() -> usize {
        1_000
    }
    fn default_lambda() -> f64 {
        0.5
    }
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            n_normal: Self::default_normal(),
            n_abnormal: Self::default_abnormal(),
            lambda_c: Self::default_lambda(),
        }
    }
}

/// Fits the baseline (center) and treatment (contrast) scorers on training
/// streams that no calibration or test stream shares.
pub fn train_stand_in_pair(
    cfg: &SyntheticConfig,
    training: &TrainingConfig,
) -> Result<(StandInScorer, StandInScorer)> {
    let key = StreamKey::new(Role::Train, 0, 0, 0);
    let normal = sample_class_points(cfg, key.with_part(0), training.n_normal, Label::Normal)?;
    let abnormal =
        sample_class_points(cfg, key.with_part(1), training.n_abnormal, Label::Abnormal)?;
    Ok((
        fit_center_scorer(&normal)?,
        fit_contrast_scorer(&normal, &abnormal, training.lambda_c)?,
    ))
}

/// Draws `n` points of one class and scores each with both scorers, without
/// materialising the points. Both scorers see the same points.
pub fn score_class_pair(
    cfg: &SyntheticConfig,
    key: StreamKey,
    n: usize,
    label: Label,
    s: &StandInScorer,
    sprime: &StandInScorer,
) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    for scorer in [s, sprime] {
        match scorer.dim() {
            Some(d) if d == cfg.dim => {}
            Some(d) => {
                return Err(Error::config(format!(
                    "scorer expects {d} features, data has {}",
                    cfg.dim
                )))
            }
            None => return Err(Error::config("point data needs point scorers")),
        }
    }
    let dim = cfg.dim;
    let pairs: Vec<(f64, f64)> = generate_chunked(cfg.seed, key, n, |rng, len, out| {
        let mut x = vec![0.0; dim];
        let mut mask = vec![false; dim];
        for _ in 0..len {
            fill_point(cfg, label, rng, &mut x, &mut mask);
            out.push((s.score_unchecked(&x), sprime.score_unchecked(&x)));
        }
    });
    Ok(pairs.into_iter().unzip())
}

/// `n` standard normal draws from stream `key` under `seed`.
pub fn standard_normals(seed: u64, key: StreamKey, n: usize) -> Vec<f64> {
    generate(seed, key, n, |rng| rng.sample(StandardNormal))
}

/// Scores of one class for two Gaussian score models, driven by the same
/// standard normal draws: `mu + sigma * z` for each model.
pub fn gaussian_class_pair(
    m: &GaussianScoreModel,
    mprime: &GaussianScoreModel,
    seed: u64,
    key: StreamKey,
    n: usize,
    label: Label,
) -> (Vec<f64>, Vec<f64>) {
    let (mu, sigma, mup, sigmap) = match label {
        Label::Normal => (m.mu0, m.sigma0, mprime.mu0, mprime.sigma0),
        Label::Abnormal => (m.mua, m.sigmaa, mprime.mua, mprime.sigmaa),
    };
    standard_normals(seed, key, n)
        .into_iter()
        .map(|z| (mu + sigma * z, mup + sigmap * z))
        .unzip()
}

/// `n0` normal then `n1` abnormal scores drawn from `m`.
pub fn sample_gaussian_scores(
    m: &GaussianScoreModel,
    n0: usize,
    n1: usize,
    seed: u64,
) -> Result<Vec<LabeledScore>> {
    m.validate().map_err(|e| Error::config(e.to_string()))?;
    if n0 == 0 || n1 == 0 {
        return Err(Error::config("both class counts must be positive"));
    }
    let key = StreamKey::new(Role::Dataset, 0, 0, 0);
    let normal = standard_normals(seed, key.with_part(0), n0);
    let abnormal = standard_normals(seed, key.with_part(1), n1);
    Ok(normal
        .into_iter()
        .map(|z| LabeledScore::normal(m.mu0 + m.sigma0 * z))
        .chain(
            abnormal
                .into_iter()
                .map(|z| LabeledScore::abnormal(m.mua + m.sigmaa * z)),
        )
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{evaluate_detector, TargetLevel};

    fn point(v: &[f64]) -> DataPoint {
        DataPoint {
            features: v.to_vec(),
            label: Label::Normal,
        }
    }

    #[test]
    fn config_validation() {
        assert!(SyntheticConfig::default().validate().is_ok());
        let bad = SyntheticConfig {
            dim: 3,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = SyntheticConfig {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let var = SyntheticConfig {
            spread_kind: SpreadKind::Variance,
            ..Default::default()
        };
        assert!((var.anomaly_std() - 0.8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dataset_is_reproducible() {
        let cfg = SyntheticConfig {
            seed: 17,
            ..Default::default()
        };
        let a = sample_dataset(&cfg, 5000).unwrap();
        let b = sample_dataset(&cfg, 5000).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.features.len() == 9));
        let other = sample_dataset(&SyntheticConfig { seed: 18, ..cfg }, 5000).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn center_scorer_basics() {
        let s = fit_center_scorer(&[point(&[0.0, 0.0, 0.0, 0.0])]).unwrap();
        assert_eq!(s.score(&[0.0; 4]).unwrap(), 0.0);
        assert!(s.score(&[0.0; 3]).is_err());
        assert!(matches!(fit_center_scorer(&[]), Err(Error::EmptySample)));

        let train = [point(&[1.0, 2.0, 0.0, -1.0]), point(&[3.0, 0.0, 1.0, 1.0])];
        let shift = [0.5, -2.0, 7.0, 1.25];
        let moved: Vec<_> = train
            .iter()
            .map(|p| {
                point(
                    &p.features
                        .iter()
                        .zip(shift)
                        .map(|(a, b)| a + b)
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        let q = [0.3, 0.1, -0.4, 2.0];
        let q_moved: Vec<f64> = q.iter().zip(shift).map(|(a, b)| a + b).collect();
        let a = fit_center_scorer(&train).unwrap().score(&q).unwrap();
        let b = fit_center_scorer(&moved).unwrap().score(&q_moved).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn contrast_scorer_reduces_to_center() {
        let normal = [point(&[0.0, 1.0, 0.0, 0.0]), point(&[2.0, 1.0, 0.0, 0.0])];
        let abnormal = [point(&[5.0, 5.0, 5.0, 5.0])];
        let center = fit_center_scorer(&normal).unwrap();
        let zero = fit_contrast_scorer(&normal, &abnormal, 0.0).unwrap();
        for x in [[0.0, 0.0, 0.0, 0.0], [1.0, -3.0, 2.0, 0.5]] {
            assert_eq!(center.score(&x).unwrap(), zero.score(&x).unwrap());
        }
        let half = fit_contrast_scorer(&normal, &abnormal, 0.5).unwrap();
        let at_ca = half.score(&[5.0, 5.0, 5.0, 5.0]).unwrap();
        let c = [1.0, 1.0, 0.0, 0.0];
        assert!((at_ca - distance(&[5.0; 4], &c)).abs() < 1e-12);
        assert!(fit_contrast_scorer(&normal, &abnormal, -1.0).is_err());
        assert!(fit_contrast_scorer(&normal, &[], 0.5).is_err());
    }

    #[test]
    fn abnormal_points_score_higher() {
        let cfg = SyntheticConfig::default();
        let (s, _) = train_stand_in_pair(&cfg, &TrainingConfig::default()).unwrap();
        let key = StreamKey::new(Role::Test, 0, 0, 0);
        let (n, _) = score_class_pair(&cfg, key, 5000, Label::Normal, &s, &s).unwrap();
        let (a, _) =
            score_class_pair(&cfg, key.with_part(1), 5000, Label::Abnormal, &s, &s).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&a) > mean(&n) + 0.5);
    }

    #[test]
    fn scored_pairs_match_materialised_points() {
        let cfg = SyntheticConfig {
            seed: 4,
            ..Default::default()
        };
        let (s, sp) = train_stand_in_pair(&cfg, &TrainingConfig::default()).unwrap();
        let key = StreamKey::new(Role::Calibration, 2, 3, 1);
        let pts = sample_class_points(&cfg, key, 300, Label::Abnormal).unwrap();
        let (a, b) = score_class_pair(&cfg, key, 300, Label::Abnormal, &s, &sp).unwrap();
        for (p, (x, y)) in pts.iter().zip(a.iter().zip(&b)) {
            assert_eq!(s.score(&p.features).unwrap(), *x);
            assert_eq!(sp.score(&p.features).unwrap(), *y);
        }
    }

    #[test]
    fn gaussian_scores() {
        let m = GaussianScoreModel::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let scores = sample_gaussian_scores(&m, 200_000, 200_000, 3).unwrap();
        let ev = evaluate_detector(&scores, TargetLevel::default()).unwrap();
        assert!((ev.tpr - 0.05).abs() < 0.004, "{}", ev.tpr);
        assert_eq!(
            scores,
            sample_gaussian_scores(&m, 200_000, 200_000, 3).unwrap()
        );

        let sharp = GaussianScoreModel::new(0.0, 1.0, 5.0, 1e-9).unwrap();
        let scores = sample_gaussian_scores(&sharp, 10_000, 1000, 3).unwrap();
        assert_eq!(
            evaluate_detector(&scores, TargetLevel::default())
                .unwrap()
                .tpr,
            1.0
        );

        assert!(sample_gaussian_scores(&m, 0, 10, 1).is_err());
        let bad = GaussianScoreModel { sigma0: -1.0, ..m };
        assert!(matches!(
            sample_gaussian_scores(&bad, 1, 1, 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn coupled_gaussian_pairs_coincide_for_identical_models() {
        let m = GaussianScoreModel::new(1.0, 2.0, 4.0, 0.5).unwrap();
        let key = StreamKey::new(Role::Rate, 0, 0, 0);
        let (a, b) = gaussian_class_pair(&m, &m, 5, key, 1000, Label::Abnormal);
        assert_eq!(a, b);
    }
}
