//! Monte-Carlo experiments: convergence grids, coverage of the sample-size
//! bound, the `n^{-1/2}` rate check, and per-class scenario reports.
//!
//! Every run draws from its own streams keyed by `(role, cell, run, part)`
//! under the master seed, and results are reduced in run order, so output is
//! identical for any worker count.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias::{
    classify_bias_direction, gaussian_relative_bias, BiasDirection, GaussianScoreModel,
};
use crate::complexity::{required_samples, ComplexityInput};
use crate::detector::{exceedance, threshold_unsorted, Mode, TargetLevel, ThresholdRule};
use crate::ecdf::Label;
use crate::error::{Error, Result};
use crate::io::ScoreRow;
use crate::rng::{Role, StreamKey};
use crate::synthetic::{gaussian_class_pair, score_class_pair, StandInScorer, SyntheticConfig};

/// Baseline `s` and treatment `s'` scorers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScorerPair {
    /// Point scorers applied to synthetic data. `data.alpha` and `data.seed`
    /// are ignored; the experiment supplies both.
    Points {
        data: SyntheticConfig,
        baseline: StandInScorer,
        treatment: StandInScorer,
    },
    /// Scores drawn directly from Gaussian score models.
    Gaussian {
        baseline: GaussianScoreModel,
        treatment: GaussianScoreModel,
    },
}

impl ScorerPair {
    pub fn from_stand_ins(
        data: SyntheticConfig,
        baseline: StandInScorer,
        treatment: StandInScorer,
    ) -> Result<Self> {
        match (&baseline, &treatment) {
            (
                StandInScorer::GaussianDirect { model: m },
                StandInScorer::GaussianDirect { model: mp },
            ) => Ok(ScorerPair::gaussian(*m, *mp)),
            (b, t) if b.is_point_scorer() && t.is_point_scorer() => Ok(ScorerPair::Points {
                data,
                baseline,
                treatment,
            }),
            _ => Err(Error::config(
                "scorer pair must be two point scorers or two gaussian_direct scorers",
            )),
        }
    }

    pub fn gaussian(baseline: GaussianScoreModel, treatment: GaussianScoreModel) -> Self {
        ScorerPair::Gaussian {
            baseline,
            treatment,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ScorerPair::Points { data, .. } => data.validate(),
            ScorerPair::Gaussian {
                baseline,
                treatment,
            } => {
                baseline.validate()?;
                treatment.validate()
            }
        }
    }

    /// Scores of `n` draws of one class under both scorers. Both scorers see
    /// the same underlying draws.
    pub fn class_scores(
        &self,
        seed: u64,
        key: StreamKey,
        n: usize,
        label: Label,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            ScorerPair::Points {
                data,
                baseline,
                treatment,
            } => {
                let cfg = SyntheticConfig {
                    seed,
                    alpha: 0.5,
                    ..data.clone()
                };
                score_class_pair(&cfg, key, n, label, baseline, treatment)
            }
            ScorerPair::Gaussian {
                baseline,
                treatment,
            } => Ok(gaussian_class_pair(
                baseline, treatment, seed, key, n, label,
            )),
        }
    }
}

fn run_in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn require_fix_fpr(level: TargetLevel) -> Result<()> {
    level.validate()?;
    if level.mode() != Mode::FixFpr {
        return Err(Error::config("experiments run in fix_fpr mode only"));
    }
    Ok(())
}

/// `round(alpha * n)`.
fn abnormal_count(alpha: f64, n: usize) -> usize {
    (alpha * n as f64).round() as usize
}

/// Summary statistics of one metric across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator).
    pub std: f64,
}

impl Stats {
    /// Quantiles interpolate linearly between order statistics (the
    /// `(n - 1) p` rule). Sums run in slice order.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::config(
                "need at least two values for summary statistics",
            ));
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        Ok(Self {
            min: sorted[0],
            q25: interpolated_quantile(&sorted, 0.25),
            median: interpolated_quantile(&sorted, 0.5),
            q75: interpolated_quantile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
            mean,
            std: var.sqrt(),
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }
}

fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    interpolated_quantile(&sorted, 0.5)
}

fn default_n_values() -> Vec<usize> {
    vec![100, 1_000, 10_000]
}
fn default_alpha_values() -> Vec<f64> {
    vec![0.01, 0.05, 0.1, 0.2]
}
fn default_runs() -> usize {
    1_500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceGrid {
    /// Calibration sample sizes.
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    /// Abnormal fractions.
    #[serde(default = "default_alpha_values")]
    pub alpha_values: Vec<f64>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub level: TargetLevel,
    #[serde(default)]
    pub master_seed: u64,
}

impl Default for ConvergenceGrid {
    fn default() -> Self {
        Self {
            n_values: default_n_values(),
            alpha_values: default_alpha_values(),
            runs: default_runs(),
            level: TargetLevel::default(),
            master_seed: 0,
        }
    }
}

impl ConvergenceGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.alpha_values.is_empty() {
            return Err(Error::config("grid needs at least one n and one alpha"));
        }
        if self.runs < 2 {
            return Err(Error::config("grid needs at least two runs per cell"));
        }
        if self.n_values.contains(&0) {
            return Err(Error::config("every n must be positive"));
        }
        if self.alpha_values.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::config("every alpha must lie in (0, 1)"));
        }
        require_fix_fpr(self.level)
    }
}

/// Whether the test set is redrawn for every run or drawn once per alpha.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSetPolicy {
    #[default]
    Resampled,
    Fixed,
}

/// How a calibration sample of size `n` divides into classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassSplit {
    /// `round(alpha n)` abnormal, the rest normal.
    #[default]
    Deterministic,
    /// Each point abnormal independently with probability `alpha`.
    Binomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceOptions {
    /// Normal points in the test set; it holds `round(alpha * test_normal)`
    /// abnormal points alongside.
    #[serde(default = "ConvergenceOptions::default_test_normal")]
    pub test_normal: usize,
    #[serde(default)]
    pub test_policy: TestSetPolicy,
    #[serde(default)]
    pub class_split: ClassSplit,
    /// Worker threads; `None` uses the ambient rayon pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ConvergenceOptions {
    fn default_test_normal() -> usize {
        20_000
    }
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            test_normal: Self::default_test_normal(),
            test_policy: TestSetPolicy::default(),
            class_split: ClassSplit::default(),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub alpha: f64,
    pub xi: Stats,
    /// Test-set FPR of the treatment scorer.
    pub fpr: Stats,
    /// Median of `|fpr - target|` across runs.
    pub fpr_median_abs_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub runs: usize,
    pub level: TargetLevel,
    pub master_seed: u64,
    pub cells: Vec<CellSummary>,
}

impl QuantileSummary {
    pub fn cell(&self, n: usize, alpha: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.n == n && c.alpha == alpha)
    }
}

struct TestScores {
    normal_sprime: Vec<f64>,
    abnormal_s: Vec<f64>,
    abnormal_sprime: Vec<f64>,
}

fn draw_test_set(
    pair: &ScorerPair,
    seed: u64,
    key: StreamKey,
    n_normal: usize,
    n_abnormal: usize,
) -> Result<TestScores> {
    let (_, normal_sprime) = pair.class_scores(seed, key.with_part(0), n_normal, Label::Normal)?;
    let (abnormal_s, abnormal_sprime) =
        pair.class_scores(seed, key.with_part(1), n_abnormal, Label::Abnormal)?;
    Ok(TestScores {
        normal_sprime,
        abnormal_s,
        abnormal_sprime,
    })
}

/// Stream key of the shared test set for the `alpha_index`-th alpha under
/// [`TestSetPolicy::Fixed`]. Run index `u64::MAX` is never used by a run.
fn fixed_test_key(alpha_index: usize) -> StreamKey {
    StreamKey::new(Role::Test, alpha_index as u64, u64::MAX, 0)
}

/// Calibration and test stream keys of one run.
pub fn run_stream_keys(
    cell: usize,
    run: usize,
    policy: TestSetPolicy,
    alpha_index: usize,
) -> [StreamKey; 2] {
    let calibration = StreamKey::new(Role::Calibration, cell as u64, run as u64, 0);
    let test = match policy {
        TestSetPolicy::Resampled => StreamKey::new(Role::Test, cell as u64, run as u64, 0),
        TestSetPolicy::Fixed => fixed_test_key(alpha_index),
    };
    [calibration, test]
}

/// Sizes of the test set and the number of abnormal points in it.
fn test_sizes(opts: &ConvergenceOptions, alpha: f64) -> Result<(usize, usize)> {
    let n1 = abnormal_count(alpha, opts.test_normal);
    if opts.test_normal == 0 || n1 == 0 {
        return Err(Error::config(format!(
            "test set with {} normal points has no abnormal points at alpha = {alpha}",
            opts.test_normal
        )));
    }
    Ok((opts.test_normal, n1))
}

/// For every `(n, alpha)` cell and run: thresholds both scorers on a fresh
/// calibration sample, then measures `xi_hat` and the treatment FPR on the
/// test set.
pub fn run_convergence(
    grid: &ConvergenceGrid,
    pair: &ScorerPair,
    opts: &ConvergenceOptions,
) -> Result<QuantileSummary> {
    grid.validate()?;
    pair.validate()?;
    let seed = grid.master_seed;
    let level = grid.level;
    run_in_pool(opts.workers, || {
        let mut fixed: HashMap<usize, TestScores> = HashMap::new();
        if opts.test_policy == TestSetPolicy::Fixed {
            for (ai, &alpha) in grid.alpha_values.iter().enumerate() {
                let (n0, n1) = test_sizes(opts, alpha)?;
                fixed.insert(ai, draw_test_set(pair, seed, fixed_test_key(ai), n0, n1)?);
            }
        }
        let mut cells = Vec::new();
        for (ni, &n) in grid.n_values.iter().enumerate() {
            for (ai, &alpha) in grid.alpha_values.iter().enumerate() {
                let cell = ni * grid.alpha_values.len() + ai;
                let (test_n0, test_n1) = test_sizes(opts, alpha)?;
                let outcomes: Vec<(f64, f64)> = (0..grid.runs)
                    .into_par_iter()
                    .map(|run| {
                        let [cal_key, test_key] = run_stream_keys(cell, run, opts.test_policy, ai);
                        let n_abnormal = match opts.class_split {
                            ClassSplit::Deterministic => abnormal_count(alpha, n),
                            ClassSplit::Binomial => binomial_count(seed, cal_key, n, alpha),
                        };
                        let n_normal = n - n_abnormal;
                        if n_normal == 0 {
                            return Err(Error::config(format!(
                                "calibration sample of {n} at alpha = {alpha} has no normal points"
                            )));
                        }
                        let (mut cal_s, mut cal_sp) =
                            pair.class_scores(seed, cal_key, n_normal, Label::Normal)?;
                        let tau =
                            threshold_unsorted(&mut cal_s, level, ThresholdRule::Conservative)?
                                .value;
                        let tau_p =
                            threshold_unsorted(&mut cal_sp, level, ThresholdRule::Conservative)?
                                .value;
                        let owned;
                        let test = match opts.test_policy {
                            TestSetPolicy::Fixed => &fixed[&ai],
                            TestSetPolicy::Resampled => {
                                owned = draw_test_set(pair, seed, test_key, test_n0, test_n1)?;
                                &owned
                            }
                        };
                        let xi = exceedance(&test.abnormal_sprime, tau_p)
                            - exceedance(&test.abnormal_s, tau);
                        let fpr = exceedance(&test.normal_sprime, tau_p);
                        Ok((xi, fpr))
                    })
                    .collect::<Result<_>>()?;
                let (xis, fprs): (Vec<f64>, Vec<f64>) = outcomes.into_iter().unzip();
                let target = level.target_rate();
                let devs: Vec<f64> = fprs.iter().map(|f| (f - target).abs()).collect();
                cells.push(CellSummary {
                    n,
                    alpha,
                    xi: Stats::from_values(&xis)?,
                    fpr: Stats::from_values(&fprs)?,
                    fpr_median_abs_dev: median(&devs),
                });
            }
        }
        Ok(QuantileSummary {
            runs: grid.runs,
            level,
            master_seed: seed,
            cells,
        })
    })?
}

fn binomial_count(seed: u64, key: StreamKey, n: usize, alpha: f64) -> usize {
    use rand::Rng;
    let mut rng = crate::rng::stream_rng(seed, key.with_part(2), 0);
    (0..n).filter(|_| rng.random::<f64>() < alpha).count()
}

/// `xi_hat` from one validation sample of `n` points, `round(alpha n)` of
/// them abnormal, with thresholds and recalls both taken from that sample.
fn validation_xi(
    pair: &ScorerPair,
    seed: u64,
    key: StreamKey,
    n: usize,
    alpha: f64,
    level: TargetLevel,
) -> Result<f64> {
    let n1 = abnormal_count(alpha, n);
    let n0 = n - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::config(format!(
            "validation sample of {n} at alpha = {alpha} lacks a class"
        )));
    }
    let (mut normal_s, mut normal_sp) =
        pair.class_scores(seed, key.with_part(0), n0, Label::Normal)?;
    let (abnormal_s, abnormal_sp) =
        pair.class_scores(seed, key.with_part(1), n1, Label::Abnormal)?;
    let tau = threshold_unsorted(&mut normal_s, level, ThresholdRule::Conservative)?.value;
    let tau_p = threshold_unsorted(&mut normal_sp, level, ThresholdRule::Conservative)?.value;
    Ok(exceedance(&abnormal_sp, tau_p) - exceedance(&abnormal_s, tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageOptions {
    #[serde(default)]
    pub level: TargetLevel,
    #[serde(default)]
    pub master_seed: u64,
    /// Upper limit on `prescribed_n * trials`.
    #[serde(default = "CoverageOptions::default_budget")]
    pub budget_draws: f64,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl CoverageOptions {
    fn default_budget() -> f64 {
        1e9
    }
}

impl Default for CoverageOptions {
    fn default() -> Self {
        Self {
            level: TargetLevel::default(),
            master_seed: 0,
            budget_draws: Self::default_budget(),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub prescribed_n: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    pub violations: usize,
    pub trials: usize,
    pub observed_violation_rate: f64,
    /// `3 sqrt(delta (1 - delta) / trials)`.
    pub monte_carlo_slack: f64,
    pub xi_true: f64,
    pub xi_hat_mean: f64,
}

impl CoverageReport {
    /// Violation rate within `delta` plus the Monte-Carlo slack.
    pub fn holds(&self) -> bool {
        self.observed_violation_rate <= self.delta + self.monte_carlo_slack
    }
}

/// Draws `trials` validation samples of the prescribed size and counts how
/// often `|xi_hat - xi| > epsilon`.
pub fn run_coverage(
    c: &ComplexityInput,
    baseline: &GaussianScoreModel,
    treatment: &GaussianScoreModel,
    trials: usize,
    opts: &CoverageOptions,
) -> Result<CoverageReport> {
    if trials < 100 {
        return Err(Error::config(format!(
            "coverage needs at least 100 trials, got {trials}"
        )));
    }
    require_fix_fpr(opts.level)?;
    let prescribed_n = required_samples(c)?;
    let draws = prescribed_n as f64 * trials as f64;
    if draws > opts.budget_draws {
        return Err(Error::TooLarge {
            what: "coverage draw count",
            value: draws,
            limit: opts.budget_draws,
        });
    }
    let xi_true = gaussian_relative_bias(baseline, treatment, opts.level.q())?.xi;
    let pair = ScorerPair::gaussian(*baseline, *treatment);
    let alpha = c.params.alpha;
    let n = prescribed_n as usize;
    let xis: Vec<f64> = run_in_pool(opts.workers, || {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let key = StreamKey::new(Role::Coverage, 0, t as u64, 0);
                validation_xi(&pair, opts.master_seed, key, n, alpha, opts.level)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let violations = xis
        .iter()
        .filter(|x| (*x - xi_true).abs() > c.epsilon)
        .count();
    let delta = c.params.delta;
    Ok(CoverageReport {
        prescribed_n,
        epsilon: c.epsilon,
        delta,
        alpha,
        violations,
        trials,
        observed_violation_rate: violations as f64 / trials as f64,
        monte_carlo_slack: 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt(),
        xi_true,
        xi_hat_mean: xis.iter().sum::<f64>() / trials as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateOptions {
    #[serde(default = "RateOptions::default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub level: TargetLevel,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl RateOptions {
    fn default_alpha() -> f64 {
        0.2
    }
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            alpha: Self::default_alpha(),
            level: TargetLevel::default(),
            master_seed: 0,
            workers: None,
        }
    }
}

/// Below this many runs the fitted slope is flagged as low confidence.
pub const MIN_CONFIDENT_RUNS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub n_values: Vec<usize>,
    pub runs: usize,
    /// Standard deviation of `xi_hat` at each `n`.
    pub xi_std: Vec<f64>,
    /// Least-squares slope of `ln std` against `ln n`; `None` when some
    /// standard deviation is zero and the logarithm is undefined.
    pub slope: Option<f64>,
    pub low_confidence: bool,
}

/// Regresses `ln std(xi_hat)` on `ln n`; a `1/sqrt(n)` rate gives slope -1/2.
pub fn run_rate_check(
    pair: &ScorerPair,
    n_values: &[usize],
    runs: usize,
    opts: &RateOptions,
) -> Result<RateCheck> {
    pair.validate()?;
    require_fix_fpr(opts.level)?;
    if runs < 2 {
        return Err(Error::config("rate check needs at least two runs"));
    }
    let (lo, hi) = match (n_values.iter().min(), n_values.iter().max()) {
        (Some(&lo), Some(&hi)) if lo > 0 => (lo, hi),
        _ => return Err(Error::config("rate check needs positive sample sizes")),
    };
    if n_values.len() < 2 || (hi as f64) < 100.0 * lo as f64 {
        return Err(Error::config(
            "sample-size ladder must span at least two decades",
        ));
    }
    let xi_std = run_in_pool(opts.workers, || {
        n_values
            .iter()
            .enumerate()
            .map(|(cell, &n)| {
                let xis: Vec<f64> = (0..runs)
                    .into_par_iter()
                    .map(|run| {
                        let key = StreamKey::new(Role::Rate, cell as u64, run as u64, 0);
                        validation_xi(pair, opts.master_seed, key, n, opts.alpha, opts.level)
                    })
                    .collect::<Result<_>>()?;
                Ok(Stats::from_values(&xis)?.std)
            })
            .collect::<Result<Vec<f64>>>()
    })??;
    let slope = if xi_std.iter().all(|&s| s > 0.0) {
        let xs: Vec<f64> = n_values.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = xi_std.iter().map(|s| s.ln()).collect();
        Some(least_squares_slope(&xs, &ys))
    } else {
        None
    };
    Ok(RateCheck {
        n_values: n_values.to_vec(),
        runs,
        xi_std,
        slope,
        low_confidence: runs < MIN_CONFIDENT_RUNS,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Class tag given to abnormal rows that carry none.
pub const UNTAGGED_CLASS: &str = "untagged";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    #[serde(flatten)]
    pub bias: BiasDirection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub level: TargetLevel,
    pub threshold_baseline: f64,
    pub threshold_treatment: f64,
    pub rows: Vec<ScenarioRow>,
}

struct ClassScores {
    order: Vec<String>,
    scores: HashMap<String, Vec<f64>>,
    similarity: HashMap<String, f64>,
}

fn group_abnormal(rows: &[ScoreRow]) -> Result<ClassScores> {
    let mut order = Vec::new();
    let mut scores: HashMap<String, Vec<f64>> = HashMap::new();
    let mut similarity: HashMap<String, f64> = HashMap::new();
    for row in rows.iter().filter(|r| r.labeled.label == Label::Abnormal) {
        let tag = row
            .labeled
            .class_tag
            .clone()
            .unwrap_or_else(|| UNTAGGED_CLASS.to_string());
        if !scores.contains_key(&tag) {
            order.push(tag.clone());
        }
        scores
            .entry(tag.clone())
            .or_default()
            .push(row.labeled.score);
        if let Some(sim) = row.similarity {
            match similarity.get(&tag) {
                Some(&prev) if prev != sim => {
                    return Err(Error::ClassMismatch(format!(
                        "class {tag} has conflicting similarity values {prev} and {sim}"
                    )))
                }
                _ => {
                    similarity.insert(tag, sim);
                }
            }
        }
    }
    Ok(ClassScores {
        order,
        scores,
        similarity,
    })
}

fn normal_threshold(rows: &[ScoreRow], level: TargetLevel, which: &str) -> Result<f64> {
    let mut normal: Vec<f64> = rows
        .iter()
        .filter(|r| r.labeled.label == Label::Normal)
        .map(|r| r.labeled.score)
        .collect();
    if normal.is_empty() {
        return Err(Error::ClassMismatch(format!(
            "{which} scores have no normal rows"
        )));
    }
    Ok(threshold_unsorted(&mut normal, level, ThresholdRule::Conservative)?.value)
}

/// Per abnormal test class, compares the recall of the baseline and the
/// treatment scorer, each thresholded on its own normal scores.
///
/// Rows are ordered by decreasing `similarity` when the inputs carry it;
/// classes without a similarity value follow in order of first appearance.
pub fn run_scenario_report(
    baseline: &[ScoreRow],
    treatment: &[ScoreRow],
    level: TargetLevel,
) -> Result<ScenarioReport> {
    require_fix_fpr(level)?;
    let tau_b = normal_threshold(baseline, level, "baseline")?;
    let tau_t = normal_threshold(treatment, level, "treatment")?;
    let base = group_abnormal(baseline)?;
    let treat = group_abnormal(treatment)?;
    if base.order.is_empty() {
        return Err(Error::ClassMismatch("no abnormal rows".into()));
    }
    let mut missing: Vec<&String> = base
        .order
        .iter()
        .filter(|t| !treat.scores.contains_key(*t))
        .collect();
    missing.extend(treat.order.iter().filter(|t| !base.scores.contains_key(*t)));
    if !missing.is_empty() {
        return Err(Error::ClassMismatch(format!(
            "classes present in only one input: {}",
            missing
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    let mut rows: Vec<(usize, ScenarioRow)> = base
        .order
        .iter()
        .enumerate()
        .map(|(i, tag)| {
            let tpr_b = exceedance(&base.scores[tag], tau_b);
            let tpr_t = exceedance(&treat.scores[tag], tau_t);
            let similarity = base
                .similarity
                .get(tag)
                .or(treat.similarity.get(tag))
                .copied();
            (
                i,
                ScenarioRow {
                    bias: classify_bias_direction(tpr_b, tpr_t, tag.clone()),
                    similarity,
                },
            )
        })
        .collect();
    rows.sort_by(|(ia, a), (ib, b)| match (a.similarity, b.similarity) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(ia.cmp(ib)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => ia.cmp(ib),
    });
    Ok(ScenarioReport {
        level,
        threshold_baseline: tau_b,
        threshold_treatment: tau_t,
        rows: rows.into_iter().map(|(_, r)| r).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bias::Direction;
    use crate::complexity::LipschitzConstants;
    use crate::ecdf::LabeledScore;

    fn gaussian_pair() -> ScorerPair {
        ScorerPair::gaussian(
            GaussianScoreModel::new(0.0, 1.0, 0.0, 1.0).unwrap(),
            GaussianScoreModel::new(0.0, 1.0, 3.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn stats_of_small_sample() {
        let s = Stats::from_values(&[3.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!((s.min, s.max), (1.0, 4.0));
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q25, 1.75);
        assert_eq!(s.q75, 3.25);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(Stats::from_values(&[1.0]).is_err());
    }

    #[test]
    fn degenerate_grid() {
        let grid = ConvergenceGrid {
            n_values: vec![50],
            alpha_values: vec![0.1],
            runs: 2,
            ..Default::default()
        };
        let opts = ConvergenceOptions {
            test_normal: 500,
            ..Default::default()
        };
        let s = run_convergence(&grid, &gaussian_pair(), &opts).unwrap();
        assert_eq!(s.cells.len(), 1);
        let c = &s.cells[0];
        assert!(c.xi.min <= c.xi.max && c.fpr.min <= c.fpr.max);
    }

    #[test]
    fn grid_validation() {
        let pair = gaussian_pair();
        let opts = ConvergenceOptions::default();
        for grid in [
            ConvergenceGrid {
                runs: 1,
                ..Default::default()
            },
            ConvergenceGrid {
                n_values: vec![],
                ..Default::default()
            },
            ConvergenceGrid {
                alpha_values: vec![1.0],
                ..Default::default()
            },
            ConvergenceGrid {
                level: TargetLevel::fix_tpr(0.9).unwrap(),
                ..Default::default()
            },
        ] {
            assert!(matches!(
                run_convergence(&grid, &pair, &opts),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn stream_bookkeeping_is_disjoint() {
        let grid = ConvergenceGrid::default();
        let mut seen = std::collections::HashSet::new();
        for policy in [TestSetPolicy::Resampled, TestSetPolicy::Fixed] {
            seen.clear();
            let mut calibration = std::collections::HashSet::new();
            let mut test = std::collections::HashSet::new();
            for cell in 0..grid.n_values.len() * grid.alpha_values.len() {
                let ai = cell % grid.alpha_values.len();
                for run in 0..grid.runs {
                    let [c, t] = run_stream_keys(cell, run, policy, ai);
                    assert!(calibration.insert(c), "calibration stream reused");
                    test.insert(t);
                }
            }
            assert!(calibration.is_disjoint(&test));
            // Parts 0..=2 of a calibration key are the only sub-streams used.
            for c in &calibration {
                for part in 0..3 {
                    seen.insert(c.with_part(part));
                }
            }
            assert!(test
                .iter()
                .all(|t| !seen.contains(&t.with_part(0)) && !seen.contains(&t.with_part(1))));
        }
    }

    #[test]
    fn convergence_is_worker_independent() {
        let grid = ConvergenceGrid {
            n_values: vec![100, 400],
            alpha_values: vec![0.05, 0.2],
            runs: 20,
            master_seed: 11,
            ..Default::default()
        };
        let mut opts = ConvergenceOptions {
            test_normal: 2_000,
            workers: Some(1),
            ..Default::default()
        };
        let a = run_convergence(&grid, &gaussian_pair(), &opts).unwrap();
        opts.workers = Some(3);
        let b = run_convergence(&grid, &gaussian_pair(), &opts).unwrap();
        assert_eq!(a, b);
        for c in &a.cells {
            assert!(c.fpr.min >= 0.0 && c.fpr.max <= 1.0);
            assert!(c.xi.min >= -1.0 && c.xi.max <= 1.0);
        }
    }

    #[test]
    fn coverage_for_identical_pair() {
        let m = GaussianScoreModel::new(0.0, 1.0, 1.0, 1.0).unwrap();
        let l = LipschitzConstants::uniform(1.0);
        let c = ComplexityInput::new(0.3, 0.2, 0.3, l).unwrap();
        let r = run_coverage(&c, &m, &m, 100, &CoverageOptions::default()).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.xi_true, 0.0);
        assert!(r.holds());
        assert!(r.monte_carlo_slack > 3.0 * (0.2f64 * 0.8 / 500.0).sqrt());
    }

    #[test]
    fn coverage_limits() {
        let m = GaussianScoreModel::new(0.0, 1.0, 1.0, 1.0).unwrap();
        let c = ComplexityInput::new(0.1, 0.1, 0.2, LipschitzConstants::uniform(1.0)).unwrap();
        assert!(matches!(
            run_coverage(&c, &m, &m, 99, &CoverageOptions::default()),
            Err(Error::Config(_))
        ));
        let tight = CoverageOptions {
            budget_draws: 1e6,
            ..Default::default()
        };
        assert!(matches!(
            run_coverage(&c, &m, &m, 100, &tight),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn rate_check_edge_cases() {
        let pair = gaussian_pair();
        let opts = RateOptions::default();
        assert!(run_rate_check(&pair, &[100, 1000], 5, &opts).is_err());
        let few = run_rate_check(&pair, &[100, 10_000], 2, &opts).unwrap();
        assert!(few.low_confidence);
        let m = GaussianScoreModel::new(0.0, 1.0, 2.0, 1.0).unwrap();
        let same = run_rate_check(&ScorerPair::gaussian(m, m), &[100, 10_000], 10, &opts).unwrap();
        assert_eq!(same.xi_std, vec![0.0, 0.0]);
        assert_eq!(same.slope, None);
    }

    fn rows(normal: &[f64], abnormal: &[(&str, f64, Option<f64>)]) -> Vec<ScoreRow> {
        normal
            .iter()
            .map(|&s| ScoreRow {
                labeled: LabeledScore::normal(s),
                similarity: None,
            })
            .chain(abnormal.iter().map(|&(tag, s, sim)| ScoreRow {
                labeled: LabeledScore::abnormal(s).with_class(tag),
                similarity: sim,
            }))
            .collect()
    }

    #[test]
    fn scenario_directions_and_order() {
        let normal: Vec<f64> = (1..=100).map(f64::from).collect();
        let base = rows(
            &normal,
            &[("boot", 99.0, Some(0.9)), ("shirt", 10.0, Some(1.0))],
        );
        let treat = rows(&normal, &[("boot", 10.0, None), ("shirt", 99.0, None)]);
        let r = run_scenario_report(&base, &treat, TargetLevel::default()).unwrap();
        let tags: Vec<_> = r.rows.iter().map(|r| r.bias.class_tag.as_str()).collect();
        assert_eq!(tags, ["shirt", "boot"]);
        assert_eq!(r.rows[0].bias.direction, Direction::Upward);
        assert_eq!(r.rows[1].bias.direction, Direction::Downward);

        let same = run_scenario_report(&base, &base, TargetLevel::default()).unwrap();
        assert!(same
            .rows
            .iter()
            .all(|r| r.bias.direction == Direction::Flat));

        let single = rows(&normal, &[("bag", 50.0, None)]);
        assert_eq!(
            run_scenario_report(&single, &single, TargetLevel::default())
                .unwrap()
                .rows
                .len(),
            1
        );

        assert!(matches!(
            run_scenario_report(&base, &single, TargetLevel::default()),
            Err(Error::ClassMismatch(_))
        ));
    }
}
