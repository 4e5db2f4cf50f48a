//! File formats: score files, point files, run configuration, and the CSV
//! tables emitted by the experiments.
//!
//! Score files are UTF-8 CSV with a header `score,label[,class_tag][,similarity]`.
//! Labels are `0`/`1` (`normal`/`abnormal` are accepted as well), class tags
//! match `[A-Za-z0-9_-]+`. Decimals are written with the shortest
//! representation that round-trips.

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bias::GaussianScoreModel;
use crate::complexity::{LipschitzConstants, QuantileInterval};
use crate::ecdf::{Label, LabeledScore};
use crate::error::{Error, Result};
use crate::harness::{
    ConvergenceGrid, ConvergenceOptions, CoverageOptions, CoverageReport, QuantileSummary,
};
use crate::synthetic::{DataPoint, SyntheticConfig, TrainingConfig};

/// Environment variable that overrides the seed in a [`RunConfig`].
pub const SEED_ENV: &str = "SCORING_BIAS_SEED";

/// One row of a score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    #[serde(flatten)]
    pub labeled: LabeledScore,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
}

impl From<LabeledScore> for ScoreRow {
    fn from(labeled: LabeledScore) -> Self {
        Self {
            labeled,
            similarity: None,
        }
    }
}

pub fn labeled_scores(rows: &[ScoreRow]) -> Vec<LabeledScore> {
    rows.iter().map(|r| r.labeled.clone()).collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Column {
    Score,
    Label,
    ClassTag,
    Similarity,
}

fn valid_tag(tag: &str) -> bool {
    !tag.is_empty()
        && tag
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

fn parse_label(field: &str) -> Option<Label> {
    match field {
        "0" | "normal" => Some(Label::Normal),
        "1" | "abnormal" => Some(Label::Abnormal),
        _ => None,
    }
}

fn parse_finite(field: &str) -> Option<f64> {
    field.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses a score file. `path` only labels error messages.
pub fn parse_score_csv<R: Read>(reader: R, path: &Path) -> Result<Vec<ScoreRow>> {
    let schema = |line: u64, message: String| Error::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(schema(1, "empty file, expected header score,label".into())),
        Some(r) => r.map_err(|e| schema(1, e.to_string()))?,
    };
    let mut columns = Vec::new();
    for name in header.iter() {
        let col = match name.trim() {
            "score" => Column::Score,
            "label" => Column::Label,
            "class_tag" => Column::ClassTag,
            "similarity" => Column::Similarity,
            other => return Err(schema(1, format!("unknown column {other:?}"))),
        };
        if columns.contains(&col) {
            return Err(schema(1, format!("duplicate column {:?}", name.trim())));
        }
        columns.push(col);
    }
    if columns.len() < 2 || columns[0] != Column::Score || columns[1] != Column::Label {
        return Err(schema(1, "header must start with score,label".into()));
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            schema(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != columns.len() {
            return Err(schema(
                line,
                format!("expected {} fields, found {}", columns.len(), record.len()),
            ));
        }
        let mut score = 0.0;
        let mut label = Label::Normal;
        let mut class_tag = None;
        let mut similarity = None;
        for (col, field) in columns.iter().zip(record.iter()) {
            let field = field.trim();
            match col {
                Column::Score => {
                    score = parse_finite(field).ok_or_else(|| {
                        schema(line, format!("score {field:?} is not a finite number"))
                    })?
                }
                Column::Label => {
                    label = parse_label(field)
                        .ok_or_else(|| schema(line, format!("label {field:?} is not 0 or 1")))?
                }
                Column::ClassTag => {
                    if !field.is_empty() {
                        if !valid_tag(field) {
                            return Err(schema(
                                line,
                                format!("class_tag {field:?} has characters outside [A-Za-z0-9_-]"),
                            ));
                        }
                        class_tag = Some(field.to_string());
                    }
                }
                Column::Similarity => {
                    if !field.is_empty() {
                        similarity = Some(parse_finite(field).ok_or_else(|| {
                            schema(line, format!("similarity {field:?} is not a finite number"))
                        })?);
                    }
                }
            }
        }
        rows.push(ScoreRow {
            labeled: LabeledScore {
                score,
                label,
                class_tag,
            },
            similarity,
        });
    }
    if rows.is_empty() {
        return Err(schema(1, "file has a header but no rows".into()));
    }
    Ok(rows)
}

pub fn read_score_file(path: &Path) -> Result<Vec<ScoreRow>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_score_csv(std::io::BufReader::new(file), path)
}

/// Serializes rows as a score file. Optional columns appear only when some
/// row uses them.
pub fn score_csv(rows: &[ScoreRow]) -> String {
    let tags = rows.iter().any(|r| r.labeled.class_tag.is_some());
    let sims = rows.iter().any(|r| r.similarity.is_some());
    let mut out = String::from("score,label");
    if tags {
        out.push_str(",class_tag");
    }
    if sims {
        out.push_str(",similarity");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{}", r.labeled.score, r.labeled.label.code());
        if tags {
            let _ = write!(out, ",{}", r.labeled.class_tag.as_deref().unwrap_or(""));
        }
        if sims {
            out.push(',');
            if let Some(s) = r.similarity {
                let _ = write!(out, "{s}");
            }
        }
        out.push('\n');
    }
    out
}

/// `label,x0,x1,...` with one row per point.
pub fn point_csv(points: &[DataPoint]) -> String {
    let dim = points.first().map_or(0, |p| p.features.len());
    let mut out = String::from("label");
    for j in 0..dim {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    for p in points {
        let _ = write!(out, "{}", p.label.code());
        for x in &p.features {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}

/// Convergence table: one row per cell and metric.
pub fn summary_csv(summary: &QuantileSummary) -> String {
    let mut out = String::from("n,alpha,metric,min,q25,median,q75,max,mean,std\n");
    for cell in &summary.cells {
        for (metric, s) in [("xi", &cell.xi), ("fpr", &cell.fpr)] {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                cell.n, cell.alpha, metric, s.min, s.q25, s.median, s.q75, s.max, s.mean, s.std
            );
        }
    }
    out
}

pub fn coverage_csv(r: &CoverageReport) -> String {
    format!(
        "prescribed_n,epsilon,delta,alpha,trials,violations,observed_violation_rate,monte_carlo_slack,xi_true,xi_hat_mean\n{},{},{},{},{},{},{},{},{},{}\n",
        r.prescribed_n,
        r.epsilon,
        r.delta,
        r.alpha,
        r.trials,
        r.violations,
        r.observed_violation_rate,
        r.monte_carlo_slack,
        r.xi_true,
        r.xi_hat_mean
    )
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Where the scorers used by `converge` come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScorerSource {
    /// Center-distance baseline and supervised-contrast treatment, trained
    /// once on synthetic data.
    StandIn {
        #[serde(default)]
        data: SyntheticConfig,
        #[serde(default)]
        training: TrainingConfig,
    },
    Gaussian {
        baseline: GaussianScoreModel,
        treatment: GaussianScoreModel,
    },
}

impl Default for ScorerSource {
    fn default() -> Self {
        ScorerSource::StandIn {
            data: SyntheticConfig::default(),
            training: TrainingConfig::default(),
        }
    }
}

fn default_synth_n() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    #[serde(default)]
    pub data: SyntheticConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    /// Number of mixture points to export.
    #[serde(default = "default_synth_n")]
    pub n: usize,
    #[serde(default)]
    pub points_csv: Option<PathBuf>,
    #[serde(default)]
    pub baseline_scores_csv: Option<PathBuf>,
    #[serde(default)]
    pub treatment_scores_csv: Option<PathBuf>,
    #[serde(default)]
    pub scorers_json: Option<PathBuf>,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            data: SyntheticConfig::default(),
            training: TrainingConfig::default(),
            n: default_synth_n(),
            points_csv: None,
            baseline_scores_csv: None,
            treatment_scores_csv: None,
            scorers_json: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    #[serde(default)]
    pub grid: ConvergenceGrid,
    #[serde(default)]
    pub options: ConvergenceOptions,
    #[serde(default)]
    pub scorers: ScorerSource,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

fn default_eps() -> f64 {
    0.1
}
fn default_delta() -> f64 {
    0.1
}
fn default_cov_alpha() -> f64 {
    0.2
}
fn default_trials() -> usize {
    500
}
fn default_baseline() -> GaussianScoreModel {
    GaussianScoreModel {
        mu0: 0.0,
        sigma0: 1.0,
        mua: 0.0,
        sigmaa: 1.0,
    }
}
fn default_treatment() -> GaussianScoreModel {
    GaussianScoreModel {
        mua: 3.0,
        ..default_baseline()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageSection {
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_cov_alpha")]
    pub alpha: f64,
    /// Derived from the Gaussian models over `interval` when absent.
    #[serde(default)]
    pub lipschitz: Option<LipschitzConstants>,
    #[serde(default)]
    pub interval: QuantileInterval,
    #[serde(default = "default_baseline")]
    pub baseline: GaussianScoreModel,
    #[serde(default = "default_treatment")]
    pub treatment: GaussianScoreModel,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub options: CoverageOptions,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

impl Default for CoverageSection {
    fn default() -> Self {
        Self {
            epsilon: default_eps(),
            delta: default_delta(),
            alpha: default_cov_alpha(),
            lipschitz: None,
            interval: QuantileInterval::default(),
            baseline: default_baseline(),
            treatment: default_treatment(),
            trials: default_trials(),
            options: CoverageOptions::default(),
            csv: None,
            json: None,
        }
    }
}

/// Configuration document with one optional section per command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub synth: Option<SynthSection>,
    #[serde(default)]
    pub converge: Option<ConvergeSection>,
    #[serde(default)]
    pub coverage: Option<CoverageSection>,
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            line: e.line() as u64,
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Sets every seed in the document.
    pub fn set_seed(&mut self, seed: u64) {
        if let Some(s) = &mut self.synth {
            s.data.seed = seed;
        }
        if let Some(c) = &mut self.converge {
            c.grid.master_seed = seed;
        }
        if let Some(c) = &mut self.coverage {
            c.options.master_seed = seed;
        }
    }
}

/// Seed from [`SEED_ENV`], if set.
pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::config(format!("{SEED_ENV}: {e}"))),
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
    }
}
