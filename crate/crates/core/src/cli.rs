//! Command-line front end. The `scoring-bias` binary only calls [`main`].
//!
//! Exit codes: 0 success, 2 malformed input or configuration, 3 data that
//! cannot be evaluated (missing class, mismatched classes), 4 a resource
//! budget that would be exceeded.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bias::{empirical_relative_bias, gaussian_relative_bias, GaussianScoreModel};
use crate::complexity::{
    achievable_epsilon, required_samples, BoundParams, ComplexityInput, LipschitzConstants,
};
use crate::detector::{evaluate_with_rule, Mode, TargetLevel, ThresholdRule};
use crate::error::{Error, Result};
use crate::harness::{
    run_convergence, run_coverage, run_scenario_report, ScenarioReport, ScorerPair,
};
use crate::io::{
    coverage_csv, labeled_scores, point_csv, read_score_file, score_csv, seed_from_env,
    summary_csv, to_json, write_file, RunConfig, ScoreRow, ScorerSource,
};
use crate::synthetic::{sample_dataset, train_stand_in_pair, StandInScorer};

#[derive(Debug, Parser)]
#[command(
    name = "scoring-bias",
    version,
    about = "Fixed-FPR evaluation and relative scoring bias of anomaly scorers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    FixFpr,
    FixTpr,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RuleArg {
    Conservative,
    LiteralMax,
}

#[derive(Debug, Args)]
pub struct LevelArgs {
    /// Quantile level; the held-fixed rate is 1 - q.
    #[arg(long, default_value_t = 0.95)]
    pub q: f64,
    #[arg(long, value_enum, default_value = "fix-fpr")]
    pub mode: ModeArg,
}

impl LevelArgs {
    fn level(&self) -> Result<TargetLevel> {
        let mode = match self.mode {
            ModeArg::FixFpr => Mode::FixFpr,
            ModeArg::FixTpr => Mode::FixTpr,
        };
        TargetLevel::new(self.q, mode)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON configuration; missing sections take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed and SCORING_BIAS_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Threshold a score file and report TPR and FPR.
    Evaluate {
        file: PathBuf,
        #[command(flatten)]
        level: LevelArgs,
        #[arg(long, value_enum, default_value = "conservative")]
        rule: RuleArg,
    },
    /// Empirical relative bias of a treatment score file against a baseline.
    Bias {
        baseline: PathBuf,
        treatment: PathBuf,
        #[command(flatten)]
        level: LevelArgs,
    },
    /// Relative bias between two Gaussian score models.
    GaussianBias {
        #[arg(long, allow_hyphen_values = true)]
        mu0: f64,
        #[arg(long)]
        sigma0: f64,
        #[arg(long, allow_hyphen_values = true)]
        mua: f64,
        #[arg(long)]
        sigmaa: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu0p: f64,
        #[arg(long)]
        sigma0p: f64,
        #[arg(long, allow_hyphen_values = true)]
        muap: f64,
        #[arg(long)]
        sigmaap: f64,
        #[arg(long, default_value_t = 0.95)]
        q: f64,
    },
    /// Samples needed for a bias estimate within epsilon, or with --invert
    /// the epsilon reached with n samples.
    Complexity {
        #[arg(long, required_unless_present = "invert")]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        lip_a: f64,
        #[arg(long, default_value_t = 1.0)]
        lip_a_prime: f64,
        #[arg(long = "lip-0-inv", default_value_t = 1.0)]
        lip_0_inv: f64,
        #[arg(long = "lip-0-inv-prime", default_value_t = 1.0)]
        lip_0_inv_prime: f64,
        #[arg(long, requires = "n", conflicts_with = "epsilon")]
        invert: bool,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Generate synthetic data, train the stand-in scorers, export scores.
    Synth(RunArgs),
    /// Quantiles of the bias estimate and FPR over an (n, alpha) grid.
    Converge {
        #[command(flatten)]
        run: RunArgs,
        /// Worker threads; the output does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check the sample-size bound by simulation.
    Coverage {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Per-class recall of two scorers with the direction of the change.
    Scenario {
        baseline: PathBuf,
        treatment: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        q: f64,
        /// Print an aligned table instead of JSON.
        #[arg(long)]
        table: bool,
    },
}

/// Parses `args`, runs the command, and returns the exit code. Output goes
/// to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point of the binary.
pub fn main() -> ! {
    let code = run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|source| Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn load_config(run: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &run.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = run
        .seed
        .map(Ok)
        .or_else(|| seed_from_env().transpose())
        .transpose()?
    {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Evaluate { file, level, rule } => {
            let rows = read_score_file(&file)?;
            let rule = match rule {
                RuleArg::Conservative => ThresholdRule::Conservative,
                RuleArg::LiteralMax => ThresholdRule::LiteralMax,
            };
            let eval = evaluate_with_rule(&labeled_scores(&rows), level.level()?, rule)?;
            emit(out, &to_json(&eval)?)
        }
        Command::Bias {
            baseline,
            treatment,
            level,
        } => {
            let s = read_score_file(&baseline)?;
            let sp = read_score_file(&treatment)?;
            let est =
                empirical_relative_bias(&labeled_scores(&s), &labeled_scores(&sp), level.level()?)?;
            emit(out, &to_json(&est)?)
        }
        Command::GaussianBias {
            mu0,
            sigma0,
            mua,
            sigmaa,
            mu0p,
            sigma0p,
            muap,
            sigmaap,
            q,
        } => {
            let m = GaussianScoreModel::new(mu0, sigma0, mua, sigmaa)?;
            let mp = GaussianScoreModel::new(mu0p, sigma0p, muap, sigmaap)?;
            emit(out, &to_json(&gaussian_relative_bias(&m, &mp, q)?)?)
        }
        Command::Complexity {
            epsilon,
            delta,
            alpha,
            lip_a,
            lip_a_prime,
            lip_0_inv,
            lip_0_inv_prime,
            invert,
            n,
        } => {
            let lipschitz = LipschitzConstants {
                lip_a,
                lip_a_prime,
                lip_0_inv,
                lip_0_inv_prime,
            };
            if invert {
                let params = BoundParams {
                    delta,
                    alpha,
                    lipschitz,
                };
                let n = n.ok_or_else(|| Error::config("--invert needs --n"))?;
                emit(out, &to_json(&achievable_epsilon(n, &params)?)?)
            } else {
                let eps = epsilon.ok_or_else(|| Error::config("--epsilon is required"))?;
                let c = ComplexityInput::new(eps, delta, alpha, lipschitz)?;
                emit(out, &format!("{}\n", required_samples(&c)?))
            }
        }
        Command::Synth(run) => cmd_synth(&load_config(&run)?, out),
        Command::Converge { run, workers } => cmd_converge(&load_config(&run)?, workers, out),
        Command::Coverage { run, workers } => cmd_coverage(&load_config(&run)?, workers, out),
        Command::Scenario {
            baseline,
            treatment,
            q,
            table,
        } => {
            let report = run_scenario_report(
                &read_score_file(&baseline)?,
                &read_score_file(&treatment)?,
                TargetLevel::fix_fpr(q)?,
            )?;
            let text = if table {
                scenario_table(&report)
            } else {
                to_json(&report)?
            };
            emit(out, &text)
        }
    }
}

fn cmd_synth(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let sec = cfg.synth.clone().unwrap_or_default();
    let (s, sp) = train_stand_in_pair(&sec.data, &sec.training)?;
    let points = sample_dataset(&sec.data, sec.n)?;
    let scored = |scorer: &StandInScorer| -> Result<Vec<ScoreRow>> {
        points
            .iter()
            .map(|p| {
                Ok(ScoreRow::from(crate::ecdf::LabeledScore::new(
                    scorer.score(&p.features)?,
                    p.label,
                )))
            })
            .collect()
    };
    if let Some(path) = &sec.points_csv {
        write_file(path, &point_csv(&points))?;
    }
    if let Some(path) = &sec.baseline_scores_csv {
        write_file(path, &score_csv(&scored(&s)?))?;
    }
    if let Some(path) = &sec.treatment_scores_csv {
        write_file(path, &score_csv(&scored(&sp)?))?;
    }
    let scorers = to_json(&serde_json::json!({ "baseline": s, "treatment": sp }))?;
    match &sec.scorers_json {
        Some(path) => write_file(path, &scorers),
        None => emit(out, &scorers),
    }
}

/// Builds the scorer pair named by `source`, training stand-ins under `seed`.
pub fn scorer_pair(source: &ScorerSource, seed: u64) -> Result<ScorerPair> {
    match source {
        ScorerSource::StandIn { data, training } => {
            let data = crate::synthetic::SyntheticConfig {
                seed,
                ..data.clone()
            };
            let (s, sp) = train_stand_in_pair(&data, training)?;
            ScorerPair::from_stand_ins(data, s, sp)
        }
        ScorerSource::Gaussian {
            baseline,
            treatment,
        } => Ok(ScorerPair::gaussian(*baseline, *treatment)),
    }
}

fn cmd_converge(cfg: &RunConfig, workers: Option<usize>, out: &mut dyn Write) -> Result<()> {
    let sec = cfg.converge.clone().unwrap_or_default();
    let mut options = sec.options;
    if workers.is_some() {
        options.workers = workers;
    }
    let pair = scorer_pair(&sec.scorers, sec.grid.master_seed)?;
    let summary = run_convergence(&sec.grid, &pair, &options)?;
    let csv = summary_csv(&summary);
    if let Some(path) = &sec.json {
        write_file(path, &to_json(&summary)?)?;
    }
    match &sec.csv {
        Some(path) => write_file(path, &csv),
        None => emit(out, &csv),
    }
}

fn cmd_coverage(cfg: &RunConfig, workers: Option<usize>, out: &mut dyn Write) -> Result<()> {
    let sec = cfg.coverage.clone().unwrap_or_default();
    let lipschitz = match sec.lipschitz {
        Some(l) => l,
        None => LipschitzConstants::from_gaussian(&sec.baseline, &sec.treatment, sec.interval)?,
    };
    let c = ComplexityInput::new(sec.epsilon, sec.delta, sec.alpha, lipschitz)?;
    let mut options = sec.options;
    if workers.is_some() {
        options.workers = workers;
    }
    let report = run_coverage(&c, &sec.baseline, &sec.treatment, sec.trials, &options)?;
    if let Some(path) = &sec.csv {
        write_file(path, &coverage_csv(&report))?;
    }
    let json = to_json(&report)?;
    match &sec.json {
        Some(path) => write_file(path, &json),
        None => emit(out, &json),
    }
}

/// Human-readable scenario table with 6 significant digits.
pub fn scenario_table(report: &ScenarioReport) -> String {
    let mut text = format!(
        "{:<16} {:>12} {:>12} {:>4}\n",
        "class", "baseline", "treatment", ""
    );
    for row in &report.rows {
        let b = &row.bias;
        text.push_str(&format!(
            "{:<16} {:>12} {:>12} {:>4}\n",
            b.class_tag,
            format_sig(b.tpr_baseline),
            format_sig(b.tpr_treatment),
            b.direction.arrow()
        ));
    }
    text
}

fn format_sig(x: f64) -> String {
    let s = format!("{:.*e}", 5, x);
    let v: f64 = s.parse().unwrap_or(x);
    format!("{v}")
}
