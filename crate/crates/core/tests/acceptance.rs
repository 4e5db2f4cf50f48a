//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::HashMap;
use std::time::Instant;

use scoring_bias::bias::{empirical_relative_bias, gaussian_relative_bias, GaussianScoreModel};
use scoring_bias::cli;
use scoring_bias::complexity::{ComplexityInput, LipschitzConstants, QuantileInterval};
use scoring_bias::detector::{
    evaluate_detector, exceedance, threshold_unsorted, TargetLevel, ThresholdRule,
};
use scoring_bias::ecdf::{Label, LabeledScore};
use scoring_bias::harness::{
    run_convergence, run_coverage, run_rate_check, ConvergenceGrid, ConvergenceOptions,
    CoverageOptions, RateOptions, ScorerPair,
};
use scoring_bias::io::ScorerSource;
use scoring_bias::rng::{generate, Role, StreamKey};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn reference_pair() -> (GaussianScoreModel, GaussianScoreModel) {
    (
        GaussianScoreModel::new(0.0, 1.0, 0.0, 1.0).unwrap(),
        GaussianScoreModel::new(0.0, 1.0, 3.0, 1.0).unwrap(),
    )
}

/// `(n, alpha, metric) -> column -> value`.
type Table = HashMap<(usize, String, String), HashMap<String, f64>>;

/// Runs `converge` in-process and parses its CSV.
fn converge_csv(args: &[&str]) -> Table {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["scoring-bias", "converge"];
    full.extend_from_slice(args);
    let code = cli::run(full, &mut out, &mut err);
    assert_eq!(
        code,
        0,
        "converge failed: {}",
        String::from_utf8_lossy(&err)
    );
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let mut table = HashMap::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let cols = header[3..]
            .iter()
            .zip(&f[3..])
            .map(|(h, v)| (h.to_string(), v.parse::<f64>().unwrap()))
            .collect();
        table.insert(
            (f[0].parse().unwrap(), f[1].to_string(), f[2].to_string()),
            cols,
        );
    }
    table
}

fn fpr_means_ok(table: &Table, tol: f64) -> (bool, Vec<String>) {
    let mut ok = true;
    let mut notes = Vec::new();
    for alpha in ["0.01", "0.05", "0.1", "0.2"] {
        let mean = table[&(10_000, alpha.to_string(), "fpr".to_string())]["mean"];
        ok &= (mean - 0.05).abs() <= tol;
        notes.push(format!("a={alpha}:{mean:.4}"));
    }
    (ok, notes)
}

fn criterion_1() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let smoke = dir.path().join("smoke.json");
    std::fs::write(&smoke, r#"{"converge": {"grid": {"runs": 300}}}"#).unwrap();
    let small = converge_csv(&["--config", smoke.to_str().unwrap(), "--seed", "1"]);
    let (smoke_ok, smoke_notes) = fpr_means_ok(&small, 0.015);

    let full = converge_csv(&["--seed", "1"]);
    let (mean_ok, notes) = fpr_means_ok(&full, 0.01);
    let mut iqr_ok = true;
    let mut ratios = Vec::new();
    for alpha in ["0.01", "0.05", "0.1", "0.2"] {
        let iqr = |n: usize| {
            let c = &full[&(n, alpha.to_string(), "fpr".to_string())];
            c["q75"] - c["q25"]
        };
        let ratio = iqr(100) / iqr(10_000);
        iqr_ok &= ratio >= 3.0;
        ratios.push(format!("{ratio:.1}"));
    }
    outcome(
        smoke_ok && mean_ok && iqr_ok,
        format!(
            "1500 runs mean FPR at n=1e4 [{}], IQR ratio n=100/n=1e4 [{}]; 300-run smoke [{}]",
            notes.join(" "),
            ratios.join(" "),
            smoke_notes.join(" ")
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut low = 0.0;
    let mut high = 0.0;
    let seeds = 5;
    for seed in 0..seeds {
        let pair = cli::scorer_pair(&ScorerSource::default(), seed).unwrap();
        let grid = ConvergenceGrid {
            n_values: vec![10_000],
            alpha_values: vec![0.01, 0.2],
            master_seed: seed,
            ..Default::default()
        };
        let s = run_convergence(&grid, &pair, &ConvergenceOptions::default()).unwrap();
        low += s.cell(10_000, 0.01).unwrap().xi.std / seeds as f64;
        high += s.cell(10_000, 0.2).unwrap().xi.std / seeds as f64;
    }
    let reduction = 1.0 - high / low;
    outcome(
        reduction >= 0.30,
        format!("mean std of xi_hat over {seeds} seeds: alpha=0.01 {low:.5}, alpha=0.2 {high:.5}, reduction {:.1}%", 100.0 * reduction),
    )
}

fn criterion_3() -> Outcome {
    let (m, mp) = reference_pair();
    let xi = gaussian_relative_bias(&m, &mp, 0.95).unwrap().xi;
    let pair = ScorerPair::gaussian(m, mp);
    let level = TargetLevel::default();
    let n = 1_000_000;
    let mut close = 0;
    let mut worst: f64 = 0.0;
    for trial in 0..100u64 {
        let key = StreamKey::new(Role::Dataset, 3, trial, 0);
        let (mut n_s, mut n_sp) = pair
            .class_scores(2024, key.with_part(0), n, Label::Normal)
            .unwrap();
        let (a_s, a_sp) = pair
            .class_scores(2024, key.with_part(1), n, Label::Abnormal)
            .unwrap();
        let tau = threshold_unsorted(&mut n_s, level, ThresholdRule::Conservative)
            .unwrap()
            .value;
        let tau_p = threshold_unsorted(&mut n_sp, level, ThresholdRule::Conservative)
            .unwrap()
            .value;
        let xi_hat = exceedance(&a_sp, tau_p) - exceedance(&a_s, tau);
        let err = (xi_hat - xi).abs();
        worst = worst.max(err);
        if err < 0.005 {
            close += 1;
        }
    }
    outcome(
        close >= 95,
        format!("{close}/100 trials within 0.005 of xi = {xi:.6}; worst error {worst:.5}"),
    )
}

fn criterion_4() -> Outcome {
    let (m, mp) = reference_pair();
    let lip = LipschitzConstants::from_gaussian(&m, &mp, QuantileInterval::default()).unwrap();
    let c = ComplexityInput::new(0.1, 0.1, 0.2, lip).unwrap();
    let opts = CoverageOptions {
        master_seed: 4,
        ..Default::default()
    };
    let r = run_coverage(&c, &m, &mp, 500, &opts).unwrap();
    outcome(
        r.holds(),
        format!(
            "n = {}, {} violations in {} trials (rate {:.4} <= {:.4}); mean xi_hat {:.5} vs xi {:.5}",
            r.prescribed_n,
            r.violations,
            r.trials,
            r.observed_violation_rate,
            r.delta + r.monte_carlo_slack,
            r.xi_hat_mean,
            r.xi_true
        ),
    )
}

fn criterion_5() -> Outcome {
    let (m, mp) = reference_pair();
    let opts = RateOptions {
        master_seed: 5,
        ..Default::default()
    };
    let r = run_rate_check(
        &ScorerPair::gaussian(m, mp),
        &[100, 1_000, 10_000, 100_000],
        500,
        &opts,
    )
    .unwrap();
    let pass = matches!(r.slope, Some(s) if (-0.65..=-0.35).contains(&s)) && !r.low_confidence;
    let stds: Vec<String> = r.xi_std.iter().map(|s| format!("{s:.5}")).collect();
    outcome(
        pass,
        format!("slope {:?}, std of xi_hat [{}]", r.slope, stds.join(" ")),
    )
}

/// Threshold by scanning the distinct normal scores: the smallest value `t`
/// with `#{v <= t} * 1000 >= q_milli * n0`, or the minimum when no scan step
/// is needed. Rates count scores strictly above it.
fn brute_force(normal: &[i64], abnormal: &[i64], q_milli: i64) -> (i64, f64, f64) {
    let n0 = normal.len() as i64;
    let mut candidates: Vec<i64> = normal.to_vec();
    candidates.sort_unstable();
    candidates.dedup();
    let tau = *candidates
        .iter()
        .find(|&&t| normal.iter().filter(|&&v| v <= t).count() as i64 * 1000 >= q_milli * n0)
        .unwrap();
    let above = |xs: &[i64]| xs.iter().filter(|&&v| v > tau).count() as f64 / xs.len() as f64;
    (tau, above(abnormal), above(normal))
}

fn criterion_6() -> Outcome {
    use rand::Rng;
    let mut threshold_mismatch = 0;
    let mut bias_worst: f64 = 0.0;
    let instances = 1_000;
    for i in 0..instances {
        let mut rng = scoring_bias::rng::stream_rng(6, StreamKey::new(Role::Dataset, 6, i, 0), 0);
        let n0 = rng.random_range(1..=200usize);
        let n1 = rng.random_range(1..=200usize);
        let range = rng.random_range(2..=400i64);
        let q_milli = rng.random_range(1..=999i64);
        let level = TargetLevel::fix_fpr(q_milli as f64 / 1000.0).unwrap();
        let draw = |seed: u64, n: usize| -> Vec<i64> {
            generate(seed, StreamKey::new(Role::Dataset, 7, i, seed), n, |r| {
                r.random_range(0..range)
            })
        };
        let (n_s, a_s, n_sp, a_sp) = (draw(0, n0), draw(1, n1), draw(2, n0), draw(3, n1));
        let labeled = |normal: &[i64], abnormal: &[i64]| -> Vec<LabeledScore> {
            normal
                .iter()
                .map(|&v| LabeledScore::normal(v as f64))
                .chain(abnormal.iter().map(|&v| LabeledScore::abnormal(v as f64)))
                .collect()
        };
        let s = labeled(&n_s, &a_s);
        let sp = labeled(&n_sp, &a_sp);
        let eval = evaluate_detector(&s, level).unwrap();
        let (tau, tpr, fpr) = brute_force(&n_s, &a_s, q_milli);
        if eval.threshold != tau as f64 || eval.tpr != tpr || eval.fpr != fpr {
            threshold_mismatch += 1;
        }
        let (_, tpr_p, _) = brute_force(&n_sp, &a_sp, q_milli);
        let est = empirical_relative_bias(&s, &sp, level).unwrap();
        bias_worst = bias_worst.max((est.xi - (tpr_p - tpr)).abs());
    }
    outcome(
        threshold_mismatch == 0 && bias_worst <= 1e-12,
        format!("{instances} instances: {threshold_mismatch} detector mismatches, max bias deviation {bias_worst:e}"),
    )
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    std::fs::write(
        &cfg,
        r#"{"converge": {"grid": {"n_values": [100, 1000, 10000], "alpha_values": [0.01, 0.2], "runs": 100}}}"#,
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_scoring-bias");
    let run = |workers: &str| {
        let out = std::process::Command::new(bin)
            .args([
                "converge",
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                "77",
                "--workers",
                workers,
            ])
            .env_remove("SCORING_BIAS_SEED")
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let a = run("1");
    let b = run("1");
    let c = run("4");
    outcome(
        a == b && a == c && !a.is_empty(),
        format!(
            "{} bytes; repeat identical: {}, 1 vs 4 workers identical: {}",
            a.len(),
            a == b,
            a == c
        ),
    )
}

fn criterion_8() -> Outcome {
    let fixtures = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(
        [
            "scoring-bias".into(),
            "scenario".into(),
            fixtures.join("scenario_baseline.csv").into_os_string(),
            fixtures.join("scenario_treatment.csv").into_os_string(),
        ],
        &mut out,
        &mut err,
    );
    if code != 0 {
        return outcome(
            false,
            format!("exit {code}: {}", String::from_utf8_lossy(&err)),
        );
    }
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let rows: Vec<String> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            format!(
                "{} {}->{} {}",
                r["class_tag"].as_str().unwrap(),
                r["tpr_baseline"],
                r["tpr_treatment"],
                r["direction"].as_str().unwrap()
            )
        })
        .collect();
    let dirs: Vec<&str> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["direction"].as_str().unwrap())
        .collect();
    let tags: Vec<&str> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["class_tag"].as_str().unwrap())
        .collect();
    outcome(
        tags == ["shirt", "boot"] && dirs == ["upward", "downward"],
        rows.join("; "),
    )
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 8] = [
        ("FPR convergence", criterion_1),
        ("variance reduction in xi_hat", criterion_2),
        ("closed-form consistency", criterion_3),
        ("sample-size coverage", criterion_4),
        ("convergence rate", criterion_5),
        ("oracle equivalence", criterion_6),
        ("deterministic reproduction", criterion_7),
        ("scenario fixture", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        println!(
            "criterion {} ({name}): {} [{:.1}s] {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
