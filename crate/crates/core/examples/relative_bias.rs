//! Empirical relative bias between two scorers on the same validation data,
//! and its plug-in form over two Gaussian score models.
//!
//!     cargo run --example relative_bias

use scoring_bias::bias::{plugin_relative_bias, BiasKind};
use scoring_bias::synthetic::sample_gaussian_scores;
use scoring_bias::{empirical_relative_bias, GaussianScoreModel, LabeledScore, TargetLevel};

fn main() -> scoring_bias::Result<()> {
    let level = TargetLevel::default();
    let fixture = |lo: i32| -> Vec<LabeledScore> {
        (1..=100)
            .map(|v| LabeledScore::normal(v as f64))
            .chain((lo..lo + 20).map(|v| LabeledScore::abnormal(v as f64)))
            .collect()
    };
    let est = empirical_relative_bias(&fixture(90), &fixture(96), level)?;
    println!(
        "fixture: tpr(s) {}  tpr(s') {}  xi {:.3}",
        est.tpr_s, est.tpr_sprime, est.xi
    );

    let m = GaussianScoreModel::new(0.0, 1.0, 1.0, 1.0)?;
    let mp = GaussianScoreModel::new(0.0, 1.0, 2.0, 1.5)?;
    let s = sample_gaussian_scores(&m, 200_000, 50_000, 1)?;
    let sp = sample_gaussian_scores(&mp, 200_000, 50_000, 2)?;
    let sampled = empirical_relative_bias(&s, &sp, level)?;
    let plugin = plugin_relative_bias(
        &m.normal_dist(),
        &m.abnormal_dist(),
        &mp.normal_dist(),
        &mp.abnormal_dist(),
        0.95,
    )?;
    assert_eq!(plugin.kind, BiasKind::Plugin);
    println!(
        "gaussian: sampled xi {:.4}  plug-in xi {:.4}",
        sampled.xi, plugin.xi
    );
    Ok(())
}
