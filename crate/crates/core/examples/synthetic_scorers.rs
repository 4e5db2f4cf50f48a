//! Synthetic normal/abnormal points and the two stand-in scorers: distance
//! to the normal center, and a contrast that also uses labelled anomalies.
//!
//!     cargo run --example synthetic_scorers

use scoring_bias::synthetic::{
    sample_dataset, train_stand_in_pair, SyntheticConfig, TrainingConfig,
};
use scoring_bias::{empirical_relative_bias, evaluate_detector, LabeledScore, TargetLevel};

fn main() -> scoring_bias::Result<()> {
    let cfg = SyntheticConfig {
        alpha: 0.1,
        seed: 42,
        ..Default::default()
    };
    let (s, sp) = train_stand_in_pair(&cfg, &TrainingConfig::default())?;
    let points = sample_dataset(&cfg, 20_000)?;
    let score = |scorer: &scoring_bias::synthetic::StandInScorer| -> scoring_bias::Result<Vec<LabeledScore>> {
        points.iter().map(|p| Ok(LabeledScore::new(scorer.score(&p.features)?, p.label))).collect()
    };
    let (base, treat) = (score(&s)?, score(&sp)?);
    let level = TargetLevel::default();
    for (name, scores) in [("center distance", &base), ("supervised contrast", &treat)] {
        let e = evaluate_detector(scores, level)?;
        println!(
            "{name:>20}: threshold {:.4}  tpr {:.4}  fpr {:.4}",
            e.threshold, e.tpr, e.fpr
        );
    }
    println!(
        "relative bias xi = {:.4}",
        empirical_relative_bias(&base, &treat, level)?.xi
    );
    Ok(())
}
