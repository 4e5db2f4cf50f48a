//! Threshold a scorer at a 5% false-positive rate and read off its recall.
//!
//!     cargo run --example evaluate_fixed_fpr

use scoring_bias::detector::{evaluate_detector, evaluate_with_rule, ThresholdRule};
use scoring_bias::{LabeledScore, TargetLevel};

fn main() -> scoring_bias::Result<()> {
    let scores: Vec<LabeledScore> = (1..=100)
        .map(|v| LabeledScore::normal(v as f64))
        .chain((90..110).map(|v| LabeledScore::abnormal(v as f64)))
        .collect();

    let level = TargetLevel::fix_fpr(0.95)?;
    let eval = evaluate_detector(&scores, level)?;
    println!(
        "threshold {}  tpr {}  fpr {}",
        eval.threshold, eval.tpr, eval.fpr
    );

    let literal = evaluate_with_rule(&scores, level, ThresholdRule::LiteralMax)?;
    println!(
        "literal-max rule: threshold {}  fpr {}",
        literal.threshold, literal.fpr
    );

    // Hold the recall at 80% instead and report the false-positive rate.
    let dual = evaluate_detector(&scores, TargetLevel::fix_tpr(0.2)?)?;
    println!(
        "fix-tpr: threshold {}  tpr {}  fpr {}",
        dual.threshold, dual.tpr, dual.fpr
    );
    Ok(())
}
