//! Draw validation sets of the prescribed size and count how often the bias
//! estimate misses the closed-form value by more than epsilon.
//!
//!     cargo run --release --example coverage_check

use scoring_bias::complexity::QuantileInterval;
use scoring_bias::harness::{run_coverage, CoverageOptions};
use scoring_bias::{ComplexityInput, GaussianScoreModel, LipschitzConstants};

fn main() -> scoring_bias::Result<()> {
    let m = GaussianScoreModel::new(0.0, 1.0, 0.0, 1.0)?;
    let mp = GaussianScoreModel::new(0.0, 1.0, 3.0, 1.0)?;
    let lip = LipschitzConstants::from_gaussian(&m, &mp, QuantileInterval::default())?;
    let c = ComplexityInput::new(0.1, 0.1, 0.2, lip)?;
    let r = run_coverage(&c, &m, &mp, 200, &CoverageOptions::default())?;
    println!("prescribed n      {}", r.prescribed_n);
    println!("true xi           {:.6}", r.xi_true);
    println!("mean xi_hat       {:.6}", r.xi_hat_mean);
    println!(
        "violation rate    {} / {} = {:.4}",
        r.violations, r.trials, r.observed_violation_rate
    );
    println!("allowed           {:.4}", r.delta + r.monte_carlo_slack);
    Ok(())
}
