//! How many validation samples a bias estimate needs, and what accuracy a
//! given budget buys.
//!
//!     cargo run --example sample_complexity

use scoring_bias::complexity::{abnormal_cdf_samples, BoundParams, QuantileInterval};
use scoring_bias::{
    achievable_epsilon, required_samples, ComplexityInput, GaussianScoreModel, LipschitzConstants,
};

fn main() -> scoring_bias::Result<()> {
    let unit = LipschitzConstants::uniform(1.0);
    println!("{:>6} {:>6} {:>6} {:>14}", "eps", "delta", "alpha", "n");
    for (eps, delta, alpha) in [
        (0.1, 0.1, 0.2),
        (0.05, 0.1, 0.2),
        (0.1, 0.05, 0.2),
        (0.1, 0.1, 0.05),
    ] {
        let n = required_samples(&ComplexityInput::new(eps, delta, alpha, unit)?)?;
        println!("{eps:>6} {delta:>6} {alpha:>6} {n:>14}");
    }

    let params = BoundParams {
        delta: 0.1,
        alpha: 0.2,
        lipschitz: unit,
    };
    for n in [1_000u64, 100_000, 10_000_000] {
        let e = achievable_epsilon(n, &params)?;
        println!(
            "n = {n}: eps = {:.4}{}",
            e.epsilon,
            if e.vacuous { " (vacuous)" } else { "" }
        );
    }

    // Constants for Gaussian score models, with the quantile function of
    // the normal scores restricted to [0.5, 0.999].
    let m = GaussianScoreModel::new(0.0, 1.0, 0.0, 1.0)?;
    let mp = GaussianScoreModel::new(0.0, 1.0, 3.0, 1.0)?;
    let lip = LipschitzConstants::from_gaussian(&m, &mp, QuantileInterval::default())?;
    println!("gaussian constants: {lip:?}");
    println!(
        "n = {}",
        required_samples(&ComplexityInput::new(0.1, 0.1, 0.2, lip)?)?
    );
    println!(
        "abnormal samples for a 0.025 CDF band: {}",
        abnormal_cdf_samples(0.025, 0.1, 0.2)?
    );
    Ok(())
}
