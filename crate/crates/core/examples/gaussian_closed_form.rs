//! Closed-form relative bias for Gaussian score models across target levels.
//!
//!     cargo run --example gaussian_closed_form

use scoring_bias::{gaussian_relative_bias, GaussianScoreModel};

fn main() -> scoring_bias::Result<()> {
    let baseline = GaussianScoreModel::new(0.0, 1.0, 0.0, 1.0)?;
    println!("{:>6} {:>10} {:>10} {:>10}", "q", "tpr(s)", "tpr(s')", "xi");
    for shift in [1.0, 2.0, 3.0] {
        let treatment = GaussianScoreModel::new(0.0, 1.0, shift, 1.0)?;
        println!("abnormal mean of s' = {shift}");
        for q in [0.9, 0.95, 0.99] {
            let b = gaussian_relative_bias(&baseline, &treatment, q)?;
            println!(
                "{q:>6} {:>10.6} {:>10.6} {:>10.6}",
                b.tpr_s, b.tpr_sprime, b.xi
            );
        }
    }
    // An affine change of both classes' scores leaves the bias unchanged.
    let t = GaussianScoreModel::new(0.0, 1.0, 3.0, 1.0)?;
    let a = gaussian_relative_bias(&baseline, &t, 0.95)?.xi;
    let b = gaussian_relative_bias(&baseline.affine(2.5, -4.0), &t, 0.95)?.xi;
    println!("affine invariance: {a:.12} vs {b:.12}");
    Ok(())
}
