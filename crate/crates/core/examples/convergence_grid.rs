//! Spread of the bias estimate and of the realised FPR as the calibration
//! sample grows. Pass a run count to change the default of 200.
//!
//!     cargo run --release --example convergence_grid -- 1500

use scoring_bias::cli::scorer_pair;
use scoring_bias::harness::{run_convergence, ConvergenceGrid, ConvergenceOptions};
use scoring_bias::io::{summary_csv, ScorerSource};

fn main() -> scoring_bias::Result<()> {
    let runs = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(200);
    let grid = ConvergenceGrid {
        runs,
        master_seed: 1,
        ..Default::default()
    };
    let pair = scorer_pair(&ScorerSource::default(), grid.master_seed)?;
    let summary = run_convergence(&grid, &pair, &ConvergenceOptions::default())?;
    println!(
        "{:>6} {:>5} {:>9} {:>9} {:>9} {:>9}",
        "n", "alpha", "xi mean", "xi std", "fpr mean", "fpr iqr"
    );
    for c in &summary.cells {
        println!(
            "{:>6} {:>5} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            c.n,
            c.alpha,
            c.xi.mean,
            c.xi.std,
            c.fpr.mean,
            c.fpr.iqr()
        );
    }
    eprintln!("\n{}", summary_csv(&summary));
    Ok(())
}
