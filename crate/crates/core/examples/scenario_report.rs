//! Per-class recall of a baseline and a treatment scorer read from score
//! files, with the direction of each change.
//!
//!     cargo run --example scenario_report [baseline.csv treatment.csv]

use std::path::{Path, PathBuf};

use scoring_bias::cli::scenario_table;
use scoring_bias::harness::run_scenario_report;
use scoring_bias::io::read_score_file;
use scoring_bias::TargetLevel;

fn main() -> scoring_bias::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let (base, treat) = match args.as_slice() {
        [b, t] => (b.clone(), t.clone()),
        _ => (
            fixtures.join("scenario_baseline.csv"),
            fixtures.join("scenario_treatment.csv"),
        ),
    };
    let report = run_scenario_report(
        &read_score_file(&base)?,
        &read_score_file(&treat)?,
        TargetLevel::default(),
    )?;
    print!("{}", scenario_table(&report));
    Ok(())
}
