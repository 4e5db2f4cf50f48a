//! Uniform confidence band for an empirical CDF, checked by simulation.
//!
//!     cargo run --example massart_band

use rand::Rng;
use scoring_bias::ecdf::{massart_tail, MassartQuery};
use scoring_bias::rng::{generate, Role, StreamKey};
use scoring_bias::EmpiricalCdf;

fn main() -> scoring_bias::Result<()> {
    let trials = 1_000;
    for n in [50, 500, 5_000] {
        let q = MassartQuery::for_confidence(n, 0.05)?;
        let outside = (0..trials)
            .filter(|&t| {
                let u = generate(3, StreamKey::new(Role::Dataset, n as u64, t, 0), n, |r| {
                    r.random::<f64>()
                });
                EmpiricalCdf::new(&u)
                    .unwrap()
                    .sup_distance(|x| x.clamp(0.0, 1.0))
                    > q.band()
            })
            .count();
        println!(
            "n = {n:>5}: band +/-{:.4}, tail bound {:.3}, observed {:.3}",
            q.band(),
            massart_tail(&q),
            outside as f64 / trials as f64
        );
    }
    Ok(())
}
