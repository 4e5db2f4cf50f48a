//! Fixed-FPR evaluation of anomaly scorers and the relative scoring bias
//! between two of them: empirical estimates, Gaussian closed forms,
//! finite-sample guarantees, and the simulations that check them.

pub mod bias;
pub mod cli;
pub mod complexity;
pub mod detector;
pub mod ecdf;
pub mod error;
pub mod harness;
pub mod io;
pub mod normal;
pub mod rng;
pub mod synthetic;

pub use bias::{
    classify_bias_direction, empirical_relative_bias, gaussian_relative_bias, plugin_relative_bias,
    BiasDirection, BiasEstimate, Direction, GaussianScoreModel,
};
pub use complexity::{achievable_epsilon, required_samples, ComplexityInput, LipschitzConstants};
pub use detector::{evaluate_detector, threshold_for_level, DetectorEvaluation, Mode, TargetLevel};
pub use ecdf::{EmpiricalCdf, Label, LabeledScore};
pub use error::{Error, Result};
