//! Fair cross-machine comparison of optimization algorithms.
//!
//! When algorithm A was benchmarked on one machine and algorithm B will run
//! on another, naive runtime budgets bias the comparison. This crate
//! predicts the *equivalent runtime* on the second machine from CPU
//! benchmark scores, deliberately shrinks the prediction so it errs on the
//! short side with a chosen probability, and then corrects the one-sided
//! sign test so that the remaining over-estimation risk cannot inflate the
//! type-I error.
//!
//! Modules:
//! - [`binom`]: log-space binomial PMF/CDF primitives.
//! - [`signtest`]: sign statistic, plain and corrected p-values, full test.
//! - [`runtime_model`]: score-vs-runtime calibration, biased estimates,
//!   gamma-curve construction via cross-validation.
//! - [`data_io`]: text formats for scores, matrices, tables, calibration.
//! - [`experiments`]: synthetic-fleet validation studies.
//!
//! ```
//! let p = fairbench::corrected_p_value(0.1, 20, 3).unwrap();
//! assert!((p - 0.043596000).abs() < 1e-9);
//! ```

pub mod binom;
pub mod data_io;
pub mod experiments;
pub mod runtime_model;
pub mod signtest;

pub use binom::BinomialSpec;
pub use data_io::{ComparisonRow, ComparisonTable};
pub use runtime_model::{
    biased_estimate, gamma_for, CalibrationModel, GammaCurve, GammaPoint, MachineScore,
};
pub use signtest::{
    corrected_p_value, run_comparison, sign_statistic, sign_test_p_value, Decision, Direction,
    SignTestResult,
};

/// Calibration shipped with the crate: the reference regression and the
/// gamma curve used by the command-line tool when no file is given.
pub fn default_calibration() -> (CalibrationModel, GammaCurve) {
    data_io::parse_calibration(include_str!("../data/default_calibration.txt"))
        .expect("bundled calibration file is valid")
}
