//! Statistical checks that turn distributional claims into pass/fail
//! reports with controlled error rates.

pub mod checks;
pub mod ks;
pub mod martingale;
pub mod regression;
pub mod report;
pub mod suite;

pub use ks::{kolmogorov_q, ks_one_sample, ks_two_sample, randomized_pit};
pub use martingale::{familywise_k, martingale_test, MIN_PATHS};
pub use regression::{ols, LinearFit};
pub use report::{mean_se, Thresholds, VerificationReport};
pub use suite::{run_suite, SUITES};
