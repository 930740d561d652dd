use std::fmt;

use serde::{Deserialize, Serialize};

/// Acceptance thresholds: `k` standard errors for moment tests and level
/// `alpha` for distributional tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub k: f64,
    pub alpha: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { k: 3.0, alpha: 0.01 }
    }
}

/// Outcome of one statistical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    /// What the estimate should equal under the claim being tested.
    pub null: String,
    pub null_value: f64,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_value: Option<f64>,
    /// `k` for moment tests, `alpha` for p-value tests, or an absolute
    /// tolerance for deterministic identities.
    pub threshold: f64,
    pub pass: bool,
    pub samples: usize,
    pub seed: u64,
}

impl VerificationReport {
    /// Passes iff `|estimate - null_value| <= k * se`. A zero standard error
    /// demands equality to `1e-12`.
    pub fn z_test(name: &str, null: &str, null_value: f64, estimate: f64, se: f64, k: f64, samples: usize) -> Self {
        let dev = (estimate - null_value).abs();
        let pass = if se > 0.0 { dev <= k * se } else { dev <= 1e-12 };
        VerificationReport {
            name: name.into(),
            null: null.into(),
            null_value,
            estimate,
            std_error: Some(se),
            p_value: None,
            threshold: k,
            pass: pass && estimate.is_finite(),
            samples,
            seed: 0,
        }
    }

    /// Passes iff `p >= alpha`.
    pub fn p_test(name: &str, null: &str, statistic: f64, p: f64, alpha: f64, samples: usize) -> Self {
        VerificationReport {
            name: name.into(),
            null: null.into(),
            null_value: 0.0,
            estimate: statistic,
            std_error: None,
            p_value: Some(p),
            threshold: alpha,
            pass: p >= alpha,
            samples,
            seed: 0,
        }
    }

    /// Passes iff `|estimate - null_value| <= tol`.
    pub fn identity(name: &str, null: &str, null_value: f64, estimate: f64, tol: f64) -> Self {
        VerificationReport {
            name: name.into(),
            null: null.into(),
            null_value,
            estimate,
            std_error: None,
            p_value: None,
            threshold: tol,
            pass: (estimate - null_value).abs() <= tol,
            samples: 0,
            seed: 0,
        }
    }

    /// A check that must exceed the threshold, such as a coefficient that
    /// should differ from zero: passes iff `|estimate - null| > k * se`.
    pub fn z_reject(name: &str, null: &str, null_value: f64, estimate: f64, se: f64, k: f64, samples: usize) -> Self {
        let mut r = Self::z_test(name, null, null_value, estimate, se, k, samples);
        r.pass = estimate.is_finite() && (estimate - null_value).abs() > k * se;
        r
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Standardised deviation, when a standard error is recorded.
    pub fn z(&self) -> Option<f64> {
        self.std_error
            .filter(|se| *se > 0.0)
            .map(|se| (self.estimate - self.null_value) / se)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report fields are serialisable")
    }

    /// Fixed-width table of reports.
    pub fn table(reports: &[VerificationReport]) -> String {
        let mut out = format!(
            "{:<44} {:>6} {:>14} {:>14} {:>12} {:>10} {:>9}\n",
            "test", "result", "estimate", "null", "se/p", "threshold", "samples"
        );
        for r in reports {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spread = match (self.std_error, self.p_value) {
            (Some(se), _) => format!("{se:.4e}"),
            (None, Some(p)) => format!("p={p:.4}"),
            _ => "-".into(),
        };
        write!(
            f,
            "{:<44} {:>6} {:>14.6e} {:>14.6e} {:>12} {:>10.3e} {:>9}",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.estimate,
            self.null_value,
            spread,
            self.threshold,
            self.samples
        )
    }
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_test_threshold() {
        assert!(VerificationReport::z_test("a", "0", 0.0, 0.29, 0.1, 3.0, 10).pass);
        assert!(!VerificationReport::z_test("a", "0", 0.0, 0.31, 0.1, 3.0, 10).pass);
        assert!(VerificationReport::z_test("a", "0", 1.0, 1.0, 0.0, 3.0, 10).pass);
        assert!(!VerificationReport::z_reject("a", "0", 0.0, 0.29, 0.1, 3.0, 10).pass);
    }

    #[test]
    fn json_round_trip() {
        let r = VerificationReport::p_test("ks", "same law", 0.01, 0.4, 0.01, 100).with_seed(9);
        let back: VerificationReport = serde_json::from_str(&r.to_json_line()).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn mean_se_basic() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
