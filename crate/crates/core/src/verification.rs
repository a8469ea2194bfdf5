//! Structured pass/fail records shared by the inequality and
//! density-of-states checks.

use serde::Serialize;

/// Multiplier on the paired standard error for estimate-level verdicts.
pub const SE_MULTIPLIER: f64 = 3.0;
/// Absolute (or relative, for moduli) tolerance of pathwise assertions.
pub const PATHWISE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EndpointMargin {
    pub q: Vec<f64>,
    pub qprime: Vec<f64>,
    /// The side that should be smaller.
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    /// Standard error of the paired difference.
    pub std_error: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub n_samples: usize,
    pub violations: usize,
    pub pathwise_violations: usize,
    pub worst_margin: f64,
    pub se_multiplier: f64,
    pub pathwise_tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub endpoints: Vec<EndpointMargin>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub energies: Vec<EnergyMargin>,
    pub config: serde_json::Value,
}

impl VerificationReport {
    pub(crate) fn finish(check: &str, n_samples: usize, pathwise_violations: usize, endpoints: Vec<EndpointMargin>, worst_pathwise: f64, config: serde_json::Value) -> Self {
        let violations = endpoints.iter().filter(|e| e.violated).count();
        let worst_margin = endpoints.iter().map(|e| e.margin).fold(worst_pathwise, f64::min);
        Self {
            check: check.to_string(),
            n_samples,
            violations,
            pathwise_violations,
            worst_margin,
            se_multiplier: SE_MULTIPLIER,
            pathwise_tolerance: PATHWISE_TOLERANCE,
            pass: violations == 0 && pathwise_violations == 0,
            endpoints,
            energies: Vec::new(),
            config,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyMargin {
    pub energy: f64,
    pub n_mean: f64,
    pub n_se: f64,
    pub bound: f64,
    pub beta: f64,
    /// `bound - n_mean`.
    pub margin: f64,
    pub violated: bool,
    /// Disorder mean of `N(E) e^{-beta E}` per volume.
    pub chain_count: f64,
    /// Disorder mean of `tr e^{-beta H} / volume`.
    pub chain_trace: f64,
    pub weyl_ratio: Option<f64>,
}
