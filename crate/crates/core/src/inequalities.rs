//! Checks of the diamagnetic inequality `|K(a, v)| <= K(0, v)` and of the
//! planar diamagnetic monotonicity for fields `b(q_1)`, both per sampled
//! path and at the level of Monte Carlo estimates.
//!
//! Compared estimates always share one path sample, so verdicts are based
//! on the standard error of the paired difference.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{check_dim, invalid, Error, Result};
use crate::kernel::{self, FkConfig, KernelEstimate, PathWeight};
use crate::paths::{self, PathGrid};
use crate::potentials::{BFieldProfile, ScalarSpec, VectorSpec};
use crate::stats::mean_se;
use crate::verification::{EndpointMargin, VerificationReport};

pub use crate::verification::{PATHWISE_TOLERANCE, SE_MULTIPLIER};
/// Probe points used to verify `|b| <= B` before a monotonicity run.
pub const HYPOTHESIS_PROBES: usize = 10_000;

/// Paired comparison `|mean(z)| <= mean(r)` with `|z_p| <= r_p` expected per
/// path. Uses the linearization `|mean z| ~ Re(conj(u) mean z)`, `u` the
/// phase of `mean z`, for the error of the difference.
fn paired_margin(z: &[Complex64], r: &[f64], prefactor: f64, q: &[f64], qprime: &[f64]) -> EndpointMargin {
    let n = z.len() as f64;
    let zm: Complex64 = crate::stats::pairwise_sum(z) / n;
    let (rm, _) = mean_se(r);
    let u = if zm.norm() > 0.0 { zm / zm.norm() } else { Complex64::new(1.0, 0.0) };
    let diffs: Vec<f64> = z.iter().zip(r).map(|(z, r)| r - (u.conj() * z).re).collect();
    let (_, se) = mean_se(&diffs);
    let se = if se.is_nan() { 0.0 } else { se * prefactor };
    let lhs = zm.norm() * prefactor;
    let rhs = rm * prefactor;
    let margin = rhs - lhs;
    // rounding slack for cases where both sides agree identically
    let slack = PATHWISE_TOLERANCE * rhs.abs();
    EndpointMargin {
        q: q.to_vec(),
        qprime: qprime.to_vec(),
        lhs,
        rhs,
        margin,
        std_error: se,
        violated: margin < -(SE_MULTIPLIER * se + slack),
    }
}

/// Diamagnetic inequality on shared bridge samples: the per-path modulus
/// identity `|e^{-S + i Phi}| = e^{-S}` and `|K(a, v)| <= K(0, v)` per
/// endpoint pair.
pub fn diamagnetic_check(
    cfg: &FkConfig,
    v: &ScalarSpec,
    a: &VectorSpec,
    endpoints: &[(Vec<f64>, Vec<f64>)],
) -> Result<VerificationReport> {
    if endpoints.is_empty() {
        return Err(invalid("no endpoint pairs given"));
    }
    let mut margins = Vec::with_capacity(endpoints.len());
    let mut pathwise = 0usize;
    for (q, qprime) in endpoints {
        let weights = kernel::path_weights(cfg, v, a, q, qprime)?;
        let z: Vec<Complex64> = weights.iter().map(PathWeight::summand).collect();
        let r: Vec<f64> = weights.iter().map(PathWeight::modulus).collect();
        pathwise += z
            .iter()
            .zip(&r)
            .filter(|(z, r)| (z.norm() - **r).abs() > PATHWISE_TOLERANCE * **r)
            .count();
        margins.push(paired_margin(&z, &r, kernel::free_kernel(cfg, q, qprime), q, qprime));
    }
    let config = json!({
        "beta": cfg.beta, "hbar": cfg.hbar, "dim": cfg.dim,
        "n_steps": cfg.n_steps, "n_paths": cfg.n_paths, "seed": cfg.seed,
    });
    Ok(VerificationReport::finish("diamagnetic", cfg.n_paths * endpoints.len(), pathwise, margins, f64::INFINITY, config))
}

/// Uniform node average and variance of a profile along a path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathStats {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of `profile(x_k)` with equal weight on every node.
/// The variance is accumulated about the mean, so it is non-negative and
/// unchanged when a constant is added to the profile.
pub fn path_mean_variance<I, F>(positions: I, profile: F) -> PathStats
where
    I: IntoIterator<Item = f64>,
    F: Fn(f64) -> f64,
{
    let vals: Vec<f64> = positions.into_iter().map(profile).collect();
    let n = vals.len() as f64;
    let mean = crate::stats::pairwise_sum(&vals) / n;
    let dev: Vec<f64> = vals.iter().map(|a| (a - mean) * (a - mean)).collect();
    PathStats { mean, variance: crate::stats::pairwise_sum(&dev) / n }
}

/// Sampling parameters for the planar checks, which run with `hbar = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McParams {
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl McParams {
    fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || self.n_paths == 0 {
            return Err(invalid("need positive step and path counts"));
        }
        Ok(())
    }
}

/// Which of `|b| <= B` or `|b| <= -B` holds on the probe grid over `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Domination {
    Positive,
    Negative,
}

pub fn check_field_hypothesis(b: &BFieldProfile, big: &BFieldProfile, lo: f64, hi: f64) -> Result<Domination> {
    let probes = (0..HYPOTHESIS_PROBES).map(|i| lo + (hi - lo) * i as f64 / (HYPOTHESIS_PROBES - 1) as f64);
    let mut pos = true;
    let mut neg = true;
    let mut worst = None;
    for r in probes {
        let (bb, cap) = (b.value(r).abs(), big.value(r));
        let slack = PATHWISE_TOLERANCE * cap.abs().max(1.0);
        if bb > cap + slack {
            pos = false;
            worst.get_or_insert(r);
        }
        if bb > -cap + slack {
            neg = false;
        }
        if !pos && !neg {
            break;
        }
    }
    match (pos, neg) {
        (true, _) => Ok(Domination::Positive),
        (false, true) => Ok(Domination::Negative),
        _ => Err(Error::Hypothesis(format!(
            "neither |b| <= B nor |b| <= -B holds on [{lo}, {hi}] (first failure of |b| <= B near r = {})",
            worst.unwrap_or(lo)
        ))),
    }
}

fn probe_window(beta: f64, q1: f64, q1prime: f64) -> (f64, f64) {
    let spread = 6.0 * beta.sqrt();
    (q1.min(q1prime) - spread, q1.max(q1prime) + spread)
}

fn bridges_1d(beta: f64, mc: &McParams, q1: f64, q1prime: f64) -> Result<Vec<paths::BridgePath>> {
    let grid = PathGrid::new(beta, mc.n_steps, 1)?;
    paths::sample_bridge_batch(&grid, mc.seed, mc.n_paths, &[q1prime], &[q1])
}

/// Pathwise `s^2(a) <= s^2(A)` for `a`, `A` the Landau potentials of `b`
/// and `B`, over 1-D bridges from `q1prime` to `q1` in time `beta`.
pub fn variance_comparison_check(
    b: &BFieldProfile,
    big: &BFieldProfile,
    beta: f64,
    q1: f64,
    q1prime: f64,
    mc: &McParams,
) -> Result<VerificationReport> {
    if !(beta > 0.0) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    mc.validate()?;
    let (lo, hi) = probe_window(beta, q1, q1prime);
    let dom = check_field_hypothesis(b, big, lo, hi)?;
    let bridges = bridges_1d(beta, mc, q1, q1prime)?;
    let gaps: Vec<f64> = bridges
        .par_iter()
        .map(|p| {
            let sa = path_mean_variance(p.component(0), |r| b.integral(r));
            let sb = path_mean_variance(p.component(0), |r| big.integral(r));
            sb.variance - sa.variance
        })
        .collect();
    let violations = gaps.iter().filter(|&&g| g < -PATHWISE_TOLERANCE).count();
    let worst = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let config = json!({
        "beta": beta, "q1": q1, "q1prime": q1prime,
        "n_steps": mc.n_steps, "n_paths": mc.n_paths, "seed": mc.seed,
        "domination": dom,
    });
    Ok(VerificationReport::finish("variance-comparison", mc.n_paths, violations, Vec::new(), worst, config))
}

fn planar_prefactor(beta: f64, q: &[f64; 2], qprime: &[f64; 2]) -> f64 {
    let d1 = q[0] - qprime[0];
    let d2 = q[1] - qprime[1];
    (2.0 * PI * beta).recip() * (-(d1 * d1 + d2 * d2) / (2.0 * beta)).exp()
}

fn planar_config(beta: f64, mc: &McParams) -> FkConfig {
    FkConfig { beta, hbar: 1.0, dim: 2, n_steps: mc.n_steps, n_paths: mc.n_paths, seed: mc.seed }
}

/// Planar kernel for the vector potential `(0, A(q_1))` through the 1-D
/// representation
/// `(2 pi beta)^{-1} e^{-|q - q'|^2 / 2 beta} E[exp(-beta s^2 / 2) exp(i (q_2 - q_2') m)]`
/// with `m`, `s^2` the node mean and variance of `A` along a 1-D bridge.
pub fn effective_kernel_1d<F>(profile: F, beta: f64, q: &[f64; 2], qprime: &[f64; 2], mc: &McParams) -> Result<KernelEstimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(beta > 0.0) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    mc.validate()?;
    let dq2 = q[1] - qprime[1];
    let bridges = bridges_1d(beta, mc, q[0], qprime[0])?;
    let summands: Vec<Complex64> = bridges
        .par_iter()
        .map(|p| {
            let s = path_mean_variance(p.component(0), &profile);
            Complex64::from_polar((-0.5 * beta * s.variance).exp(), dq2 * s.mean)
        })
        .collect();
    let cfg = planar_config(beta, mc);
    Ok(KernelEstimate::from_summands(&summands, planar_prefactor(beta, q, qprime), &cfg, q, qprime))
}

/// Monotonicity `|K^(B)(q, q')| <= |K^(b)((q_1, 0), (q_1', 0))| e^{-(q_2 - q_2')^2 / 2 beta}`
/// at every endpoint pair, plus the per-path ordering
/// `exp(-beta s^2(A) / 2) <= exp(-beta s^2(a) / 2)`.
pub fn monotonicity_check(
    b: &BFieldProfile,
    big: &BFieldProfile,
    endpoints: &[([f64; 2], [f64; 2])],
    beta: f64,
    mc: &McParams,
) -> Result<VerificationReport> {
    if !(beta > 0.0) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    mc.validate()?;
    if endpoints.is_empty() {
        return Err(invalid("no endpoint pairs given"));
    }
    let lo = endpoints.iter().map(|(q, p)| probe_window(beta, q[0], p[0]).0).fold(f64::INFINITY, f64::min);
    let hi = endpoints.iter().map(|(q, p)| probe_window(beta, q[0], p[0]).1).fold(f64::NEG_INFINITY, f64::max);
    let dom = check_field_hypothesis(b, big, lo, hi)?;

    let mut margins = Vec::with_capacity(endpoints.len());
    let mut pathwise = 0usize;
    let mut worst_path = f64::INFINITY;
    for (q, qprime) in endpoints {
        let dq2 = q[1] - qprime[1];
        let bridges = bridges_1d(beta, mc, q[0], qprime[0])?;
        let pairs: Vec<(Complex64, f64)> = bridges
            .par_iter()
            .map(|p| {
                let sa = path_mean_variance(p.component(0), |r| b.integral(r));
                let sb = path_mean_variance(p.component(0), |r| big.integral(r));
                (Complex64::from_polar((-0.5 * beta * sb.variance).exp(), dq2 * sb.mean), (-0.5 * beta * sa.variance).exp())
            })
            .collect();
        let (z, r): (Vec<Complex64>, Vec<f64>) = pairs.into_iter().unzip();
        for (z, r) in z.iter().zip(&r) {
            let gap = r - z.norm();
            worst_path = worst_path.min(gap);
            if gap < -PATHWISE_TOLERANCE {
                pathwise += 1;
            }
        }
        margins.push(paired_margin(&z, &r, planar_prefactor(beta, q, qprime), q, qprime));
    }
    let config = json!({
        "beta": beta, "hbar": 1.0,
        "n_steps": mc.n_steps, "n_paths": mc.n_paths, "seed": mc.seed,
        "domination": dom,
    });
    Ok(VerificationReport::finish("monotonicity", mc.n_paths * endpoints.len(), pathwise, margins, worst_path, config))
}

/// Convenience used by checks that take endpoints as slices.
pub fn planar_endpoint(q: &[f64]) -> Result<[f64; 2]> {
    check_dim(2, q.len())?;
    Ok([q[0], q[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{to_bridge, wiener_path, WienerPath};

    fn doubling_sum(a: &[f64], big: &[f64]) -> f64 {
        // sum_jk [a+_j - a+_k][a-_j - a-_k], a+- = A +- a
        let n = a.len();
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                let p = (big[j] + a[j]) - (big[k] + a[k]);
                let m = (big[j] - a[j]) - (big[k] - a[k]);
                acc += p * m;
            }
        }
        acc
    }

    #[test]
    fn constant_profile_has_zero_variance() {
        let s = path_mean_variance([0.1, 2.0, -3.0, 0.5], |_| 1.7);
        assert!((s.mean - 1.7).abs() < 1e-15);
        assert_eq!(s.variance, 0.0);
    }

    #[test]
    fn straight_line_limit() {
        let n = 100_000;
        let xs = (0..=n).map(|k| k as f64 / n as f64);
        let s = path_mean_variance(xs, |r| r);
        assert!((s.mean - 0.5).abs() < 1e-12);
        // exact discrete value (n + 2) / (12 n)
        assert!((s.variance - (n as f64 + 2.0) / (12.0 * n as f64)).abs() < 1e-12);
        assert!((s.variance - 1.0 / 12.0).abs() < 1e-5);
    }

    #[test]
    fn variance_is_shift_invariant() {
        let g = PathGrid::new(1.0, 64, 1).unwrap();
        let b = to_bridge(&wiener_path(&g, 4, 0), &[0.3], &[-0.2]).unwrap();
        let s1 = path_mean_variance(b.component(0), |r| r.sin());
        let s2 = path_mean_variance(b.component(0), |r| r.sin() + 12.5);
        assert!((s1.variance - s2.variance).abs() < 1e-13);
        assert!((s2.mean - s1.mean - 12.5).abs() < 1e-13);
    }

    #[test]
    fn doubling_identity_matches_brute_force() {
        let b = BFieldProfile::Sinusoidal { b0: 0.0, b1: 1.0, kappa: 1.0 };
        let big = BFieldProfile::Constant(1.0);
        let g = PathGrid::new(1.0, 12, 1).unwrap();
        for i in 0..200 {
            let p = to_bridge(&wiener_path(&g, 17, i), &[0.0], &[0.5]).unwrap();
            let xs: Vec<f64> = p.component(0).collect();
            let a: Vec<f64> = xs.iter().map(|&r| b.integral(r)).collect();
            let aa: Vec<f64> = xs.iter().map(|&r| big.integral(r)).collect();
            let ds = doubling_sum(&a, &aa);
            assert!(ds >= -1e-12, "double sum {ds}");
            let n1 = xs.len() as f64;
            let gap = path_mean_variance(xs.iter().copied(), |r| big.integral(r)).variance
                - path_mean_variance(xs.iter().copied(), |r| b.integral(r)).variance;
            assert!((2.0 * n1 * n1 * gap - ds).abs() < 1e-9 * (1.0 + ds.abs()), "{} vs {ds}", 2.0 * n1 * n1 * gap);
        }
    }

    #[test]
    fn variance_comparison_examples() {
        let mc = McParams { n_steps: 64, n_paths: 2000, seed: 3 };
        let r = variance_comparison_check(&BFieldProfile::Constant(0.0), &BFieldProfile::Constant(1.0), 1.0, 0.0, 0.0, &mc).unwrap();
        assert!(r.pass);
        assert_eq!(r.pathwise_violations, 0);
        let r = variance_comparison_check(&BFieldProfile::Constant(1.0), &BFieldProfile::Constant(1.0), 1.0, 0.5, -0.5, &mc).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_margin, 0.0);
    }

    #[test]
    fn hypothesis_violation_is_an_error() {
        let mc = McParams { n_steps: 16, n_paths: 10, seed: 0 };
        let b = BFieldProfile::Constant(1.0);
        let big = BFieldProfile::Sinusoidal { b0: 0.0, b1: 1.0, kappa: 1.0 };
        assert!(matches!(variance_comparison_check(&b, &big, 1.0, 0.0, 0.0, &mc), Err(Error::Hypothesis(_))));
        let ep = [([0.0, 0.0], [0.0, 0.0])];
        assert!(matches!(monotonicity_check(&b, &big, &ep, 1.0, &mc), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn negative_domination_is_accepted() {
        let b = BFieldProfile::Sinusoidal { b0: 0.0, b1: 0.5, kappa: 1.0 };
        let big = BFieldProfile::Constant(-1.0);
        assert_eq!(check_field_hypothesis(&b, &big, -5.0, 5.0).unwrap(), Domination::Negative);
        assert_eq!(check_field_hypothesis(&b, &big.negated(), -5.0, 5.0).unwrap(), Domination::Positive);
    }

    #[test]
    fn zero_field_effective_kernel_factorizes() {
        let mc = McParams { n_steps: 32, n_paths: 100, seed: 1 };
        let (q, qp) = ([0.4, -0.3], [-0.1, 0.2]);
        let k = effective_kernel_1d(|_| 0.0, 1.3, &q, &qp, &mc).unwrap();
        let cfg = FkConfig::new(1.3, 1.0, 2, 1, 1, 0).unwrap();
        let free = kernel::free_kernel(&cfg, &q, &qp);
        assert!((k.value.re - free).abs() < 1e-15 * free);
        assert_eq!(k.value.im, 0.0);
        assert_eq!(k.std_error, 0.0);
    }

    #[test]
    fn constant_shift_of_profile_keeps_modulus() {
        let mc = McParams { n_steps: 64, n_paths: 2000, seed: 5 };
        let (q, qp) = ([0.0, 0.7], [0.2, 0.0]);
        let k1 = effective_kernel_1d(|r| r, 1.0, &q, &qp, &mc).unwrap();
        let k2 = effective_kernel_1d(|r| r + 3.0, 1.0, &q, &qp, &mc).unwrap();
        assert!((k1.value.norm() - k2.value.norm()).abs() < 1e-12);
    }

    #[test]
    fn diamagnetic_zero_field_has_zero_margin() {
        let cfg = FkConfig::new(1.0, 1.0, 1, 32, 2000, 2).unwrap();
        let eps = vec![(vec![0.0], vec![0.0]), (vec![0.5], vec![-0.5])];
        let r = diamagnetic_check(&cfg, &ScalarSpec::Harmonic { omega: 1.0 }, &VectorSpec::Zero, &eps).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_margin, 0.0);
    }

    #[test]
    fn diamagnetic_pure_gauge_is_equality() {
        let cfg = FkConfig::new(1.0, 1.0, 1, 32, 4000, 2).unwrap();
        let eps = vec![(vec![1.0], vec![0.0])];
        let r = diamagnetic_check(&cfg, &ScalarSpec::Harmonic { omega: 1.0 }, &VectorSpec::QuadraticGauge { coeff: 0.7 }, &eps).unwrap();
        assert!(r.pass);
        let e = &r.endpoints[0];
        assert!(e.margin.abs() <= 3.0 * e.std_error + 1e-12 * e.rhs);
    }

    #[test]
    fn straight_path_stats_via_wiener_zero() {
        let g = PathGrid::new(1.0, 4, 1).unwrap();
        let b = to_bridge(&WienerPath::from_nodes(g, vec![0.0; 5]).unwrap(), &[0.0], &[1.0]).unwrap();
        let s = path_mean_variance(b.component(0), |r| r);
        assert!((s.mean - 0.5).abs() < 1e-15);
        assert!((s.variance - 6.0 / 48.0).abs() < 1e-15);
    }
}
