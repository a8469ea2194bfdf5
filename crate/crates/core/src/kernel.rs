//! Monte Carlo evaluation of the Boltzmann kernel `<q| exp(-beta H(a, v)) |q'>`
//! over Brownian bridges, plus closed-form reference kernels.
//!
//! With Wiener time `T = beta hbar^2` the kernel is
//!
//! ```text
//! (2 pi T)^{-d/2} exp(-|q - q'|^2 / 2T) * E_bridge[ exp(-S) exp(i Phi) ]
//! S   = int_0^beta v(omega(tau hbar^2)) dtau           (trapezoid in tau)
//! Phi = (1/hbar) sum_k a(mid_k) . (x_{k+1} - x_k)       (midpoint rule)
//! ```
//!
//! The phase sum is the midpoint (Stratonovich) discretization of the line
//! integral, so pure gauges telescope and the estimate picks up the factor
//! `exp(i (chi(q) - chi(q')) / hbar)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, invalid, Error, Result};
use crate::paths::{self, BridgePath, PathGrid, SampledPath};
use crate::potentials::{CovarianceSpec, ScalarSpec, VectorSpec};
use crate::stats::{complex_mean_se, pairwise_sum};

/// Largest `-S` for which `exp(-S)` is finite.
const MAX_LOG_WEIGHT: f64 = 709.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FkConfig {
    pub beta: f64,
    pub hbar: f64,
    pub dim: usize,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl FkConfig {
    pub fn new(beta: f64, hbar: f64, dim: usize, n_steps: usize, n_paths: usize, seed: u64) -> Result<Self> {
        let cfg = Self { beta, hbar, dim, n_steps, n_paths, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(invalid(format!("hbar must be positive, got {}", self.hbar)));
        }
        if self.n_paths == 0 {
            return Err(invalid("need at least one path"));
        }
        PathGrid::new(self.wiener_time(), self.n_steps, self.dim).map(|_| ())
    }

    /// Wiener time `beta hbar^2`.
    pub fn wiener_time(&self) -> f64 {
        self.beta * self.hbar * self.hbar
    }

    pub fn grid(&self) -> Result<PathGrid> {
        PathGrid::new(self.wiener_time(), self.n_steps, self.dim)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_paths(self, n_paths: usize) -> Self {
        Self { n_paths, ..self }
    }
}

fn check_path(path: &BridgePath, cfg: &FkConfig) -> Result<()> {
    let g = path.grid();
    check_dim(cfg.dim, g.dim())?;
    let t = cfg.wiener_time();
    if g.n_steps() != cfg.n_steps || (g.total_time() - t).abs() > 1e-12 * t {
        return Err(invalid(format!(
            "path grid (T = {}, n = {}) does not match config (T = {t}, n = {})",
            g.total_time(),
            g.n_steps(),
            cfg.n_steps
        )));
    }
    Ok(())
}

/// Trapezoid rule for `int_0^beta v(path) dtau`.
pub fn scalar_action(path: &BridgePath, v: &ScalarSpec, cfg: &FkConfig) -> Result<f64> {
    check_path(path, cfg)?;
    Ok(action_unchecked(path, v, cfg.beta))
}

fn action_unchecked(path: &BridgePath, v: &ScalarSpec, beta: f64) -> f64 {
    let n = path.grid().n_steps();
    if let ScalarSpec::Constant(c) = v {
        return beta * c;
    }
    if v.is_zero() {
        return 0.0;
    }
    let mut acc = 0.5 * (v.value(path.node(0)) + v.value(path.node(n)));
    for k in 1..n {
        acc += v.value(path.node(k));
    }
    acc * beta / n as f64
}

/// Midpoint-rule line integral `(1/hbar) sum_k a(mid_k) . dx_k`.
pub fn magnetic_phase(path: &BridgePath, a: &VectorSpec, cfg: &FkConfig) -> Result<f64> {
    check_path(path, cfg)?;
    a.validate(cfg.dim)?;
    Ok(phase_unchecked(path, a, cfg.hbar))
}

fn phase_unchecked(path: &BridgePath, a: &VectorSpec, hbar: f64) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let d = path.grid().dim();
    let mut mid = vec![0.0; d];
    let mut field = vec![0.0; d];
    let mut acc = 0.0;
    for k in 0..path.grid().n_steps() {
        let (x0, x1) = (path.node(k), path.node(k + 1));
        for j in 0..d {
            mid[j] = 0.5 * (x0[j] + x1[j]);
        }
        field.iter_mut().for_each(|f| *f = 0.0);
        a.accumulate(&mid, &mut field);
        for j in 0..d {
            acc += field[j] * (x1[j] - x0[j]);
        }
    }
    acc / hbar
}

/// Scalar action and magnetic phase of one bridge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathWeight {
    pub action: f64,
    pub phase: f64,
}

impl PathWeight {
    /// `exp(-S) exp(i Phi)`.
    pub fn summand(&self) -> Complex64 {
        Complex64::from_polar((-self.action).exp(), self.phase)
    }

    /// `exp(-S)`, the modulus of [`PathWeight::summand`].
    pub fn modulus(&self) -> f64 {
        (-self.action).exp()
    }
}

/// Action and phase of bridges `0..n_paths` from `qprime` to `q`, in path
/// index order.
pub fn path_weights(
    cfg: &FkConfig,
    v: &ScalarSpec,
    a: &VectorSpec,
    q: &[f64],
    qprime: &[f64],
) -> Result<Vec<PathWeight>> {
    cfg.validate()?;
    check_dim(cfg.dim, q.len())?;
    check_dim(cfg.dim, qprime.len())?;
    a.validate(cfg.dim)?;
    if let ScalarSpec::GaussianField(f) = v {
        check_dim(f.dim(), cfg.dim)?;
    }
    let grid = cfg.grid()?;
    let weights: Vec<PathWeight> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let b = paths::to_bridge(&paths::wiener_path(&grid, cfg.seed, i), qprime, q)
                .expect("dimensions checked above");
            PathWeight { action: action_unchecked(&b, v, cfg.beta), phase: phase_unchecked(&b, a, cfg.hbar) }
        })
        .collect();
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(-w.action <= MAX_LOG_WEIGHT) || !w.phase.is_finite())
    {
        return Err(Error::EstimateOverflow { path_index: i, action: w.action });
    }
    Ok(weights)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelEstimate {
    pub value: Complex64,
    pub std_error: f64,
    pub n_paths: usize,
    pub prefactor: f64,
    pub q: Vec<f64>,
    pub qprime: Vec<f64>,
    pub config: FkConfig,
}

impl KernelEstimate {
    /// Estimate from per-path summands that share one prefactor. A single
    /// summand carries no error estimate (NaN).
    pub fn from_summands(summands: &[Complex64], prefactor: f64, cfg: &FkConfig, q: &[f64], qprime: &[f64]) -> Self {
        let (mean, se) = complex_mean_se(summands);
        Self {
            value: mean * prefactor,
            std_error: se * prefactor,
            n_paths: summands.len(),
            prefactor,
            q: q.to_vec(),
            qprime: qprime.to_vec(),
            config: *cfg,
        }
    }
}

pub fn estimate_kernel(
    cfg: &FkConfig,
    v: &ScalarSpec,
    a: &VectorSpec,
    q: &[f64],
    qprime: &[f64],
) -> Result<KernelEstimate> {
    let weights = path_weights(cfg, v, a, q, qprime)?;
    let summands: Vec<Complex64> = weights.iter().map(PathWeight::summand).collect();
    Ok(KernelEstimate::from_summands(&summands, free_kernel(cfg, q, qprime), cfg, q, qprime))
}

/// `(2 pi beta hbar^2)^{-d/2} exp(-|q - q'|^2 / (2 beta hbar^2))`.
pub fn free_kernel(cfg: &FkConfig, q: &[f64], qprime: &[f64]) -> f64 {
    let t = cfg.wiener_time();
    let r2: f64 = q.iter().zip(qprime).map(|(a, b)| (a - b) * (a - b)).sum();
    (2.0 * PI * t).powf(-0.5 * cfg.dim as f64) * (-r2 / (2.0 * t)).exp()
}

/// Upper bound on the modulus of the planar kernel for fields dominating a
/// constant `b0`. Exact for the constant field itself when `q_2 = q_2'`;
/// off that line the exact constant-field modulus decays isotropically and
/// lies below this value.
pub fn landau_abs_kernel(b0: f64, cfg: &FkConfig, q: &[f64], qprime: &[f64]) -> Result<f64> {
    check_dim(2, cfg.dim)?;
    check_dim(2, q.len())?;
    check_dim(2, qprime.len())?;
    let b0 = b0.abs();
    if b0 == 0.0 {
        return Ok(free_kernel(cfg, q, qprime));
    }
    let (beta, hbar) = (cfg.beta, cfg.hbar);
    let x = 0.5 * beta * hbar * b0;
    let d1 = q[0] - qprime[0];
    let d2 = q[1] - qprime[1];
    let pre = b0 / (4.0 * PI * hbar) / x.sinh();
    Ok(pre * (-d1 * d1 * b0 / (4.0 * hbar) / x.tanh() - d2 * d2 / (2.0 * beta * hbar * hbar)).exp())
}

/// Trapezoid weights `dtau * (1/2, 1, ..., 1, 1/2)` over `n + 1` nodes.
pub(crate) fn trapezoid_weights(n: usize, beta: f64) -> Vec<f64> {
    let h = beta / n as f64;
    (0..=n).map(|k| if k == 0 || k == n { 0.5 * h } else { h }).collect()
}

/// Closed-form Gaussian disorder average of `exp(-S)` for one path:
/// `exp(1/2 sum_jk w_j w_k C(x_j - x_k))`.
pub fn annealed_weight(path: &BridgePath, cov: &CovarianceSpec, cfg: &FkConfig) -> Result<f64> {
    check_path(path, cfg)?;
    let n = path.grid().n_steps();
    let w = trapezoid_weights(n, cfg.beta);
    let d = path.grid().dim();
    let mut lag = vec![0.0; d];
    let mut terms = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for k in 0..=n {
            for (l, (a, b)) in lag.iter_mut().zip(path.node(j).iter().zip(path.node(k))) {
                *l = a - b;
            }
            terms.push(w[j] * w[k] * cov.eval(&lag));
        }
    }
    Ok((0.5 * pairwise_sum(&terms)).exp())
}
