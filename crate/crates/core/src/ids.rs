//! Integrated density of states for Gaussian random potentials by
//! disorder-averaged Dirichlet eigenvalue counting, and the quasi-classical
//! upper bound `N(E) <= (2 pi beta hbar^2)^{-d/2} L_beta e^{beta E}`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{invalid, Result};
use crate::oracle::{build_lattice_hamiltonian, count_states, LatticeSpec};
use crate::potentials::{gaussian_laplace_moment, CovarianceSpec, FieldRealization, ScalarSpec, VectorSpec, DEFAULT_MODES};
use crate::rng::{self, Domain};
use crate::stats::mean_se;
use crate::verification::{EnergyMargin, VerificationReport, PATHWISE_TOLERANCE, SE_MULTIPLIER};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdsCurve {
    pub energies: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_realizations: usize,
    pub lattice: LatticeSpec,
    pub hbar: f64,
    pub covariance: serde_json::Value,
    /// Sorted eigenvalues of every realization, kept for the trace layer
    /// of the bound comparison.
    #[serde(skip)]
    pub spectra: Vec<Vec<f64>>,
}

fn check_energies(energies: &[f64]) -> Result<()> {
    if energies.is_empty() {
        return Err(invalid("energy grid is empty"));
    }
    if energies.iter().any(|e| !e.is_finite()) || energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("energies must be finite and sorted ascending"));
    }
    Ok(())
}

fn covariance_snapshot(cov: &CovarianceSpec) -> serde_json::Value {
    match cov {
        CovarianceSpec::SquaredExponential { sigma2, ell } => json!({"kind": "squared-exponential", "sigma2": sigma2, "ell": ell}),
        CovarianceSpec::TabulatedSpectral { sigma2, spectrum } => {
            json!({"kind": "tabulated-spectral", "sigma2": sigma2, "spectrum": spectrum.points().collect::<Vec<_>>()})
        }
    }
}

/// Counts per volume averaged over `n_realizations` fields, realization
/// `r` seeded by `(seed, r)`.
pub fn estimate_ids(
    lattice: &LatticeSpec,
    cov: &CovarianceSpec,
    n_realizations: usize,
    energies: &[f64],
    seed: u64,
) -> Result<IdsCurve> {
    estimate_ids_with(lattice, cov, n_realizations, energies, seed, 1.0, DEFAULT_MODES)
}

pub fn estimate_ids_with(
    lattice: &LatticeSpec,
    cov: &CovarianceSpec,
    n_realizations: usize,
    energies: &[f64],
    seed: u64,
    hbar: f64,
    modes: usize,
) -> Result<IdsCurve> {
    if n_realizations < 2 {
        return Err(invalid("need at least two disorder realizations"));
    }
    check_energies(energies)?;
    let spectra: Vec<Vec<f64>> = (0..n_realizations as u64)
        .into_par_iter()
        .map(|r| {
            let field = FieldRealization::seeded(cov, lattice.dim, modes, rng::child_seed(seed, Domain::Disorder, r))?;
            let op = build_lattice_hamiltonian(lattice, &ScalarSpec::GaussianField(field), &VectorSpec::Zero, hbar)?;
            Ok(op.eigenvalues())
        })
        .collect::<Result<_>>()?;
    let mut curve = curve_from_spectra(lattice, energies, spectra, hbar);
    curve.covariance = covariance_snapshot(cov);
    Ok(curve)
}

fn curve_from_spectra(lattice: &LatticeSpec, energies: &[f64], spectra: Vec<Vec<f64>>, hbar: f64) -> IdsCurve {
    let vol = lattice.volume();
    let mut mean = Vec::with_capacity(energies.len());
    let mut std_error = Vec::with_capacity(energies.len());
    for &e in energies {
        let counts: Vec<f64> = spectra.iter().map(|s| count_states(s, e) as f64 / vol).collect();
        let (m, se) = mean_se(&counts);
        mean.push(m);
        std_error.push(if se.is_nan() { 0.0 } else { se });
    }
    IdsCurve {
        energies: energies.to_vec(),
        mean,
        std_error,
        n_realizations: spectra.len(),
        lattice: *lattice,
        hbar,
        covariance: serde_json::Value::Null,
        spectra,
    }
}

/// Counts per volume of the disorder-free lattice.
pub fn clean_ids(lattice: &LatticeSpec, energies: &[f64], hbar: f64) -> Result<Vec<f64>> {
    check_energies(energies)?;
    let op = build_lattice_hamiltonian(lattice, &ScalarSpec::Zero, &VectorSpec::Zero, hbar)?;
    let ev = op.eigenvalues();
    Ok(energies.iter().map(|&e| count_states(&ev, e) as f64 / lattice.volume()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCurve {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    pub betas: Vec<f64>,
    pub optimized: bool,
}

/// `(2 pi beta hbar^2)^{-d/2} L_beta e^{beta E}`.
pub fn pastur_bound(energy: f64, beta: f64, lbeta: f64, hbar: f64, dim: usize) -> f64 {
    (2.0 * PI * beta * hbar * hbar).powf(-0.5 * dim as f64) * lbeta * (beta * energy).exp()
}

fn log_bound(beta: f64, energy: f64, cov0: f64, hbar: f64, dim: usize) -> f64 {
    -0.5 * dim as f64 * (2.0 * PI * beta * hbar * hbar).ln() + 0.5 * beta * beta * cov0 + beta * energy
}

/// Minimizes the bound over `beta > 0` for the Gaussian model. The log of
/// the bound is strictly convex in `beta`, so its derivative
/// `-d/(2 beta) + beta C(0) + E` has one root; it is bracketed and then
/// found by Newton steps that fall back to bisection.
pub fn optimized_pastur_bound(energy: f64, cov0: f64, hbar: f64, dim: usize) -> Result<(f64, f64)> {
    if !(cov0.is_finite() && cov0 > 0.0) {
        return Err(invalid(format!("single-site variance must be positive, got {cov0}")));
    }
    if !energy.is_finite() || dim == 0 {
        return Err(invalid("energy must be finite and dim positive"));
    }
    let half_d = 0.5 * dim as f64;
    let slope = |b: f64| -half_d / b + b * cov0 + energy;
    let curvature = |b: f64| half_d / (b * b) + cov0;

    let mut hi = 1.0;
    while slope(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while slope(lo) >= 0.0 {
        lo *= 0.5;
    }
    let mut beta = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = slope(beta);
        if g == 0.0 {
            break;
        }
        if g < 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
        let newton = beta - g / curvature(beta);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - beta).abs() <= 4.0 * f64::EPSILON * beta {
            beta = next;
            break;
        }
        beta = next;
    }
    Ok((log_bound(beta, energy, cov0, hbar, dim).exp(), beta))
}

pub fn fixed_beta_bounds(energies: &[f64], beta: f64, cov0: f64, hbar: f64, dim: usize) -> Result<BoundCurve> {
    let lbeta = gaussian_laplace_moment(cov0, beta)?;
    Ok(BoundCurve {
        energies: energies.to_vec(),
        values: energies.iter().map(|&e| pastur_bound(e, beta, lbeta, hbar, dim)).collect(),
        betas: vec![beta; energies.len()],
        optimized: false,
    })
}

pub fn optimized_bounds(energies: &[f64], cov0: f64, hbar: f64, dim: usize) -> Result<BoundCurve> {
    let (values, betas) = energies
        .iter()
        .map(|&e| optimized_pastur_bound(e, cov0, hbar, dim))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(BoundCurve { energies: energies.to_vec(), values, betas, optimized: true })
}

/// `(E / 2 pi hbar^2)^{d/2} / Gamma(1 + d/2)`.
pub fn weyl_asymptote(energy: f64, hbar: f64, dim: usize) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(invalid(format!("Weyl asymptote needs E > 0, got {energy}")));
    }
    Ok((energy / (2.0 * PI * hbar * hbar)).powf(0.5 * dim as f64) / gamma_one_plus_half(dim))
}

/// `Gamma(1 + d/2)` by the half-integer recursion.
fn gamma_one_plus_half(dim: usize) -> f64 {
    let (mut g, mut x) = if dim.is_multiple_of(2) { (1.0, 1.0) } else { (0.5 * PI.sqrt(), 1.5) };
    let target = 1.0 + 0.5 * dim as f64;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Checks `N(E) <= bound(E) + 3 SE(E)` on a shared energy grid. Each
/// realization also satisfies `N(E) e^{-beta E} <= tr e^{-beta H} / V`
/// exactly; failures of that layer count as pathwise violations.
pub fn compare_ids_to_bounds(curve: &IdsCurve, bounds: &BoundCurve, with_weyl: bool) -> Result<VerificationReport> {
    if curve.energies != bounds.energies {
        return Err(invalid("IDS curve and bound curve use different energy grids"));
    }
    let vol = curve.lattice.volume();
    let d = curve.lattice.dim;
    let mut margins = Vec::with_capacity(curve.energies.len());
    let mut chain_violations = 0usize;
    for (i, &e) in curve.energies.iter().enumerate() {
        let beta = bounds.betas[i];
        let (n, se, bound) = (curve.mean[i], curve.std_error[i], bounds.values[i]);
        let mut counts = Vec::with_capacity(curve.spectra.len());
        let mut traces = Vec::with_capacity(curve.spectra.len());
        for s in &curve.spectra {
            let c = count_states(s, e) as f64 / vol * (-beta * e).exp();
            let t = s.iter().map(|&l| (-beta * l).exp()).sum::<f64>() / vol;
            if c > t * (1.0 + PATHWISE_TOLERANCE) {
                chain_violations += 1;
            }
            counts.push(c);
            traces.push(t);
        }
        let avg = |xs: &[f64]| if xs.is_empty() { f64::NAN } else { xs.iter().sum::<f64>() / xs.len() as f64 };
        let weyl_ratio = if with_weyl && e > 0.0 { Some(n / weyl_asymptote(e, curve.hbar, d)?) } else { None };
        margins.push(EnergyMargin {
            energy: e,
            n_mean: n,
            n_se: se,
            bound,
            beta,
            margin: bound - n,
            violated: n > bound + SE_MULTIPLIER * se,
            chain_count: avg(&counts),
            chain_trace: avg(&traces),
            weyl_ratio,
        });
    }
    let config = json!({
        "lattice": curve.lattice,
        "hbar": curve.hbar,
        "n_realizations": curve.n_realizations,
        "covariance": curve.covariance,
        "optimized": bounds.optimized,
    });
    let mut report = VerificationReport::finish("ids-bound", curve.n_realizations, chain_violations, Vec::new(), f64::INFINITY, config);
    report.violations = margins.iter().filter(|m| m.violated).count();
    report.worst_margin = margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min);
    report.pass = report.violations == 0 && chain_violations == 0;
    report.energies = margins;
    Ok(report)
}
