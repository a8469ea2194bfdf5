//! Kernel estimator against exact identities and the lattice reference.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use num_complex::Complex64;
use wiener_bounds::inequalities::{self, McParams};
use wiener_bounds::kernel::{self, FkConfig};
use wiener_bounds::oracle::{self, LatticeSpec};
use wiener_bounds::paths::{self, PathGrid};
use wiener_bounds::potentials::{BFieldProfile, CovarianceSpec, FieldRealization, ScalarSpec, VectorSpec};
use wiener_bounds::stats::mean_se;

fn cfg(dim: usize, n_steps: usize, n_paths: usize, seed: u64) -> FkConfig {
    FkConfig::new(1.0, 1.0, dim, n_steps, n_paths, seed).unwrap()
}

#[test]
fn hermitian_symmetry() {
    let v = ScalarSpec::Harmonic { omega: 0.7 };
    let a = VectorSpec::Landau(BFieldProfile::Sinusoidal { b0: 0.5, b1: 0.8, kappa: 1.3 });
    let (q, qp) = ([0.6, -0.2], [-0.1, 0.4]);
    let fwd = kernel::estimate_kernel(&cfg(2, 128, 40_000, 1), &v, &a, &q, &qp).unwrap();
    let back = kernel::estimate_kernel(&cfg(2, 128, 40_000, 2), &v, &a, &qp, &q).unwrap();
    let diff = (fwd.value - back.value.conj()).norm();
    let combined = (fwd.std_error.powi(2) + back.std_error.powi(2)).sqrt();
    assert!(diff < 3.0 * combined, "diff {diff:.3e}, combined se {combined:.3e}");
    assert!(fwd.value.im.abs() > 3.0 * fwd.std_error, "case should carry a visible phase");
}

#[test]
fn pure_gauge_multiplies_by_endpoint_phase() {
    let c = 0.35;
    let v = ScalarSpec::FiniteWell { depth: 1.0, width: 1.0 };
    let base = VectorSpec::Landau(BFieldProfile::Constant(1.0));
    let gauged = VectorSpec::Sum(vec![base.clone(), VectorSpec::QuadraticGauge { coeff: c }]);
    let (q, qp) = ([0.9, 0.1], [-0.4, 0.3]);
    let f = cfg(2, 64, 20_000, 3);
    let k0 = kernel::estimate_kernel(&f, &v, &base, &q, &qp).unwrap();
    let k1 = kernel::estimate_kernel(&f, &v, &gauged, &q, &qp).unwrap();
    let chi = |x: &[f64]| c * x[0] * x[0];
    let expected = k0.value * Complex64::from_polar(1.0, chi(&q) - chi(&qp));
    assert!((k1.value - expected).norm() < 1e-12 * k0.value.norm());

    // same statement on the lattice
    let spec = LatticeSpec::new(2, 24, 8.0).unwrap();
    let (i, j) = (spec.site_at(&[1.0, 0.0]).unwrap(), spec.site_at(&[-1.0, 0.5]).unwrap());
    let o0 = oracle::build_lattice_hamiltonian(&spec, &v, &base, 1.0).unwrap().decompose().unwrap().kernel(1.0, i, j);
    let o1 = oracle::build_lattice_hamiltonian(&spec, &v, &gauged, 1.0).unwrap().decompose().unwrap().kernel(1.0, i, j);
    let (xi, xj) = (spec.position(i), spec.position(j));
    let expected = o0 * Complex64::from_polar(1.0, chi(&xi) - chi(&xj));
    assert!((o1 - expected).norm() < 1e-10 * o0.norm());
}

#[test]
fn reversed_field_has_same_modulus() {
    let b = BFieldProfile::Sinusoidal { b0: 1.0, b1: 0.5, kappa: 1.0 };
    let a = VectorSpec::Landau(b.clone());
    let na = VectorSpec::Landau(b.negated());
    let f = cfg(2, 128, 20_000, 4);
    let (q, qp) = ([0.5, 0.5], [0.0, -0.25]);
    let k = kernel::estimate_kernel(&f, &ScalarSpec::Zero, &a, &q, &qp).unwrap();
    let nk = kernel::estimate_kernel(&f, &ScalarSpec::Zero, &na, &q, &qp).unwrap();
    assert!((k.value.norm() - nk.value.norm()).abs() < 3.0 * k.std_error.hypot(nk.std_error));

    let mc = McParams { n_steps: 128, n_paths: 20_000, seed: 4 };
    let e = inequalities::effective_kernel_1d(|r| b.integral(r), 1.0, &q, &qp, &mc).unwrap();
    let ne = inequalities::effective_kernel_1d(|r| -b.integral(r), 1.0, &q, &qp, &mc).unwrap();
    assert!((e.value.norm() - ne.value.norm()).abs() < 3.0 * e.std_error.hypot(ne.std_error));
    assert!((e.value - ne.value.conj()).norm() < 1e-14);
}

#[test]
fn off_axis_constant_field_sits_below_anisotropic_bound() {
    // exact constant-field modulus is isotropic in |q - q'|
    let iso = |r2: f64| (4.0 * PI * 0.5f64.sinh()).recip() * (-r2 * 0.25 / 0.5f64.tanh()).exp();
    let f = cfg(2, 256, 50_000, 5);
    let (q, qp) = ([0.0, 1.0], [0.0, 0.0]);
    let k = kernel::estimate_kernel(&f, &ScalarSpec::Zero, &VectorSpec::Landau(BFieldProfile::Constant(1.0)), &q, &qp).unwrap();
    let exact = iso(1.0);
    assert!((k.value.norm() - exact).abs() < (3.0 * k.std_error).max(0.01 * exact));
    assert!(exact < kernel::landau_abs_kernel(1.0, &f, &q, &qp).unwrap());
}

fn lattice_value(dim: usize, n: usize, box_length: f64, v: &ScalarSpec, a: &VectorSpec, q: &[f64], qp: &[f64]) -> Complex64 {
    let spec = LatticeSpec::new(dim, n, box_length).unwrap();
    let op = oracle::build_lattice_hamiltonian(&spec, v, a, 1.0).unwrap();
    oracle::oracle_kernel(&op, 1.0, spec.site_at(q).unwrap(), spec.site_at(qp).unwrap()).unwrap()
}

#[test]
fn monte_carlo_matches_lattice_oracle() {
    let landau = VectorSpec::Landau(BFieldProfile::Constant(1.0));
    let one_d: [(&str, ScalarSpec); 3] = [
        ("free", ScalarSpec::Zero),
        ("harmonic", ScalarSpec::Harmonic { omega: 1.0 }),
        // edges at +-0.775 fall midway between sites; an edge on a site costs O(h)
        ("well", ScalarSpec::FiniteWell { depth: 2.0, width: 1.55 }),
    ];
    for (name, v) in &one_d {
        // q = 0.5 sits on a site of this grid
        let oracle_k = lattice_value(1, 399, 20.0, v, &VectorSpec::Zero, &[0.5], &[0.0]).re;
        let est = kernel::estimate_kernel(&cfg(1, 256, 40_000, 6), v, &VectorSpec::Zero, &[0.5], &[0.0]).unwrap();
        let tol = 3.0 * est.std_error + 0.01 * oracle_k;
        assert!((est.value.re - oracle_k).abs() < tol, "{name}: MC {} vs lattice {oracle_k}", est.value.re);
        assert!(oracle_k > 0.0);
    }
    for (name, v) in [("landau", ScalarSpec::Zero), ("landau+harmonic", ScalarSpec::Harmonic { omega: 1.0 })] {
        // dense complex spectra are slow, so two small grids plus the O(h^2) extrapolation
        let (h1, h2) = (6.0 / 24.0, 6.0 / 32.0);
        let k1 = lattice_value(2, 23, 6.0, &v, &landau, &[0.0, 0.0], &[0.0, 0.0]);
        let k2 = lattice_value(2, 31, 6.0, &v, &landau, &[0.0, 0.0], &[0.0, 0.0]);
        let oracle_k = k2 + (k2 - k1) * (h2 * h2 / (h1 * h1 - h2 * h2));
        let est = kernel::estimate_kernel(&cfg(2, 256, 40_000, 7), &v, &landau, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        let tol = 3.0 * est.std_error + 0.01 * oracle_k.norm();
        assert!((est.value - oracle_k).norm() < tol, "{name}: MC {} vs lattice {oracle_k}", est.value);
    }
}

#[test]
fn semigroup_by_quadrature() {
    // K_1(q, q') against sum_r dr K_{1/2}(q, r) K_{1/2}(r, q'), all by Monte Carlo
    let v = ScalarSpec::Harmonic { omega: 1.0 };
    let half = |seed: u64| FkConfig::new(0.5, 1.0, 1, 128, 4_000, seed).unwrap();
    let (q, qp) = (0.3, -0.4);
    let dr = 0.2;
    let mut sum = 0.0;
    let mut var = 0.0;
    for i in 0..=50u64 {
        let r = -5.0 + dr * i as f64;
        let left = kernel::estimate_kernel(&half(2 * i), &v, &VectorSpec::Zero, &[q], &[r]).unwrap();
        let right = kernel::estimate_kernel(&half(2 * i + 1), &v, &VectorSpec::Zero, &[r], &[qp]).unwrap();
        sum += dr * left.value.re * right.value.re;
        var += dr * dr * ((left.std_error * right.value.re).powi(2) + (right.std_error * left.value.re).powi(2));
    }
    let direct = kernel::estimate_kernel(&FkConfig::new(1.0, 1.0, 1, 256, 40_000, 999).unwrap(), &v, &VectorSpec::Zero, &[q], &[qp]).unwrap();
    let combined = (var + direct.std_error.powi(2)).sqrt();
    assert!((sum - direct.value.re).abs() < 3.0 * combined, "{sum} vs {}, se {combined}", direct.value.re);
}

#[test]
fn annealed_weight_matches_disorder_average() {
    let cov = CovarianceSpec::squared_exponential(0.5, 1.0).unwrap();
    let f = FkConfig::new(1.0, 1.0, 1, 32, 1, 0).unwrap();
    let grid = PathGrid::new(f.wiener_time(), f.n_steps, 1).unwrap();
    for idx in 0..3u64 {
        let path = paths::to_bridge(&paths::wiener_path(&grid, 17, idx), &[0.0], &[0.8]).unwrap();
        let weights: Vec<f64> = (0..10_000u64)
            .map(|r| {
                let field = FieldRealization::seeded(&cov, 1, 512, 1000 * idx + r).unwrap();
                (-kernel::scalar_action(&path, &ScalarSpec::GaussianField(field), &f).unwrap()).exp()
            })
            .collect();
        let (mean, se) = mean_se(&weights);
        let closed = kernel::annealed_weight(&path, &cov, &f).unwrap();
        assert!((mean - closed).abs() < 3.0 * se + 2e-3 * closed, "path {idx}: {mean} +- {se} vs {closed}");
    }
}

#[test]
fn hbar_enters_only_through_wiener_time() {
    let a = kernel::estimate_kernel(&FkConfig::new(1.0, 1.0, 1, 64, 100, 3).unwrap(), &ScalarSpec::Zero, &VectorSpec::Zero, &[0.2], &[0.0]).unwrap();
    let b = kernel::estimate_kernel(&FkConfig::new(4.0, 0.5, 1, 64, 100, 3).unwrap(), &ScalarSpec::Zero, &VectorSpec::Zero, &[0.2], &[0.0]).unwrap();
    assert_relative_eq!(a.value.re, b.value.re, max_relative = 1e-15);
}
