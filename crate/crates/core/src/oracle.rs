//! Dense lattice discretization of `H(a, v) = (P - a)^2 / 2 + v` on a
//! Dirichlet box, used as an independent reference for the path-integral
//! estimates and for eigenvalue counting.
//!
//! Hopping from site `y` to `x = y + h e_mu` carries the Peierls factor
//! `exp(i h a_mu(link midpoint) / hbar)`, so `H[x][y] = -t e^{+i theta}` and
//! `H[y][x] = -t e^{-i theta}` with `t = hbar^2 / (2 h^2)`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{check_dim, invalid, Error, Result};
use crate::potentials::{ScalarSpec, VectorSpec};

/// Default limit on the number of lattice sites.
pub const DEFAULT_SITE_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeSpec {
    pub dim: usize,
    pub points_per_side: usize,
    pub box_length: f64,
}

impl LatticeSpec {
    pub fn new(dim: usize, points_per_side: usize, box_length: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(invalid(format!("lattice dimension must be 1 or 2, got {dim}")));
        }
        if points_per_side == 0 {
            return Err(invalid("lattice needs at least one point per side"));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(invalid(format!("box length must be positive, got {box_length}")));
        }
        Ok(Self { dim, points_per_side, box_length })
    }

    /// `h = L / (n + 1)`; the Dirichlet walls sit one spacing outside the
    /// outermost sites.
    pub fn spacing(&self) -> f64 {
        self.box_length / (self.points_per_side + 1) as f64
    }

    pub fn n_sites(&self) -> usize {
        self.points_per_side.pow(self.dim as u32)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    /// Coordinate of index `i` along one axis; the box is `[-L/2, L/2]`.
    pub fn coordinate(&self, i: usize) -> f64 {
        let n = self.points_per_side as f64;
        (i as f64 - 0.5 * (n - 1.0)) * self.spacing()
    }

    /// Site index for per-axis indices, first axis slowest.
    pub fn site(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points_per_side + i)
    }

    pub fn site_axes(&self, mut site: usize) -> Vec<usize> {
        let n = self.points_per_side;
        let mut out = vec![0; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = site % n;
            site /= n;
        }
        out
    }

    pub fn position(&self, site: usize) -> Vec<f64> {
        self.site_axes(site).into_iter().map(|i| self.coordinate(i)).collect()
    }

    /// Site nearest to `x`; errors when `x` is more than `h/2` from every site.
    pub fn site_at(&self, x: &[f64]) -> Result<usize> {
        check_dim(self.dim, x.len())?;
        let h = self.spacing();
        let n = self.points_per_side as f64;
        let mut idx = Vec::with_capacity(self.dim);
        for &c in x {
            let f = c / h + 0.5 * (n - 1.0);
            let i = f.round();
            if i < 0.0 || i > n - 1.0 || (f - i).abs() > 0.5 + 1e-9 {
                return Err(invalid(format!("point {x:?} is outside the lattice")));
            }
            idx.push(i as usize);
        }
        Ok(self.site(&idx))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LatticeMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

#[derive(Clone, Debug)]
pub struct LatticeOperator {
    pub spec: LatticeSpec,
    pub hbar: f64,
    pub matrix: LatticeMatrix,
}

pub fn build_lattice_hamiltonian(spec: &LatticeSpec, v: &ScalarSpec, a: &VectorSpec, hbar: f64) -> Result<LatticeOperator> {
    build_lattice_hamiltonian_capped(spec, v, a, hbar, DEFAULT_SITE_CAP)
}

pub fn build_lattice_hamiltonian_capped(
    spec: &LatticeSpec,
    v: &ScalarSpec,
    a: &VectorSpec,
    hbar: f64,
    cap: usize,
) -> Result<LatticeOperator> {
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(invalid(format!("hbar must be positive, got {hbar}")));
    }
    let size = spec.n_sites();
    if size > cap {
        return Err(Error::TooLarge { size, cap });
    }
    a.validate(spec.dim)?;
    if let ScalarSpec::GaussianField(f) = v {
        check_dim(f.dim(), spec.dim)?;
    }
    let h = spec.spacing();
    let hop = hbar * hbar / (2.0 * h * h);
    let diag = spec.dim as f64 * hbar * hbar / (h * h);
    let n = spec.points_per_side;

    // (from, to, phase) for every nearest-neighbour link in +mu direction
    let mut links = Vec::new();
    let mut field = vec![0.0; spec.dim];
    for s in 0..size {
        let axes = spec.site_axes(s);
        for mu in 0..spec.dim {
            if axes[mu] + 1 == n {
                continue;
            }
            let mut up = axes.clone();
            up[mu] += 1;
            let phase = if a.is_zero() {
                0.0
            } else {
                let mut mid = spec.position(s);
                mid[mu] += 0.5 * h;
                field.iter_mut().for_each(|f| *f = 0.0);
                a.accumulate(&mid, &mut field);
                h * field[mu] / hbar
            };
            links.push((s, spec.site(&up), phase));
        }
    }

    let potential: Vec<f64> = (0..size).map(|s| diag + v.value(&spec.position(s))).collect();
    let matrix = if a.is_zero() {
        let mut m = DMatrix::<f64>::zeros(size, size);
        for (s, &p) in potential.iter().enumerate() {
            m[(s, s)] = p;
        }
        for &(from, to, _) in &links {
            m[(to, from)] = -hop;
            m[(from, to)] = -hop;
        }
        LatticeMatrix::Real(m)
    } else {
        let mut m = DMatrix::<Complex64>::zeros(size, size);
        for (s, &p) in potential.iter().enumerate() {
            m[(s, s)] = Complex64::new(p, 0.0);
        }
        for &(from, to, phase) in &links {
            let t = Complex64::from_polar(-hop, phase);
            m[(to, from)] = t;
            m[(from, to)] = t.conj();
        }
        LatticeMatrix::Complex(m)
    };
    Ok(LatticeOperator { spec: *spec, hbar, matrix })
}

/// Eigenpairs of a lattice operator; eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    vectors: LatticeMatrix,
    cell_volume: f64,
}

impl LatticeOperator {
    pub fn size(&self) -> usize {
        self.spec.n_sites()
    }

    pub fn is_real(&self) -> bool {
        matches!(self.matrix, LatticeMatrix::Real(_))
    }

    /// `max |H - H^*| / max |H|`.
    pub fn hermiticity_residual(&self) -> f64 {
        match &self.matrix {
            LatticeMatrix::Real(m) => (m - m.transpose()).amax() / m.amax().max(f64::MIN_POSITIVE),
            LatticeMatrix::Complex(m) => {
                let diff = m - m.adjoint();
                let num = diff.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let den = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
                num / den.max(f64::MIN_POSITIVE)
            }
        }
    }

    /// Sorted eigenvalues without eigenvectors.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = match &self.matrix {
            LatticeMatrix::Real(m) => m.symmetric_eigenvalues().iter().copied().collect(),
            LatticeMatrix::Complex(m) => m.symmetric_eigenvalues().iter().copied().collect(),
        };
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn decompose(&self) -> Result<Spectrum> {
        let fail = || Error::Decomposition(format!("no convergence for {} sites", self.size()));
        let max_iter = 1000 * self.size().max(1);
        let (values, vectors): (Vec<f64>, LatticeMatrix) = match &self.matrix {
            LatticeMatrix::Real(m) => {
                let e = SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iter).ok_or_else(fail)?;
                (e.eigenvalues.iter().copied().collect(), LatticeMatrix::Real(e.eigenvectors))
            }
            LatticeMatrix::Complex(m) => {
                let e = SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iter).ok_or_else(fail)?;
                (e.eigenvalues.iter().copied().collect(), LatticeMatrix::Complex(e.eigenvectors))
            }
        };
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let eigenvalues = order.iter().map(|&i| values[i]).collect();
        let vectors = match vectors {
            LatticeMatrix::Real(u) => LatticeMatrix::Real(u.select_columns(&order)),
            LatticeMatrix::Complex(u) => LatticeMatrix::Complex(u.select_columns(&order)),
        };
        Ok(Spectrum { eigenvalues, vectors, cell_volume: self.spec.spacing().powi(self.spec.dim as i32) })
    }
}

impl Spectrum {
    /// Continuum-normalized `[U e^{-beta Lambda} U^*]_{ij} / h^d`.
    pub fn kernel(&self, beta: f64, i: usize, j: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        match &self.vectors {
            LatticeMatrix::Real(u) => {
                for (n, &lam) in self.eigenvalues.iter().enumerate() {
                    acc += Complex64::new(u[(i, n)] * u[(j, n)] * (-beta * lam).exp(), 0.0);
                }
            }
            LatticeMatrix::Complex(u) => {
                for (n, &lam) in self.eigenvalues.iter().enumerate() {
                    acc += u[(i, n)] * u[(j, n)].conj() * (-beta * lam).exp();
                }
            }
        }
        acc / self.cell_volume
    }

    /// The full matrix `e^{-beta H}` (lattice normalization, no `h^d`).
    pub fn boltzmann_matrix(&self, beta: f64) -> DMatrix<Complex64> {
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| (-beta * l).exp()).collect();
        let u = match &self.vectors {
            LatticeMatrix::Real(u) => u.map(|x| Complex64::new(x, 0.0)),
            LatticeMatrix::Complex(u) => u.clone(),
        };
        let mut scaled = u.clone();
        for (n, w) in weights.iter().enumerate() {
            scaled.column_mut(n).scale_mut(*w);
        }
        scaled * u.adjoint()
    }
}

/// Kernel entry between sites `i` and `j`.
pub fn oracle_kernel(opr: &LatticeOperator, beta: f64, i: usize, j: usize) -> Result<Complex64> {
    if !(beta > 0.0) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    if i >= opr.size() || j >= opr.size() {
        return Err(invalid("site index out of range"));
    }
    Ok(opr.decompose()?.kernel(beta, i, j))
}

/// Number of eigenvalues `<= energy` in an ascending list.
pub fn count_states(sorted_eigenvalues: &[f64], energy: f64) -> usize {
    sorted_eigenvalues.partition_point(|&l| l <= energy)
}

/// Dirichlet eigenvalues of the clean 1-D lattice,
/// `(hbar^2 / h^2) (1 - cos(k pi / (n + 1)))`, `k = 1..n`.
pub fn free_dirichlet_eigenvalues(spec: &LatticeSpec, hbar: f64) -> Vec<f64> {
    let n = spec.points_per_side;
    let h = spec.spacing();
    let mut one_d: Vec<f64> = (1..=n)
        .map(|k| hbar * hbar / (h * h) * (1.0 - (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos()))
        .collect();
    if spec.dim == 2 {
        let mut sums = Vec::with_capacity(n * n);
        for &a in &one_d {
            for &b in &one_d {
                sums.push(a + b);
            }
        }
        one_d = sums;
    }
    one_d.sort_by(f64::total_cmp);
    one_d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::BFieldProfile;

    #[test]
    fn spec_geometry() {
        let s = LatticeSpec::new(1, 5, 6.0).unwrap();
        assert_eq!(s.spacing(), 1.0);
        assert_eq!(s.coordinate(2), 0.0);
        assert_eq!(s.coordinate(0), -2.0);
        assert_eq!(s.site_at(&[0.1]).unwrap(), 2);
        assert!(s.site_at(&[5.0]).is_err());
        let s2 = LatticeSpec::new(2, 3, 4.0).unwrap();
        assert_eq!(s2.n_sites(), 9);
        assert_eq!(s2.site_axes(5), vec![1, 2]);
        assert_eq!(s2.site(&[1, 2]), 5);
        assert_eq!(s2.position(4), vec![0.0, 0.0]);
        assert!(LatticeSpec::new(3, 3, 1.0).is_err());
        assert!(LatticeSpec::new(1, 0, 1.0).is_err());
        assert!(LatticeSpec::new(1, 3, 0.0).is_err());
    }

    #[test]
    fn free_stencil() {
        let s = LatticeSpec::new(1, 9, 1.0).unwrap();
        let h = s.spacing();
        let op = build_lattice_hamiltonian(&s, &ScalarSpec::Zero, &VectorSpec::Zero, 1.3).unwrap();
        let LatticeMatrix::Real(m) = &op.matrix else { panic!("expected real matrix") };
        assert!((m[(4, 4)] - 1.69 / (h * h)).abs() < 1e-12);
        assert!((m[(4, 5)] + 1.69 / (2.0 * h * h)).abs() < 1e-12);
        assert!((m[(4, 3)] + 1.69 / (2.0 * h * h)).abs() < 1e-12);
        assert_eq!(m[(4, 6)], 0.0);
    }

    #[test]
    fn size_cap() {
        let s = LatticeSpec::new(2, 70, 10.0).unwrap();
        match build_lattice_hamiltonian(&s, &ScalarSpec::Zero, &VectorSpec::Zero, 1.0) {
            Err(Error::TooLarge { size, cap }) => assert_eq!((size, cap), (4900, 4096)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn landau_operator_is_hermitian() {
        let s = LatticeSpec::new(2, 12, 6.0).unwrap();
        let a = VectorSpec::Landau(BFieldProfile::Constant(1.0));
        let op = build_lattice_hamiltonian(&s, &ScalarSpec::Zero, &a, 1.0).unwrap();
        assert!(!op.is_real());
        assert!(op.hermiticity_residual() < 1e-12);
        assert!(op.eigenvalues().iter().all(|l| l.is_finite()));
    }

    #[test]
    fn harmonic_ground_state() {
        let s = LatticeSpec::new(1, 201, 20.0).unwrap();
        let op = build_lattice_hamiltonian(&s, &ScalarSpec::Harmonic { omega: 1.0 }, &VectorSpec::Zero, 1.0).unwrap();
        let ev = op.eigenvalues();
        // O(h^2) lattice error with h ~ 0.1
        assert!((ev[0] - 0.5).abs() < 2e-3, "{}", ev[0]);
        assert!((ev[1] - 1.5).abs() < 5e-3, "{}", ev[1]);
    }

    #[test]
    fn free_kernel_on_large_box() {
        let s = LatticeSpec::new(1, 301, 30.0).unwrap();
        let op = build_lattice_hamiltonian(&s, &ScalarSpec::Zero, &VectorSpec::Zero, 1.0).unwrap();
        let c = s.site_at(&[0.0]).unwrap();
        let k = oracle_kernel(&op, 1.0, c, c).unwrap();
        let target = (2.0 * std::f64::consts::PI).powf(-0.5);
        assert!(((k.re - target) / target).abs() < 0.01, "{k}");
        assert_eq!(k.im, 0.0);
    }

    #[test]
    fn semigroup_is_exact() {
        let s = LatticeSpec::new(2, 6, 4.0).unwrap();
        let a = VectorSpec::Landau(BFieldProfile::Sinusoidal { b0: 1.0, b1: 0.3, kappa: 1.0 });
        let op = build_lattice_hamiltonian(&s, &ScalarSpec::Harmonic { omega: 0.7 }, &a, 1.0).unwrap();
        let spec = op.decompose().unwrap();
        let lhs = spec.boltzmann_matrix(0.4) * spec.boltzmann_matrix(0.6);
        let rhs = spec.boltzmann_matrix(1.0);
        let err = (lhs - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = rhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err / scale < 1e-10, "{err}");
    }

    #[test]
    fn counting_examples() {
        let s = LatticeSpec::new(1, 40, 10.0).unwrap();
        let op = build_lattice_hamiltonian(&s, &ScalarSpec::Zero, &VectorSpec::Zero, 1.0).unwrap();
        let ev = op.eigenvalues();
        assert_eq!(count_states(&ev, ev[0] - 1.0), 0);
        assert_eq!(count_states(&ev, ev[39] + 1.0), 40);
        assert_eq!(count_states(&ev, ev[10]), 11);
        let exact = free_dirichlet_eigenvalues(&s, 1.0);
        for e in [0.1, 0.5, 2.0, 7.5, 20.0] {
            assert_eq!(count_states(&ev, e), count_states(&exact, e), "E = {e}");
        }
        for (a, b) in ev.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-10 * b.max(1.0));
        }
    }

    #[test]
    fn pure_gauge_oracle_picks_up_phase() {
        // theta on link j -> j+1 is c (x_{j+1}^2 - x_j^2) exactly
        let s = LatticeSpec::new(1, 81, 16.0).unwrap();
        let c = 0.35;
        let plain = build_lattice_hamiltonian(&s, &ScalarSpec::Harmonic { omega: 1.0 }, &VectorSpec::Zero, 1.0).unwrap();
        let gauged = build_lattice_hamiltonian(&s, &ScalarSpec::Harmonic { omega: 1.0 }, &VectorSpec::QuadraticGauge { coeff: c }, 1.0).unwrap();
        let (sp, sg) = (plain.decompose().unwrap(), gauged.decompose().unwrap());
        let (i, j) = (s.site_at(&[1.0]).unwrap(), s.site_at(&[-0.4]).unwrap());
        let (xi, xj) = (s.coordinate(i), s.coordinate(j));
        let expect = sp.kernel(1.0, i, j) * Complex64::from_polar(1.0, c * (xi * xi - xj * xj));
        let got = sg.kernel(1.0, i, j);
        assert!((got - expect).norm() < 1e-10, "{got} vs {expect}");
    }
}
