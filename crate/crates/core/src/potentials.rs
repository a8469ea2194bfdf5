//! Scalar potentials, planar magnetic-field profiles with their Landau-type
//! vector potentials, and stationary Gaussian random fields.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_dim, invalid, Error, Result};
use crate::rng::{self, Domain};

/// Default number of Fourier modes in a synthesized random field.
pub const DEFAULT_MODES: usize = 1 << 10;

/// Piecewise-linear table, clamped to the boundary values outside its range.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Table {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("table needs at least one point"));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(invalid("table values must be finite"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(invalid("table abscissae must be distinct"));
        }
        let (xs, ys) = points.into_iter().unzip();
        Ok(Self { xs, ys })
    }

    /// Reads two numeric columns `x,y`. A non-numeric first row is taken
    /// as a header.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path.as_ref())?;
        let mut points = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let parsed = (rec.get(0).map(str::parse::<f64>), rec.get(1).map(str::parse::<f64>));
            match parsed {
                (Some(Ok(x)), Some(Ok(y))) => points.push((x, y)),
                _ if i == 0 => continue,
                _ => {
                    return Err(invalid(format!(
                        "{}: row {} is not two numbers",
                        path.as_ref().display(),
                        i + 1
                    )))
                }
            }
        }
        Self::new(points)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let f = (x - x0) / (x1 - x0);
        self.ys[i] + f * (self.ys[i + 1] - self.ys[i])
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    fn range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScalarSpec {
    Zero,
    Constant(f64),
    /// `omega^2 |x|^2 / 2`.
    Harmonic { omega: f64 },
    /// `g |x|^4`.
    Quartic { g: f64 },
    /// `-depth` inside the ball `|x| < width / 2`, zero outside.
    FiniteWell { depth: f64, width: f64 },
    /// Table in the first coordinate.
    Tabulated(Table),
    GaussianField(FieldRealization),
}

impl ScalarSpec {
    /// Potential energy at `x`, with no dimension check beyond what the
    /// field realization needs.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ScalarSpec::Zero => 0.0,
            ScalarSpec::Constant(c) => *c,
            ScalarSpec::Harmonic { omega } => 0.5 * omega * omega * norm_sqr(x),
            ScalarSpec::Quartic { g } => {
                let r2 = norm_sqr(x);
                g * r2 * r2
            }
            ScalarSpec::FiniteWell { depth, width } => {
                if norm_sqr(x).sqrt() < 0.5 * width {
                    -depth
                } else {
                    0.0
                }
            }
            ScalarSpec::Tabulated(t) => t.eval(x[0]),
            ScalarSpec::GaussianField(f) => f.eval(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarSpec::Zero) || matches!(self, ScalarSpec::Constant(c) if *c == 0.0)
    }
}

/// `v(x)` with the dimension of `x` checked against a field realization.
pub fn eval_scalar(spec: &ScalarSpec, x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    if let ScalarSpec::GaussianField(f) = spec {
        check_dim(f.dim, x.len())?;
    }
    Ok(spec.value(x))
}

fn norm_sqr(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Perpendicular field `b(q_1)` of a planar problem.
#[derive(Clone, Debug, PartialEq)]
pub enum BFieldProfile {
    Constant(f64),
    /// `b0 + b1 sin(kappa r)`.
    Sinusoidal { b0: f64, b1: f64, kappa: f64 },
    Tabulated(TabulatedField),
}

/// Tabulated field and its running integral from 0, precomputed by the
/// cumulative trapezoid rule.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedField {
    field: Table,
    integral: Table,
    lo: f64,
    hi: f64,
}

/// Panels per unit length for the cumulative integral of a tabulated field.
const PANELS_PER_UNIT: f64 = 2000.0;

impl TabulatedField {
    pub fn new(field: Table) -> Self {
        let (x0, x1) = field.range();
        let lo = x0.min(0.0);
        let hi = x1.max(0.0);
        let mut pts = vec![(0.0, 0.0)];
        for dir in [1.0f64, -1.0] {
            let extent = if dir > 0.0 { hi } else { -lo };
            if extent <= 0.0 {
                continue;
            }
            let panels = ((extent * PANELS_PER_UNIT).ceil() as usize).max(1);
            let h = extent / panels as f64;
            let mut acc = 0.0;
            let mut prev = field.eval(0.0);
            for i in 1..=panels {
                let r = dir * i as f64 * h;
                let cur = field.eval(r);
                acc += dir * 0.5 * h * (prev + cur);
                prev = cur;
                pts.push((r, acc));
            }
        }
        let integral = Table::new(pts).expect("cumulative grid is strictly increasing");
        Self { field, integral, lo, hi }
    }

    fn integral(&self, r: f64) -> f64 {
        // Outside the integrated range the field is the clamped boundary value.
        if r > self.hi {
            self.integral.eval(self.hi) + (r - self.hi) * self.field.eval(self.hi)
        } else if r < self.lo {
            self.integral.eval(self.lo) - (self.lo - r) * self.field.eval(self.lo)
        } else {
            self.integral.eval(r)
        }
    }
}

impl BFieldProfile {
    pub fn tabulated(table: Table) -> Self {
        BFieldProfile::Tabulated(TabulatedField::new(table))
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            BFieldProfile::Constant(b0) => *b0,
            BFieldProfile::Sinusoidal { b0, b1, kappa } => b0 + b1 * (kappa * r).sin(),
            BFieldProfile::Tabulated(t) => t.field.eval(r),
        }
    }

    /// `int_0^r b`.
    pub fn integral(&self, r: f64) -> f64 {
        match self {
            BFieldProfile::Constant(b0) => b0 * r,
            BFieldProfile::Sinusoidal { b0, b1, kappa } => {
                if *kappa == 0.0 {
                    b0 * r
                } else {
                    b0 * r + b1 * (1.0 - (kappa * r).cos()) / kappa
                }
            }
            BFieldProfile::Tabulated(t) => t.integral(r),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            BFieldProfile::Constant(b0) => *b0 == 0.0,
            BFieldProfile::Sinusoidal { b0, b1, kappa } => *b0 == 0.0 && (*b1 == 0.0 || *kappa == 0.0),
            BFieldProfile::Tabulated(t) => t.field.ys.iter().all(|&y| y == 0.0),
        }
    }

    /// Global sign flip `b -> -b`.
    pub fn negated(&self) -> Self {
        match self {
            BFieldProfile::Constant(b0) => BFieldProfile::Constant(-b0),
            BFieldProfile::Sinusoidal { b0, b1, kappa } => BFieldProfile::Sinusoidal { b0: -b0, b1: -b1, kappa: *kappa },
            BFieldProfile::Tabulated(t) => BFieldProfile::tabulated(Table {
                xs: t.field.xs.clone(),
                ys: t.field.ys.iter().map(|y| -y).collect(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VectorSpec {
    Zero,
    /// Planar gauge `(0, int_0^{q_1} b)`; two dimensions only.
    Landau(BFieldProfile),
    /// Constant vector, the gradient of `c . x`.
    Constant(Vec<f64>),
    /// Pure gauge `grad(coeff * x_1^2)`.
    QuadraticGauge { coeff: f64 },
    Sum(Vec<VectorSpec>),
}

impl VectorSpec {
    pub fn is_zero(&self) -> bool {
        match self {
            VectorSpec::Zero => true,
            VectorSpec::Landau(b) => b.is_identically_zero(),
            VectorSpec::Constant(c) => c.iter().all(|&v| v == 0.0),
            VectorSpec::QuadraticGauge { coeff } => *coeff == 0.0,
            VectorSpec::Sum(parts) => parts.iter().all(VectorSpec::is_zero),
        }
    }

    /// Checks that the spec can be evaluated in `dim` dimensions.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            VectorSpec::Landau(_) if dim != 2 => Err(invalid("Landau vector potential requires dim = 2")),
            VectorSpec::Constant(c) => check_dim(dim, c.len()),
            VectorSpec::Sum(parts) => parts.iter().try_for_each(|p| p.validate(dim)),
            _ => Ok(()),
        }
    }

    /// Adds `a(x)` into `out`. Assumes [`VectorSpec::validate`] passed.
    pub fn accumulate(&self, x: &[f64], out: &mut [f64]) {
        match self {
            VectorSpec::Zero => {}
            VectorSpec::Landau(b) => out[1] += b.integral(x[0]),
            VectorSpec::Constant(c) => out.iter_mut().zip(c).for_each(|(o, c)| *o += c),
            VectorSpec::QuadraticGauge { coeff } => out[0] += 2.0 * coeff * x[0],
            VectorSpec::Sum(parts) => parts.iter().for_each(|p| p.accumulate(x, out)),
        }
    }

    /// Gauge function `chi` with `a = grad chi`, when the spec is a pure gauge.
    pub fn gauge_function(&self, x: &[f64]) -> Option<f64> {
        match self {
            VectorSpec::Zero => Some(0.0),
            VectorSpec::Landau(b) if b.is_identically_zero() => Some(0.0),
            VectorSpec::Landau(_) => None,
            VectorSpec::Constant(c) => Some(c.iter().zip(x).map(|(c, x)| c * x).sum()),
            VectorSpec::QuadraticGauge { coeff } => Some(coeff * x[0] * x[0]),
            VectorSpec::Sum(parts) => parts.iter().map(|p| p.gauge_function(x)).sum(),
        }
    }
}

pub fn eval_vector(spec: &VectorSpec, x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    spec.validate(x.len())?;
    let mut out = vec![0.0; x.len()];
    spec.accumulate(x, &mut out);
    Ok(out)
}

/// Landau-type vector potential generating the profile `b`.
pub fn landau_vector_from_b(profile: &BFieldProfile) -> VectorSpec {
    if profile.is_identically_zero() {
        VectorSpec::Zero
    } else {
        VectorSpec::Landau(profile.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CovarianceSpec {
    /// `sigma2 exp(-|r|^2 / (2 ell^2))`.
    SquaredExponential { sigma2: f64, ell: f64 },
    /// One-dimensional field with a tabulated spectral density on `k >= 0`.
    /// Sampling from the table is approximate.
    TabulatedSpectral { sigma2: f64, spectrum: Table },
}

impl CovarianceSpec {
    pub fn squared_exponential(sigma2: f64, ell: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(invalid(format!("single-site variance must be in (0, inf), got {sigma2}")));
        }
        if !(ell.is_finite() && ell > 0.0) {
            return Err(invalid(format!("correlation length must be positive, got {ell}")));
        }
        Ok(CovarianceSpec::SquaredExponential { sigma2, ell })
    }

    pub fn tabulated_spectral(sigma2: f64, spectrum: Table) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(invalid(format!("single-site variance must be in (0, inf), got {sigma2}")));
        }
        if spectrum.xs[0] < 0.0 || spectrum.ys.iter().any(|&y| y < 0.0) {
            return Err(invalid("spectral table needs k >= 0 and non-negative density"));
        }
        if spectrum.xs.len() < 2 || spectrum.ys.iter().all(|&y| y == 0.0) {
            return Err(invalid("spectral table has no mass"));
        }
        Ok(CovarianceSpec::TabulatedSpectral { sigma2, spectrum })
    }

    /// `C(0)`.
    pub fn variance(&self) -> f64 {
        match self {
            CovarianceSpec::SquaredExponential { sigma2, .. } | CovarianceSpec::TabulatedSpectral { sigma2, .. } => *sigma2,
        }
    }

    /// `C(r)` at lag `r`.
    pub fn eval(&self, r: &[f64]) -> f64 {
        match self {
            CovarianceSpec::SquaredExponential { sigma2, ell } => sigma2 * (-norm_sqr(r) / (2.0 * ell * ell)).exp(),
            CovarianceSpec::TabulatedSpectral { sigma2, spectrum } => {
                // trapezoid over a refinement of each linear segment
                let lag = r[0];
                let (mut num, mut den) = (0.0, 0.0);
                for w in 0..spectrum.xs.len() - 1 {
                    let (k0, k1) = (spectrum.xs[w], spectrum.xs[w + 1]);
                    let sub = 64;
                    let h = (k1 - k0) / sub as f64;
                    for i in 0..=sub {
                        let k = k0 + i as f64 * h;
                        let wt = if i == 0 || i == sub { 0.5 * h } else { h };
                        let s = spectrum.eval(k);
                        num += wt * s * (k * lag).cos();
                        den += wt * s;
                    }
                }
                sigma2 * num / den
            }
        }
    }

    fn sample_frequency<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R, out: &mut [f64]) -> Result<()> {
        match self {
            CovarianceSpec::SquaredExponential { ell, .. } => {
                let normal = Normal::new(0.0, 1.0 / ell).map_err(|e| invalid(e.to_string()))?;
                out.iter_mut().for_each(|k| *k = normal.sample(rng));
                Ok(())
            }
            CovarianceSpec::TabulatedSpectral { spectrum, .. } => {
                if dim != 1 {
                    return Err(Error::Unsupported("tabulated spectral covariance is one-dimensional".into()));
                }
                let k = sample_piecewise_linear(spectrum, rng.random::<f64>());
                out[0] = if rng.random::<bool>() { k } else { -k };
                Ok(())
            }
        }
    }
}

// Inverse CDF of the normalized piecewise-linear density in `table`.
fn sample_piecewise_linear(table: &Table, u: f64) -> f64 {
    let masses: Vec<f64> = table
        .xs
        .windows(2)
        .zip(table.ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .collect();
    let total: f64 = masses.iter().sum();
    let mut target = u * total;
    for (i, &m) in masses.iter().enumerate() {
        if target <= m || i == masses.len() - 1 {
            let (x0, x1) = (table.xs[i], table.xs[i + 1]);
            let (f0, f1) = (table.ys[i], table.ys[i + 1]);
            let dx = x1 - x0;
            target = target.min(m);
            let slope = (f1 - f0) / dx;
            // f0 s + slope s^2 / 2 = target
            let s = if slope.abs() < 1e-14 * (f0.abs() + f1.abs()) {
                if f0 > 0.0 { target / f0 } else { 0.0 }
            } else {
                let disc = (f0 * f0 + 2.0 * slope * target).max(0.0);
                (disc.sqrt() - f0) / slope
            };
            return x0 + s.clamp(0.0, dx);
        }
        target -= m;
    }
    table.xs[table.xs.len() - 1]
}

/// Random-Fourier-feature realization
/// `v(x) = sigma sqrt(2/M) sum_m cos(k_m . x + phi_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldRealization {
    dim: usize,
    amplitude: f64,
    frequencies: Vec<f64>,
    phases: Vec<f64>,
}

impl FieldRealization {
    pub fn modes(&self) -> usize {
        self.phases.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for (k, phi) in self.frequencies.chunks_exact(d).zip(&self.phases) {
            let dot: f64 = k.iter().zip(x).map(|(k, x)| k * x).sum();
            acc += (dot + phi).cos();
        }
        self.amplitude * acc
    }

    /// Realization drawn from the field stream of `seed`.
    pub fn seeded(cov: &CovarianceSpec, dim: usize, modes: usize, seed: u64) -> Result<Self> {
        sample_gaussian_field(cov, dim, modes, &mut rng::stream(seed, Domain::Field, 0))
    }
}

pub fn sample_gaussian_field<R: Rng + ?Sized>(
    cov: &CovarianceSpec,
    dim: usize,
    modes: usize,
    rng: &mut R,
) -> Result<FieldRealization> {
    if modes == 0 {
        return Err(invalid("field needs at least one mode"));
    }
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    let mut frequencies = vec![0.0; modes * dim];
    let mut phases = vec![0.0; modes];
    for (k, phi) in frequencies.chunks_exact_mut(dim).zip(phases.iter_mut()) {
        cov.sample_frequency(dim, rng, k)?;
        *phi = 2.0 * PI * rng.random::<f64>();
    }
    let amplitude = (cov.variance() * 2.0 / modes as f64).sqrt();
    Ok(FieldRealization { dim, amplitude, frequencies, phases })
}

/// `E exp(-beta v)` for a centered Gaussian of variance `c0`.
pub fn gaussian_laplace_moment(c0: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    if !(c0 >= 0.0) {
        return Err(invalid(format!("variance must be non-negative, got {c0}")));
    }
    Ok((0.5 * beta * beta * c0).exp())
}

/// `L_beta` of the stationary Gaussian model with covariance `cov`.
pub fn laplace_moment_lbeta(cov: &CovarianceSpec, beta: f64) -> Result<f64> {
    gaussian_laplace_moment(cov.variance(), beta)
}
