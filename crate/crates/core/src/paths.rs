//! Discretized Wiener paths and Brownian bridges.
//!
//! A Wiener path starts at the origin and has independent Gaussian
//! increments of variance `step` per component. Bridges are obtained from
//! Wiener paths by the affine map
//!
//! ```text
//! bridge(t) = w(t) + start - (t/T) (w(T) + start - end)
//! ```
//!
//! so one sample of `w` serves both Wiener-measure and bridge-measure
//! averages.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, invalid, Result};
use crate::rng::{self, Domain};
use crate::stats::pairwise_sum;

/// Uniform time grid `t_k = k * total_time / n_steps` in `dim` dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathGrid {
    total_time: f64,
    n_steps: usize,
    dim: usize,
}

impl PathGrid {
    pub fn new(total_time: f64, n_steps: usize, dim: usize) -> Result<Self> {
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(invalid(format!("total time must be positive, got {total_time}")));
        }
        if n_steps == 0 {
            return Err(invalid("grid needs at least one step"));
        }
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        Ok(Self { total_time, n_steps, dim })
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.total_time / self.n_steps as f64
    }

    /// Node time `t_k`; the last node is `total_time` exactly.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.total_time
        } else {
            k as f64 * self.step()
        }
    }

    /// Fraction `t_k / T`, computed as `k / n` to avoid rounding in `T`.
    pub fn fraction(&self, k: usize) -> f64 {
        k as f64 / self.n_steps as f64
    }

    /// Index of the node at time `t`.
    pub fn node_index(&self, t: f64) -> Result<usize> {
        let x = t / self.step();
        let k = x.round();
        if k < 0.0 || k > self.n_steps as f64 || (x - k).abs() > 1e-9 * self.n_steps.max(1) as f64 {
            return Err(invalid(format!("probe time {t} is not a grid node")));
        }
        Ok(k as usize)
    }
}

/// Anything that stores `n_nodes * dim` node coordinates on a grid.
pub trait SampledPath {
    fn grid(&self) -> &PathGrid;
    fn nodes(&self) -> &[f64];

    fn node(&self, k: usize) -> &[f64] {
        let d = self.grid().dim();
        &self.nodes()[k * d..(k + 1) * d]
    }

    /// Target mean of component `j` at node `k`.
    fn target_mean(&self, j: usize, k: usize) -> f64;

    /// Target covariance of one component between nodes `k` and `l`.
    fn target_cov(&self, k: usize, l: usize) -> f64;
}

#[derive(Clone, Debug, PartialEq)]
pub struct WienerPath {
    grid: PathGrid,
    nodes: Vec<f64>,
}

impl WienerPath {
    /// Builds a path from explicit node data; node 0 must be the origin.
    pub fn from_nodes(grid: PathGrid, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() != grid.n_nodes() * grid.dim() {
            return Err(invalid("node buffer does not match grid"));
        }
        if nodes[..grid.dim()].iter().any(|&x| x != 0.0) {
            return Err(invalid("Wiener path must start at the origin"));
        }
        Ok(Self { grid, nodes })
    }

    pub fn endpoint(&self) -> &[f64] {
        self.node(self.grid.n_steps())
    }
}

impl SampledPath for WienerPath {
    fn grid(&self) -> &PathGrid {
        &self.grid
    }

    fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn target_mean(&self, _j: usize, _k: usize) -> f64 {
        0.0
    }

    fn target_cov(&self, k: usize, l: usize) -> f64 {
        self.grid.time(k.min(l))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BridgePath {
    grid: PathGrid,
    start: Vec<f64>,
    end: Vec<f64>,
    nodes: Vec<f64>,
}

impl BridgePath {
    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn end(&self) -> &[f64] {
        &self.end
    }

    /// Component `j` of every node, in time order.
    pub fn component(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        let d = self.grid.dim();
        self.nodes.iter().skip(j).step_by(d).copied()
    }
}

impl SampledPath for BridgePath {
    fn grid(&self) -> &PathGrid {
        &self.grid
    }

    fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn target_mean(&self, j: usize, k: usize) -> f64 {
        let f = self.grid.fraction(k);
        self.start[j] - f * (self.start[j] - self.end[j])
    }

    fn target_cov(&self, k: usize, l: usize) -> f64 {
        let t = self.grid.time(k);
        let s = self.grid.time(l);
        t.min(s) - t * s / self.grid.total_time()
    }
}

/// Draws one Wiener path from `rng`.
pub fn sample_wiener<R: Rng + ?Sized>(grid: &PathGrid, rng: &mut R) -> WienerPath {
    let d = grid.dim();
    let sd = grid.step().sqrt();
    let mut nodes = vec![0.0; grid.n_nodes() * d];
    for k in 1..grid.n_nodes() {
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            nodes[k * d + j] = nodes[(k - 1) * d + j] + sd * z;
        }
    }
    WienerPath { grid: *grid, nodes }
}

/// Wiener path number `index` of the family seeded by `seed`.
pub fn wiener_path(grid: &PathGrid, seed: u64, index: u64) -> WienerPath {
    sample_wiener(grid, &mut rng::stream(seed, Domain::Paths, index))
}

/// Applies the bridge map; the first and last nodes are set to `start` and
/// `end` exactly.
pub fn to_bridge(w: &WienerPath, start: &[f64], end: &[f64]) -> Result<BridgePath> {
    let grid = w.grid;
    let d = grid.dim();
    check_dim(d, start.len())?;
    check_dim(d, end.len())?;
    let n = grid.n_steps();
    let wt = w.endpoint();
    let shift: Vec<f64> = (0..d).map(|j| wt[j] + start[j] - end[j]).collect();
    let mut nodes = vec![0.0; grid.n_nodes() * d];
    for k in 0..=n {
        let f = grid.fraction(k);
        for j in 0..d {
            nodes[k * d + j] = w.nodes[k * d + j] + start[j] - f * shift[j];
        }
    }
    nodes[..d].copy_from_slice(start);
    nodes[n * d..].copy_from_slice(end);
    Ok(BridgePath { grid, start: start.to_vec(), end: end.to_vec(), nodes })
}

/// `count` Wiener paths with indices `0..count`, generated in parallel and
/// returned in index order.
pub fn sample_wiener_batch(grid: &PathGrid, seed: u64, count: usize) -> Vec<WienerPath> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| wiener_path(grid, seed, i))
        .collect()
}

/// `count` bridges from `start` to `end`, built from the Wiener paths of
/// [`sample_wiener_batch`].
pub fn sample_bridge_batch(
    grid: &PathGrid,
    seed: u64,
    count: usize,
    start: &[f64],
    end: &[f64],
) -> Result<Vec<BridgePath>> {
    check_dim(grid.dim(), start.len())?;
    check_dim(grid.dim(), end.len())?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| to_bridge(&wiener_path(grid, seed, i), start, end))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanProbe {
    pub component: usize,
    pub t: f64,
    pub empirical: f64,
    pub target: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovProbe {
    pub components: (usize, usize),
    pub t: f64,
    pub s: f64,
    pub empirical: f64,
    pub target: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub sample_count: usize,
    pub means: Vec<MeanProbe>,
    pub covariances: Vec<CovProbe>,
}

impl MomentReport {
    pub fn z_scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.means.iter().map(|p| p.z).chain(self.covariances.iter().map(|p| p.z))
    }

    /// Fraction of probes with `|z| < limit`.
    pub fn fraction_within(&self, limit: f64) -> f64 {
        let (mut ok, mut total) = (0usize, 0usize);
        for z in self.z_scores() {
            total += 1;
            if z.abs() < limit {
                ok += 1;
            }
        }
        ok as f64 / total.max(1) as f64
    }
}

// Zero standard error happens at pinned bridge endpoints; report z = 0 when
// the empirical value hits the target and infinity otherwise.
fn z_score(empirical: f64, target: f64, se: f64) -> f64 {
    let diff = empirical - target;
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 * (1.0 + target.abs()) {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Empirical means of every component at every probe time and covariances
/// for every probe pair `t <= s` and component pair `j <= k`, with targets
/// from the path type and z-scores.
pub fn moment_report<P: SampledPath>(paths: &[P], probe_times: &[f64]) -> Result<MomentReport> {
    let n = paths.len();
    if n < 2 {
        return Err(invalid("moment report needs at least two paths"));
    }
    let grid = *paths[0].grid();
    if paths.iter().any(|p| *p.grid() != grid) {
        return Err(invalid("paths were sampled on different grids"));
    }
    let d = grid.dim();
    let ks: Vec<usize> = probe_times.iter().map(|&t| grid.node_index(t)).collect::<Result<_>>()?;
    let reference = &paths[0];

    let column = |k: usize, j: usize| -> Vec<f64> { paths.iter().map(|p| p.node(k)[j]).collect() };
    let mean_of = |xs: &[f64]| pairwise_sum(xs) / n as f64;

    let mut means = Vec::new();
    for &k in &ks {
        for j in 0..d {
            let xs = column(k, j);
            let (m, se) = crate::stats::mean_se(&xs);
            let target = reference.target_mean(j, k);
            means.push(MeanProbe { component: j, t: grid.time(k), empirical: m, target, std_error: se, z: z_score(m, target, se) });
        }
    }

    let mut covariances = Vec::new();
    for (a, &k) in ks.iter().enumerate() {
        for &l in &ks[a..] {
            for j in 0..d {
                for i in j..d {
                    let xs = column(k, j);
                    let ys = column(l, i);
                    let (mx, my) = (mean_of(&xs), mean_of(&ys));
                    let prods: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).collect();
                    let (mp, se) = crate::stats::mean_se(&prods);
                    let cov = mp * n as f64 / (n - 1) as f64;
                    let target = if i == j { reference.target_cov(k, l) } else { 0.0 };
                    covariances.push(CovProbe {
                        components: (j, i),
                        t: grid.time(k),
                        s: grid.time(l),
                        empirical: cov,
                        target,
                        std_error: se,
                        z: z_score(cov, target, se),
                    });
                }
            }
        }
    }
    Ok(MomentReport { sample_count: n, means, covariances })
}

/// Sample correlation between the Wiener endpoint `w_j(T)` and the bridge
/// coordinate `bridge_j(t)`, per component `j` and probe time. Reported as 0
/// where the bridge coordinate is pinned (zero variance).
pub fn endpoint_correlations(
    paths: &[WienerPath],
    start: &[f64],
    end: &[f64],
    probe_times: &[f64],
) -> Result<Vec<(usize, f64, f64)>> {
    if paths.len() < 2 {
        return Err(invalid("correlation needs at least two paths"));
    }
    let grid = paths[0].grid;
    let ks: Vec<usize> = probe_times.iter().map(|&t| grid.node_index(t)).collect::<Result<_>>()?;
    let bridges: Vec<BridgePath> = paths.iter().map(|w| to_bridge(w, start, end)).collect::<Result<_>>()?;
    let n = paths.len() as f64;
    let mut out = Vec::new();
    for &k in &ks {
        for j in 0..grid.dim() {
            let xs: Vec<f64> = paths.iter().map(|w| w.endpoint()[j]).collect();
            let ys: Vec<f64> = bridges.iter().map(|b| b.node(k)[j]).collect();
            let mx = pairwise_sum(&xs) / n;
            let my = pairwise_sum(&ys) / n;
            let sxy: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).collect();
            let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
            let syy: Vec<f64> = ys.iter().map(|y| (y - my) * (y - my)).collect();
            let (cxy, cxx, cyy) = (pairwise_sum(&sxy), pairwise_sum(&sxx), pairwise_sum(&syy));
            let corr = if cxx > 0.0 && cyy > 0.0 { cxy / (cxx * cyy).sqrt() } else { 0.0 };
            out.push((j, grid.time(k), corr));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes() {
        let g = PathGrid::new(1.0, 4, 1).unwrap();
        let ts: Vec<f64> = (0..g.n_nodes()).map(|k| g.time(k)).collect();
        assert_eq!(ts, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = PathGrid::new(2.0, 1, 3).unwrap();
        assert_eq!(g.step(), 2.0);
        assert_eq!(g.dim(), 3);
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(PathGrid::new(0.0, 4, 1).is_err());
        assert!(PathGrid::new(-1.0, 4, 1).is_err());
        assert!(PathGrid::new(f64::NAN, 4, 1).is_err());
        assert!(PathGrid::new(1.0, 0, 1).is_err());
        assert!(PathGrid::new(1.0, 4, 0).is_err());
    }

    #[test]
    fn node_index_rejects_off_grid_times() {
        let g = PathGrid::new(1.0, 4, 1).unwrap();
        assert_eq!(g.node_index(0.75).unwrap(), 3);
        assert!(g.node_index(0.3).is_err());
        assert!(g.node_index(1.5).is_err());
        assert!(g.node_index(-0.25).is_err());
    }

    #[test]
    fn wiener_sampling_is_deterministic() {
        let g = PathGrid::new(1.0, 16, 2).unwrap();
        let a = wiener_path(&g, 11, 5);
        let b = wiener_path(&g, 11, 5);
        assert_eq!(a, b);
        assert_eq!(a.node(0), &[0.0, 0.0]);
        assert_ne!(a, wiener_path(&g, 11, 6));
    }

    #[test]
    fn zero_path_bridges_to_straight_line() {
        let g = PathGrid::new(2.0, 8, 2).unwrap();
        let w = WienerPath::from_nodes(g, vec![0.0; 18]).unwrap();
        let b = to_bridge(&w, &[1.0, -1.0], &[3.0, 1.0]).unwrap();
        for k in 0..=8 {
            let f = k as f64 / 8.0;
            assert!((b.node(k)[0] - (1.0 + 2.0 * f)).abs() < 1e-15);
            assert!((b.node(k)[1] - (-1.0 + 2.0 * f)).abs() < 1e-15);
        }
    }

    #[test]
    fn bridge_endpoints_are_exact() {
        let g = PathGrid::new(0.7, 13, 3).unwrap();
        let start = [0.1, -0.3, 1e-7];
        let end = [1.0 / 3.0, 2.0f64.sqrt(), -5.5];
        for i in 0..50 {
            let b = to_bridge(&wiener_path(&g, 3, i), &start, &end).unwrap();
            assert_eq!(b.node(0), &start);
            assert_eq!(b.node(13), &end);
        }
    }

    #[test]
    fn bridge_dimension_mismatch() {
        let g = PathGrid::new(1.0, 4, 2).unwrap();
        let w = wiener_path(&g, 0, 0);
        assert!(to_bridge(&w, &[0.0], &[0.0, 0.0]).is_err());
        assert!(to_bridge(&w, &[0.0, 0.0], &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn moment_report_targets() {
        let g = PathGrid::new(1.0, 4, 1).unwrap();
        let ws = sample_wiener_batch(&g, 1, 10);
        let r = moment_report(&ws, &[1.0]).unwrap();
        assert_eq!(r.covariances[0].target, 1.0);
        let bs = sample_bridge_batch(&g, 1, 10, &[0.0], &[0.0]).unwrap();
        let r = moment_report(&bs, &[0.25, 0.75]).unwrap();
        let p = r.covariances.iter().find(|p| p.t == 0.25 && p.s == 0.75).unwrap();
        assert!((p.target - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn moment_report_preconditions() {
        let g = PathGrid::new(1.0, 4, 1).unwrap();
        let none: Vec<WienerPath> = Vec::new();
        assert!(moment_report(&none, &[1.0]).is_err());
        let ws = sample_wiener_batch(&g, 1, 10);
        assert!(moment_report(&ws, &[0.3]).is_err());
    }

    #[test]
    fn wiener_moments_match() {
        let g = PathGrid::new(1.0, 8, 1).unwrap();
        let ws = sample_wiener_batch(&g, 2024, 100_000);
        let r = moment_report(&ws, &[0.5, 1.0]).unwrap();
        for z in r.z_scores() {
            assert!(z.abs() < 4.0, "z = {z}");
        }
        let v = r.covariances.iter().find(|p| p.t == 1.0 && p.s == 1.0).unwrap();
        assert!((v.empirical - 1.0).abs() < 4.0 * v.std_error);
    }

    #[test]
    fn bridge_midpoint_moments_match() {
        let g = PathGrid::new(1.0, 8, 1).unwrap();
        let bs = sample_bridge_batch(&g, 99, 100_000, &[0.0], &[1.0]).unwrap();
        let r = moment_report(&bs, &[0.5]).unwrap();
        assert_eq!(r.means[0].target, 0.5);
        assert!(r.means[0].z.abs() < 4.0);
        assert_eq!(r.covariances[0].target, 0.25);
        assert!(r.covariances[0].z.abs() < 4.0);
    }
}
