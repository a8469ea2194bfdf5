//! Command-line front end: argument parsing, dispatch to the library and
//! report emission.
//!
//! Exit codes: 0 success, 2 usage error, 3 theorem hypothesis not met,
//! 4 numeric or i/o failure, 5 check failed (the report is still written).

pub mod lang;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::ids::{self, BoundCurve, IdsCurve};
use crate::inequalities::{self, McParams};
use crate::kernel::{self, FkConfig};
use crate::oracle::{self, LatticeSpec};
use crate::paths::{self, MomentReport, PathGrid, SampledPath};
use crate::potentials::{BFieldProfile, CovarianceSpec, ScalarSpec, VectorSpec};
use crate::verification::VerificationReport;
use report::{fmt_f64, fmt_point, Table};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_CHECK_FAILED: i32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Everything needed to reproduce a run. Worker count and output path
/// only affect speed and destination, so they are left out of reports.
#[derive(Clone, Debug, Parser, Serialize)]
#[command(name = "wiener-bounds", version, about = "Path-integral kernel estimates and diamagnetic / density-of-states bound checks")]
pub struct ExperimentConfig {
    #[command(subcommand)]
    #[serde(flatten)]
    pub command: Command,
    /// Master seed for every random stream of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Rayon worker threads; results do not depend on it.
    #[arg(long, global = true, value_parser = positive_count)]
    #[serde(skip)]
    pub workers: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Sample Wiener paths or Brownian bridges; CSV lists nodes, JSON reports moments.
    SamplePaths(SamplePathsArgs),
    /// Monte Carlo Feynman-Kac kernel estimate.
    Kernel(KernelArgs),
    /// Diamagnetic inequality check on shared path samples.
    CheckDia(CheckDiaArgs),
    /// Planar monotonicity check for fields depending on the first coordinate.
    CheckMono(CheckMonoArgs),
    /// Integrated density of states against the quasi-classical bound.
    Ids(IdsArgs),
    /// Dense lattice spectrum and kernel.
    Oracle(OracleArgs),
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ChainArgs {
    #[arg(long, default_value_t = 1, value_parser = positive_count)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0, value_parser = positive, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive, allow_hyphen_values = true)]
    pub hbar: f64,
    #[arg(long, default_value_t = 256, value_parser = positive_count)]
    pub steps: usize,
    #[arg(long, default_value_t = 10_000, value_parser = positive_count)]
    pub paths: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SamplePathsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    /// Bridge end point; together with --qprime switches to bridges.
    #[arg(long, value_parser = point, allow_hyphen_values = true, requires = "qprime")]
    pub q: Option<Point>,
    /// Bridge start point.
    #[arg(long, value_parser = point, allow_hyphen_values = true, requires = "q")]
    pub qprime: Option<Point>,
    /// Probe times for the moment report, as fractions of the total time.
    #[arg(long, value_parser = fractions, default_value = "0.25,0.5,0.75")]
    pub probes: Point,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct KernelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    /// Scalar potential (zero, const:C, harmonic:W, quartic:G, well:D,W, field:S2,ELL,MODES,SEED, tab:FILE).
    #[arg(long, default_value = "zero")]
    pub v: String,
    /// Vector potential (zero, landau:PROFILE, gauge:C, const:A1,.., joined by +).
    #[arg(long, default_value = "zero")]
    pub a: String,
    #[arg(long, value_parser = point, allow_hyphen_values = true)]
    pub q: Point,
    #[arg(long, value_parser = point, allow_hyphen_values = true)]
    pub qprime: Point,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CheckDiaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    #[arg(long, default_value = "zero")]
    pub v: String,
    #[arg(long, default_value = "zero")]
    pub a: String,
    /// Endpoint pair `Q/QPRIME`, coordinates comma-separated; repeatable.
    /// Defaults to q' = 0 and q = (0.5 k, 0, ..) for k = 0..4.
    #[arg(long = "pair", value_parser = pair, allow_hyphen_values = true)]
    pub pairs: Vec<Pair>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CheckMonoArgs {
    /// Profile `b` of the weaker field (const:B0, sin:B0,B1,K, tab:FILE).
    #[arg(long = "b")]
    pub small_b: String,
    /// Profile `B` of the dominating field.
    #[arg(long = "B")]
    pub big_b: String,
    #[arg(long, default_value_t = 1.0, value_parser = positive, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 256, value_parser = positive_count)]
    pub steps: usize,
    #[arg(long, default_value_t = 10_000, value_parser = positive_count)]
    pub paths: usize,
    /// Planar endpoint pair `Q1,Q2/Q1',Q2'`; repeatable. Defaults to five pairs.
    #[arg(long = "pair", value_parser = pair, allow_hyphen_values = true)]
    pub pairs: Vec<Pair>,
    /// Only run the pathwise variance comparison, on the first pair's first coordinates.
    #[arg(long)]
    pub variance_only: bool,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct IdsArgs {
    #[arg(long, default_value_t = 1, value_parser = lattice_dim)]
    pub dim: usize,
    /// Lattice points per side.
    #[arg(long, value_parser = positive_count)]
    pub grid: usize,
    /// Box side length.
    #[arg(long = "box", value_parser = positive, allow_hyphen_values = true)]
    pub box_length: f64,
    #[arg(long, value_parser = positive_count)]
    pub realizations: usize,
    /// Covariance (se:S2,ELL or spectral:S2,FILE).
    #[arg(long)]
    pub cov: String,
    /// Energy grid `start:stop:step`.
    #[arg(long, value_parser = energies, allow_hyphen_values = true)]
    pub energies: Point,
    #[arg(long, default_value_t = 1.0, value_parser = positive, allow_hyphen_values = true)]
    pub hbar: f64,
    /// Inverse temperature of the fixed-beta bound column.
    #[arg(long, default_value_t = 1.0, value_parser = positive, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = crate::potentials::DEFAULT_MODES, value_parser = positive_count)]
    pub modes: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 1, value_parser = lattice_dim)]
    pub dim: usize,
    #[arg(long, value_parser = positive_count)]
    pub grid: usize,
    #[arg(long = "box", value_parser = positive, allow_hyphen_values = true)]
    pub box_length: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive, allow_hyphen_values = true)]
    pub hbar: f64,
    #[arg(long, default_value = "zero")]
    pub v: String,
    #[arg(long, default_value = "zero")]
    pub a: String,
    /// With --q and --qprime, also report the kernel at this beta.
    #[arg(long, value_parser = positive, allow_hyphen_values = true, requires_all = ["q", "qprime"])]
    pub beta: Option<f64>,
    #[arg(long, value_parser = point, allow_hyphen_values = true)]
    pub q: Option<Point>,
    #[arg(long, value_parser = point, allow_hyphen_values = true)]
    pub qprime: Option<Point>,
}

/// A list of coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pair {
    pub q: Vec<f64>,
    pub qprime: Vec<f64>,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be positive and finite, got {s}"))
    }
}

fn positive_count(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("must be a positive integer, got `{s}`")),
    }
}

fn lattice_dim(s: &str) -> std::result::Result<usize, String> {
    match s {
        "1" => Ok(1),
        "2" => Ok(2),
        _ => Err(format!("lattice dimension must be 1 or 2, got `{s}`")),
    }
}

fn point(s: &str) -> std::result::Result<Point, String> {
    lang::parse_list(s).map(Point).map_err(|e| e.to_string())
}

fn fractions(s: &str) -> std::result::Result<Point, String> {
    let p = point(s)?;
    if p.0.iter().any(|&f| !(0.0..=1.0).contains(&f)) {
        return Err("probe fractions must lie in [0, 1]".into());
    }
    Ok(p)
}

fn pair(s: &str) -> std::result::Result<Pair, String> {
    let (q, qp) = s.split_once('/').ok_or_else(|| format!("pair must be Q/QPRIME, got `{s}`"))?;
    Ok(Pair { q: point(q)?.0, qprime: point(qp)?.0 })
}

fn energies(s: &str) -> std::result::Result<Point, String> {
    lang::parse_energies(s).map(Point).map_err(|e| e.to_string())
}

/// Parses and validates a command line (program name first). Everything a
/// run needs is built once here so that bad potentials, dimensions or files
/// are reported as usage errors.
pub fn parse_command<I, T>(argv: I) -> std::result::Result<ExperimentConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = ExperimentConfig::try_parse_from(argv)?;
    if let Err(e) = prepare(&cfg) {
        return Err(ExperimentConfig::command().error(ErrorKind::ValueValidation, e.to_string()));
    }
    Ok(cfg)
}

enum Prepared {
    SamplePaths { grid: PathGrid, bridge: Option<(Vec<f64>, Vec<f64>)>, probes: Vec<f64> },
    Kernel { fk: FkConfig, v: ScalarSpec, a: VectorSpec },
    CheckDia { fk: FkConfig, v: ScalarSpec, a: VectorSpec, pairs: Vec<(Vec<f64>, Vec<f64>)> },
    CheckMono { b: BFieldProfile, big: BFieldProfile, mc: McParams, pairs: Vec<([f64; 2], [f64; 2])> },
    Ids { lattice: LatticeSpec, cov: CovarianceSpec },
    Oracle { lattice: LatticeSpec, v: ScalarSpec, a: VectorSpec, sites: Option<(usize, usize)> },
}

fn fk_config(c: &ChainArgs, seed: u64) -> Result<FkConfig> {
    FkConfig::new(c.beta, c.hbar, c.dim, c.steps, c.paths, seed)
}

fn check_point(p: &[f64], dim: usize, name: &str) -> Result<()> {
    if p.len() != dim {
        return Err(invalid(format!("--{name} has {} coordinates, expected {dim}", p.len())));
    }
    Ok(())
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    Ok(match &cfg.command {
        Command::SamplePaths(a) => {
            let c = &a.chain;
            let grid = PathGrid::new(c.beta * c.hbar * c.hbar, c.steps, c.dim)?;
            let bridge = match (&a.q, &a.qprime) {
                (Some(q), Some(qp)) => {
                    check_point(&q.0, c.dim, "q")?;
                    check_point(&qp.0, c.dim, "qprime")?;
                    Some((qp.0.clone(), q.0.clone()))
                }
                _ => None,
            };
            // probes snap to the nearest grid node
            let probes = a.probes.0.iter().map(|f| grid.time((f * c.steps as f64).round() as usize)).collect();
            if c.paths < 2 {
                return Err(invalid("moment report needs at least two paths"));
            }
            Prepared::SamplePaths { grid, bridge, probes }
        }
        Command::Kernel(k) => {
            let fk = fk_config(&k.chain, cfg.seed)?;
            check_point(&k.q.0, fk.dim, "q")?;
            check_point(&k.qprime.0, fk.dim, "qprime")?;
            Prepared::Kernel { fk, v: lang::parse_scalar(&k.v, fk.dim)?, a: lang::parse_vector(&k.a, fk.dim)? }
        }
        Command::CheckDia(k) => {
            let fk = fk_config(&k.chain, cfg.seed)?;
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = if k.pairs.is_empty() {
                (0..5)
                    .map(|i| {
                        let mut q = vec![0.0; fk.dim];
                        q[0] = 0.5 * i as f64;
                        (q, vec![0.0; fk.dim])
                    })
                    .collect()
            } else {
                k.pairs.iter().map(|p| (p.q.clone(), p.qprime.clone())).collect()
            };
            for (q, qp) in &pairs {
                check_point(q, fk.dim, "pair")?;
                check_point(qp, fk.dim, "pair")?;
            }
            Prepared::CheckDia { fk, v: lang::parse_scalar(&k.v, fk.dim)?, a: lang::parse_vector(&k.a, fk.dim)?, pairs }
        }
        Command::CheckMono(m) => {
            let pairs = if m.pairs.is_empty() {
                vec![([0.0, 0.0], [0.0, 0.0]), ([1.0, 0.0], [0.0, 0.0]), ([0.0, 1.0], [0.0, 0.0]), ([0.5, -0.5], [-0.5, 0.5]), ([2.0, 1.0], [1.0, 0.0])]
            } else {
                m.pairs
                    .iter()
                    .map(|p| Ok((inequalities::planar_endpoint(&p.q)?, inequalities::planar_endpoint(&p.qprime)?)))
                    .collect::<Result<_>>()?
            };
            Prepared::CheckMono {
                b: lang::parse_profile(&m.small_b)?,
                big: lang::parse_profile(&m.big_b)?,
                mc: McParams { n_steps: m.steps, n_paths: m.paths, seed: cfg.seed },
                pairs,
            }
        }
        Command::Ids(i) => {
            if i.realizations < 2 {
                return Err(invalid("--realizations must be at least 2"));
            }
            let lattice = LatticeSpec::new(i.dim, i.grid, i.box_length)?;
            if lattice.n_sites() > oracle::DEFAULT_SITE_CAP {
                return Err(Error::TooLarge { size: lattice.n_sites(), cap: oracle::DEFAULT_SITE_CAP });
            }
            let cov = lang::parse_covariance(&i.cov)?;
            if i.dim != 1 && matches!(cov, CovarianceSpec::TabulatedSpectral { .. }) {
                return Err(invalid("tabulated spectra are one-dimensional"));
            }
            Prepared::Ids { lattice, cov }
        }
        Command::Oracle(o) => {
            let lattice = LatticeSpec::new(o.dim, o.grid, o.box_length)?;
            if lattice.n_sites() > oracle::DEFAULT_SITE_CAP {
                return Err(Error::TooLarge { size: lattice.n_sites(), cap: oracle::DEFAULT_SITE_CAP });
            }
            let sites = match (&o.q, &o.qprime) {
                (Some(q), Some(qp)) => Some((lattice.site_at(&q.0)?, lattice.site_at(&qp.0)?)),
                (None, None) => None,
                _ => return Err(invalid("--q and --qprime go together")),
            };
            Prepared::Oracle { lattice, v: lang::parse_scalar(&o.v, o.dim)?, a: lang::parse_vector(&o.a, o.dim)?, sites }
        }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub value_re: f64,
    pub value_im: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub beta: f64,
    pub hbar: f64,
    pub dim: usize,
    pub seed: u64,
    pub q: Vec<f64>,
    pub qprime: Vec<f64>,
    pub potential: String,
    pub vector_potential: String,
    pub modulus: f64,
    pub prefactor: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PathsReport {
    pub kind: &'static str,
    pub total_time: f64,
    pub moments: MomentReport,
    #[serde(skip)]
    pub grid: Option<PathGrid>,
    #[serde(skip)]
    pub nodes: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdsReport {
    pub curve: IdsCurve,
    pub bound_fixed_beta: BoundCurve,
    pub bound_optimized: BoundCurve,
    pub weyl: Vec<Option<f64>>,
    pub check_fixed_beta: VerificationReport,
    pub check_optimized: VerificationReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub n_sites: usize,
    pub spacing: f64,
    pub hermiticity_residual: f64,
    pub eigenvalues: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site_q: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site_qprime: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum ReportBody {
    Paths(PathsReport),
    Kernel(KernelReport),
    Check(VerificationReport),
    Ids(Box<IdsReport>),
    Oracle(OracleReport),
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    #[serde(flatten)]
    pub body: ReportBody,
    pub tool_version: &'static str,
    /// Seconds; printed to stderr, never serialized, so reruns compare equal.
    #[serde(skip)]
    pub wall_time: f64,
}

impl RunReport {
    /// Verdict of a check run; `None` for plain estimates.
    pub fn pass(&self) -> Option<bool> {
        match &self.body {
            ReportBody::Check(r) => Some(r.pass),
            ReportBody::Ids(r) => Some(r.check_fixed_beta.pass && r.check_optimized.pass),
            _ => None,
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let started = Instant::now();
    let body = match (prepare(cfg)?, &cfg.command) {
        (Prepared::SamplePaths { grid, bridge, probes }, Command::SamplePaths(a)) => {
            let n = a.chain.paths;
            let (kind, moments, nodes) = match bridge {
                Some((start, end)) => {
                    let b = paths::sample_bridge_batch(&grid, cfg.seed, n, &start, &end)?;
                    let m = paths::moment_report(&b, &probes)?;
                    ("bridge", m, b.iter().map(|p| p.nodes().to_vec()).collect())
                }
                None => {
                    let w = paths::sample_wiener_batch(&grid, cfg.seed, n);
                    let m = paths::moment_report(&w, &probes)?;
                    ("wiener", m, w.iter().map(|p| p.nodes().to_vec()).collect())
                }
            };
            let total_time = grid.total_time();
            ReportBody::Paths(PathsReport { kind, total_time, moments, grid: Some(grid), nodes })
        }
        (Prepared::Kernel { fk, v, a }, Command::Kernel(k)) => {
            let est = kernel::estimate_kernel(&fk, &v, &a, &k.q.0, &k.qprime.0)?;
            ReportBody::Kernel(KernelReport {
                value_re: est.value.re,
                value_im: est.value.im,
                std_error: est.std_error,
                n_paths: est.n_paths,
                n_steps: fk.n_steps,
                beta: fk.beta,
                hbar: fk.hbar,
                dim: fk.dim,
                seed: fk.seed,
                q: est.q.clone(),
                qprime: est.qprime.clone(),
                potential: k.v.clone(),
                vector_potential: k.a.clone(),
                modulus: est.value.norm(),
                prefactor: est.prefactor,
            })
        }
        (Prepared::CheckDia { fk, v, a, pairs }, _) => ReportBody::Check(inequalities::diamagnetic_check(&fk, &v, &a, &pairs)?),
        (Prepared::CheckMono { b, big, mc, pairs }, Command::CheckMono(m)) => {
            if m.variance_only {
                let (q, qp) = pairs[0];
                ReportBody::Check(inequalities::variance_comparison_check(&b, &big, m.beta, q[0], qp[0], &mc)?)
            } else {
                ReportBody::Check(inequalities::monotonicity_check(&b, &big, &pairs, m.beta, &mc)?)
            }
        }
        (Prepared::Ids { lattice, cov }, Command::Ids(i)) => {
            let e = &i.energies.0;
            let curve = ids::estimate_ids_with(&lattice, &cov, i.realizations, e, cfg.seed, i.hbar, i.modes)?;
            let c0 = cov.variance();
            let fixed = ids::fixed_beta_bounds(e, i.beta, c0, i.hbar, i.dim)?;
            let optimized = ids::optimized_bounds(e, c0, i.hbar, i.dim)?;
            let weyl = e.iter().map(|&x| ids::weyl_asymptote(x, i.hbar, i.dim).ok()).collect();
            let check_fixed_beta = ids::compare_ids_to_bounds(&curve, &fixed, false)?;
            let check_optimized = ids::compare_ids_to_bounds(&curve, &optimized, true)?;
            ReportBody::Ids(Box::new(IdsReport { curve, bound_fixed_beta: fixed, bound_optimized: optimized, weyl, check_fixed_beta, check_optimized }))
        }
        (Prepared::Oracle { lattice, v, a, sites }, Command::Oracle(o)) => {
            let op = oracle::build_lattice_hamiltonian(&lattice, &v, &a, o.hbar)?;
            let mut rep = OracleReport {
                n_sites: op.size(),
                spacing: lattice.spacing(),
                hermiticity_residual: op.hermiticity_residual(),
                eigenvalues: Vec::new(),
                kernel_re: None,
                kernel_im: None,
                site_q: None,
                site_qprime: None,
            };
            match (sites, o.beta) {
                (Some((i, j)), Some(beta)) => {
                    let spec = op.decompose()?;
                    let k = spec.kernel(beta, i, j);
                    rep.kernel_re = Some(k.re);
                    rep.kernel_im = Some(k.im);
                    rep.site_q = Some(lattice.position(i));
                    rep.site_qprime = Some(lattice.position(j));
                    rep.eigenvalues = spec.eigenvalues;
                }
                _ => rep.eigenvalues = op.eigenvalues(),
            }
            ReportBody::Oracle(rep)
        }
        _ => unreachable!("prepare matches the subcommand"),
    };
    Ok(RunReport { config: cfg.clone(), body, tool_version: env!("CARGO_PKG_VERSION"), wall_time: started.elapsed().as_secs_f64() })
}

fn csv_table(report: &RunReport) -> Table {
    let b = |x: bool| if x { "true".to_string() } else { "false".to_string() };
    match &report.body {
        ReportBody::Paths(p) => {
            let grid = p.grid.expect("sampled paths carry their grid");
            let d = grid.dim();
            let mut header = vec!["path_id".to_string(), "k".to_string(), "t_k".to_string()];
            header.extend((1..=d).map(|j| format!("x_{j}")));
            let mut t = Table { header, rows: Vec::new() };
            for (id, nodes) in p.nodes.iter().enumerate() {
                for k in 0..grid.n_nodes() {
                    let mut row = vec![id.to_string(), k.to_string(), fmt_f64(grid.time(k))];
                    row.extend(nodes[k * d..(k + 1) * d].iter().map(|&x| fmt_f64(x)));
                    t.push(row);
                }
            }
            t
        }
        ReportBody::Kernel(k) => {
            let mut t = Table::new(&[
                "value_re", "value_im", "std_error", "n_paths", "n_steps", "beta", "hbar", "dim", "seed", "q", "qprime", "potential", "vector_potential",
            ]);
            t.push(vec![
                fmt_f64(k.value_re),
                fmt_f64(k.value_im),
                fmt_f64(k.std_error),
                k.n_paths.to_string(),
                k.n_steps.to_string(),
                fmt_f64(k.beta),
                fmt_f64(k.hbar),
                k.dim.to_string(),
                k.seed.to_string(),
                fmt_point(&k.q),
                fmt_point(&k.qprime),
                k.potential.clone(),
                k.vector_potential.clone(),
            ]);
            t
        }
        ReportBody::Check(r) => {
            let mut t = Table::new(&["q", "qprime", "lhs", "rhs", "margin", "std_error", "violated"]);
            for e in &r.endpoints {
                t.push(vec![fmt_point(&e.q), fmt_point(&e.qprime), fmt_f64(e.lhs), fmt_f64(e.rhs), fmt_f64(e.margin), fmt_f64(e.std_error), b(e.violated)]);
            }
            t
        }
        ReportBody::Ids(r) => {
            let mut t = Table::new(&["E", "N_mean", "N_se", "bound_fixed_beta", "bound_optimized", "beta_star", "weyl"]);
            for (i, &e) in r.curve.energies.iter().enumerate() {
                t.push(vec![
                    fmt_f64(e),
                    fmt_f64(r.curve.mean[i]),
                    fmt_f64(r.curve.std_error[i]),
                    fmt_f64(r.bound_fixed_beta.values[i]),
                    fmt_f64(r.bound_optimized.values[i]),
                    fmt_f64(r.bound_optimized.betas[i]),
                    r.weyl[i].map(fmt_f64).unwrap_or_else(|| "NaN".into()),
                ]);
            }
            t
        }
        ReportBody::Oracle(o) => {
            let mut t = Table::new(&["index", "eigenvalue"]);
            for (i, &l) in o.eigenvalues.iter().enumerate() {
                t.push(vec![i.to_string(), fmt_f64(l)]);
            }
            t
        }
    }
}

/// Serialized bytes of a report in the requested format.
pub fn render_report(report: &RunReport, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => report::to_json(report),
        Format::Csv => report::to_csv(&csv_table(report)),
    }
}

pub fn write_report(report: &RunReport, path: Option<&std::path::Path>, format: Format) -> Result<()> {
    report::emit(&render_report(report, format)?, path)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Hypothesis(_) => EXIT_HYPOTHESIS,
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::Unsupported(_) => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<RunReport> {
    let report = run_experiment(cfg)?;
    write_report(&report, cfg.out.as_deref(), cfg.format)?;
    Ok(report)
}

/// Full program: parse, run (inside a pool of `--workers` threads when
/// given), write, and return the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_command(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cfg.workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cfg)),
            Err(e) => Err(Error::Unsupported(format!("cannot start {n} workers: {e}"))),
        },
        None => execute(&cfg),
    };
    match outcome {
        Ok(report) => {
            eprintln!("wall time: {:.3} s", report.wall_time);
            match report.pass() {
                Some(false) => {
                    eprintln!("check failed");
                    EXIT_CHECK_FAILED
                }
                _ => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
