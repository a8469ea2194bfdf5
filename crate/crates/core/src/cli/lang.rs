//! Parsers for the potential, field-profile, covariance, point and
//! energy-range strings accepted on the command line.

use crate::error::{invalid, Result};
use crate::potentials::{BFieldProfile, CovarianceSpec, FieldRealization, ScalarSpec, Table, VectorSpec};

fn split_spec(s: &str) -> (&str, &str) {
    match s.split_once(':') {
        Some((head, rest)) => (head.trim(), rest),
        None => (s.trim(), ""),
    }
}

fn numbers(s: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let vals = parse_list(s)?;
    if vals.len() != expected {
        return Err(invalid(format!("{what} takes {expected} number(s), got `{s}`")));
    }
    Ok(vals)
}

/// Comma-separated list of finite numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| invalid(format!("`{t}` is not a finite number")))
        })
        .collect()
}

/// `zero`, `const:C`, `harmonic:OMEGA`, `quartic:G`, `well:DEPTH,WIDTH`,
/// `field:SIGMA2,ELL,MODES,SEED`, `tab:PATH.csv`.
pub fn parse_scalar(s: &str, dim: usize) -> Result<ScalarSpec> {
    let (head, rest) = split_spec(s);
    Ok(match head {
        "zero" if rest.is_empty() => ScalarSpec::Zero,
        "const" => ScalarSpec::Constant(numbers(rest, 1, "const")?[0]),
        "harmonic" => ScalarSpec::Harmonic { omega: numbers(rest, 1, "harmonic")?[0] },
        "quartic" => {
            let g = numbers(rest, 1, "quartic")?[0];
            if g < 0.0 {
                return Err(invalid("quartic coupling must be non-negative"));
            }
            ScalarSpec::Quartic { g }
        }
        "well" => {
            let v = numbers(rest, 2, "well")?;
            if v[1] <= 0.0 {
                return Err(invalid("well width must be positive"));
            }
            ScalarSpec::FiniteWell { depth: v[0], width: v[1] }
        }
        "field" => {
            let v = numbers(rest, 4, "field")?;
            let modes = as_count(v[2], "field modes")?;
            let seed = as_count(v[3], "field seed")? as u64;
            let cov = CovarianceSpec::squared_exponential(v[0], v[1])?;
            ScalarSpec::GaussianField(FieldRealization::seeded(&cov, dim, modes, seed)?)
        }
        "tab" if !rest.is_empty() => ScalarSpec::Tabulated(Table::from_csv(rest)?),
        _ => return Err(invalid(format!("unknown potential `{s}`"))),
    })
}

fn as_count(x: f64, what: &str) -> Result<usize> {
    if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
        return Err(invalid(format!("{what} must be a non-negative integer")));
    }
    Ok(x as usize)
}

/// `const:B0`, `sin:B0,B1,KAPPA`, `tab:PATH.csv`.
pub fn parse_profile(s: &str) -> Result<BFieldProfile> {
    let (head, rest) = split_spec(s);
    Ok(match head {
        "const" => BFieldProfile::Constant(numbers(rest, 1, "const")?[0]),
        "sin" => {
            let v = numbers(rest, 3, "sin")?;
            if v[2] == 0.0 {
                return Err(invalid("sin profile needs a nonzero wavenumber"));
            }
            BFieldProfile::Sinusoidal { b0: v[0], b1: v[1], kappa: v[2] }
        }
        "tab" if !rest.is_empty() => BFieldProfile::tabulated(Table::from_csv(rest)?),
        _ => return Err(invalid(format!("unknown field profile `{s}`"))),
    })
}

/// `zero`, `landau:PROFILE`, `gauge:C`, `const:A1,..,Ad`, or several of
/// these joined by `+`.
pub fn parse_vector(s: &str, dim: usize) -> Result<VectorSpec> {
    if s.contains('+') {
        let parts = s.split('+').map(|p| parse_vector(p, dim)).collect::<Result<Vec<_>>>()?;
        let spec = VectorSpec::Sum(parts);
        spec.validate(dim)?;
        return Ok(spec);
    }
    let (head, rest) = split_spec(s);
    let spec = match head {
        "zero" if rest.is_empty() => VectorSpec::Zero,
        "landau" => VectorSpec::Landau(parse_profile(rest)?),
        "gauge" => VectorSpec::QuadraticGauge { coeff: numbers(rest, 1, "gauge")?[0] },
        "const" => VectorSpec::Constant(parse_list(rest)?),
        _ => return Err(invalid(format!("unknown vector potential `{s}`"))),
    };
    spec.validate(dim)?;
    Ok(spec)
}

/// `se:SIGMA2,ELL` or `spectral:SIGMA2,PATH.csv`.
pub fn parse_covariance(s: &str) -> Result<CovarianceSpec> {
    let (head, rest) = split_spec(s);
    match head {
        "se" => {
            let v = numbers(rest, 2, "se")?;
            CovarianceSpec::squared_exponential(v[0], v[1])
        }
        "spectral" => {
            let (s2, path) = rest.split_once(',').ok_or_else(|| invalid("spectral takes SIGMA2,PATH"))?;
            CovarianceSpec::tabulated_spectral(numbers(s2, 1, "spectral")?[0], Table::from_csv(path.trim())?)
        }
        _ => Err(invalid(format!("unknown covariance `{s}`"))),
    }
}

/// `start:stop:step`, inclusive of `stop` within half a step. Points are
/// `start + k * step`.
pub fn parse_energies(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(invalid(format!("energy range must be start:stop:step, got `{s}`")));
    }
    let v: Vec<f64> = parts.iter().map(|p| parse_list(p).map(|x| x[0])).collect::<Result<_>>()?;
    let (start, stop, step) = (v[0], v[1], v[2]);
    if !(step > 0.0) || stop < start {
        return Err(invalid("energy range needs step > 0 and stop >= start"));
    }
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}
