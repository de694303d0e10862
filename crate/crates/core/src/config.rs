//! Run configuration.
//!
//! Files are flat `key = value` lines with at most one dot per key; `#`
//! starts a comment. Lists use `,` between numbers and `;` between points
//! (`poles = 0.5,0.5; 0.25,0.75`) or between expression components
//! (`data.f = y1 * y2; 1`), since expressions themselves may contain commas.
//!
//! | key | value |
//! |-----|-------|
//! | `domain` | domain file, relative to the config file |
//! | `out` | output directory |
//! | `h` | mesh size |
//! | `rho` | averaging radius, absolute (`0.16`) or relative to `h` (`4h`) |
//! | `poles`, `points` | point lists |
//! | `bc` | `mixed`, `dirichlet`, `neumann` or `free` |
//! | `checks` | comma-separated check names for `verify` |
//! | `seed`, `samples` | randomised checks |
//! | `levels`, `meyers.t_grid` | Meyers diagnostic |
//! | `lt.t` | exponent of the `lt_estimates` check |
//! | `symmetry.tol` | pass threshold of the symmetry check |
//! | `free.radius`, `free.h_near` | free-space construction |
//! | `data.f`, `data.f_n` | data expressions, one per component |
//! | `coeff.kind` | `laplace`, `tensor` or `lame` |
//! | `coeff.m` | components of a constant tensor |
//! | `coeff.tensor` | `4m²` entries, `a^{ij}_{αβ}` at `((i·2+j)·m+α)·m+β` |
//! | `coeff.mu`, `coeff.lambda` | Lamé expressions of `y1`, `y2` |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::analysis::{InequalityKind, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{Domain, Point};
use crate::green::GreenBc;
use crate::operators::{CoefficientField, CoefficientKind};

pub const KEYS: &[&str] = &[
    "domain",
    "out",
    "h",
    "rho",
    "poles",
    "points",
    "bc",
    "checks",
    "seed",
    "samples",
    "levels",
    "meyers.t_grid",
    "lt.t",
    "symmetry.tol",
    "free.radius",
    "free.h_near",
    "data.f",
    "data.f_n",
    "coeff.kind",
    "coeff.m",
    "coeff.tensor",
    "coeff.mu",
    "coeff.lambda",
];

/// Check names accepted by `verify` besides the inequality kinds.
pub const EXTRA_CHECKS: &[&str] = &[
    "green_identity",
    "neumann_duality",
    "representation",
    "symmetry",
    "bmo",
    "log_singularity",
    "meyers",
    "ellipticity",
    "corkscrew",
];

/// Grid points sampled when validating variable Lamé coefficients.
const COEFF_SAMPLES: usize = 32;

/// Key-value pairs in sorted order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if raw.entries.contains_key(k) {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", lineno + 1)));
            }
            raw.set(k, v).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", lineno + 1)),
                other => other,
            })?;
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if key.matches('.').count() > 1 {
            return Err(Error::Config(format!("key `{key}` nests more than one level")));
        }
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Sorted `key = value` lines; the input of the config hash.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn number(key: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("`{key}`: value must be finite")));
    }
    Ok(v)
}

fn numbers(key: &str, s: &str) -> Result<Vec<f64>> {
    let s = s.trim().trim_start_matches('[').trim_end_matches(']');
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|t| number(key, t)).collect()
}

pub fn parse_point(key: &str, s: &str) -> Result<Point> {
    match numbers(key, s)?.as_slice() {
        [x, y] => Ok(Point::new(*x, *y)),
        _ => Err(Error::Config(format!("`{key}`: expected `x,y`, got `{}`", s.trim()))),
    }
}

pub fn parse_points(key: &str, s: &str) -> Result<Vec<Point>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_point(key, t))
        .collect()
}

/// Averaging radius: a fixed value or a multiple of the mesh size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RhoPolicy {
    Absolute(f64),
    MeshMultiple(f64),
}

/// Smallest admissible `ρ / h`.
pub const MIN_RHO_OVER_H: f64 = 4.0;

impl RhoPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let p = match s.strip_suffix('h') {
            Some(k) => RhoPolicy::MeshMultiple(if k.trim().is_empty() { 1.0 } else { number("rho", k)? }),
            None => RhoPolicy::Absolute(number("rho", s)?),
        };
        let v = match p {
            RhoPolicy::Absolute(v) | RhoPolicy::MeshMultiple(v) => v,
        };
        if v <= 0.0 {
            return Err(Error::Config("`rho` must be positive".into()));
        }
        Ok(p)
    }

    pub fn value(self, h: f64) -> f64 {
        match self {
            RhoPolicy::Absolute(v) => v,
            RhoPolicy::MeshMultiple(k) => k * h,
        }
    }

    /// `ρ` for mesh size `h`, rejecting `ρ < 4h`.
    pub fn resolve(self, h: f64) -> Result<f64> {
        let rho = self.value(h);
        if rho < MIN_RHO_OVER_H * h * (1.0 - 1e-12) {
            return Err(Error::Precondition(format!(
                "rho under-resolved (rho < 4h): rho = {rho}, h = {h}"
            )));
        }
        Ok(rho)
    }
}

/// Coefficient description, turned into a [`CoefficientField`] once the
/// domain is known.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffSpec {
    pub kind: CoefficientKind,
    pub m: usize,
    pub tensor: Option<Vec<f64>>,
    pub mu: Option<Expr>,
    pub lambda: Option<Expr>,
}

impl CoeffSpec {
    fn from_raw(raw: &RawConfig) -> Result<Self> {
        let kind = match raw.get("coeff.kind") {
            None => CoefficientKind::ScalarLaplace,
            Some(s) => CoefficientKind::parse(s)
                .ok_or_else(|| Error::Config(format!("`coeff.kind`: unknown kind `{s}`")))?,
        };
        let expr = |key: &str| -> Result<Option<Expr>> {
            raw.get(key)
                .map(|s| Expr::parse(s).map_err(|e| Error::Config(format!("`{key}`: {e}"))))
                .transpose()
        };
        let parsed = match kind {
            CoefficientKind::ScalarLaplace => CoeffSpec {
                kind,
                m: 1,
                tensor: None,
                mu: None,
                lambda: None,
            },
            CoefficientKind::ConstantTensor => {
                let m = match raw.get("coeff.m") {
                    Some(s) => s
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("`coeff.m`: `{s}` is not a positive integer")))?,
                    None => 1,
                };
                let tensor = raw
                    .get("coeff.tensor")
                    .ok_or_else(|| Error::Config("`coeff.tensor` required for a constant tensor".into()))?;
                CoeffSpec {
                    kind,
                    m,
                    tensor: Some(numbers("coeff.tensor", tensor)?),
                    mu: None,
                    lambda: None,
                }
            }
            CoefficientKind::LameVariable => {
                let mu = expr("coeff.mu")?.ok_or_else(|| Error::Config("`coeff.mu` required for Lamé".into()))?;
                let lambda =
                    expr("coeff.lambda")?.ok_or_else(|| Error::Config("`coeff.lambda` required for Lamé".into()))?;
                CoeffSpec {
                    kind,
                    m: 2,
                    tensor: None,
                    mu: Some(mu),
                    lambda: Some(lambda),
                }
            }
        };
        Ok(parsed)
    }

    /// Builds the coefficient field; variable Lamé parameters are validated
    /// on a grid over `dom`.
    pub fn build(&self, dom: Option<&Domain>) -> Result<CoefficientField> {
        match self.kind {
            CoefficientKind::ScalarLaplace => Ok(CoefficientField::laplace()),
            CoefficientKind::ConstantTensor => {
                CoefficientField::constant_tensor(self.m, self.tensor.clone().unwrap_or_default())
            }
            CoefficientKind::LameVariable => {
                let (mu, lambda) = (self.mu.clone().unwrap(), self.lambda.clone().unwrap());
                match (mu.as_const(), lambda.as_const(), dom) {
                    (Some(a), Some(b), _) => CoefficientField::lame_constant(a, b),
                    (_, _, Some(d)) => CoefficientField::lame(mu, lambda, d, COEFF_SAMPLES),
                    _ => Err(Error::Config("variable Lamé coefficients need a domain".into())),
                }
            }
        }
    }
}

/// Validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub domain: Option<PathBuf>,
    pub coeff: CoeffSpec,
    pub h: Option<f64>,
    pub rho: RhoPolicy,
    pub poles: Vec<Point>,
    pub points: Vec<Point>,
    pub bc: GreenBc,
    pub checks: Vec<String>,
    pub out: PathBuf,
    pub seed: u64,
    pub samples: usize,
    pub levels: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub lt_t: f64,
    pub symmetry_tol: f64,
    pub free_radius: Option<f64>,
    pub free_h_near: Option<f64>,
    pub f: Option<Vec<Expr>>,
    pub f_n: Option<Vec<Expr>>,
}

fn exprs(key: &str, s: &str) -> Result<Vec<Expr>> {
    s.split(';')
        .map(|t| Expr::parse(t.trim()).map_err(|e| Error::Config(format!("`{key}`: {e}"))))
        .collect()
}

impl RunConfig {
    /// Interprets `raw`; a relative `domain` path is resolved against
    /// `base`, the directory of the config file.
    pub fn from_raw(raw: &RawConfig, base: Option<&Path>) -> Result<Self> {
        let opt_num = |k: &str| raw.get(k).map(|s| number(k, s)).transpose();
        let h = opt_num("h")?;
        if let Some(h) = h {
            if h <= 0.0 {
                return Err(Error::Config("`h` must be positive".into()));
            }
        }
        let rho = match raw.get("rho") {
            Some(s) => RhoPolicy::parse(s)?,
            None => RhoPolicy::MeshMultiple(MIN_RHO_OVER_H),
        };
        let bc = match raw.get("bc") {
            None => GreenBc::Mixed,
            Some(s) => GreenBc::parse(s.trim()).ok_or_else(|| Error::Config(format!("`bc`: unknown condition `{s}`")))?,
        };
        let checks: Vec<String> = raw
            .get("checks")
            .map(|s| s.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect())
            .unwrap_or_default();
        for c in &checks {
            if InequalityKind::parse(c).is_none() && !EXTRA_CHECKS.contains(&c.as_str()) {
                return Err(Error::Config(format!("unknown check `{c}`")));
            }
        }
        let int = |k: &str, default: u64| -> Result<u64> {
            raw.get(k).map_or(Ok(default), |s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("`{k}`: `{s}` is not a non-negative integer")))
            })
        };
        let levels = raw.get("levels").map(|s| numbers("levels", s)).transpose()?.unwrap_or_default();
        if levels.iter().any(|&l| l <= 0.0) {
            return Err(Error::Config("`levels` must be positive".into()));
        }
        let cfg = RunConfig {
            domain: raw.get("domain").map(|d| match base {
                Some(b) if Path::new(d).is_relative() => b.join(d),
                _ => PathBuf::from(d),
            }),
            coeff: CoeffSpec::from_raw(raw)?,
            h,
            rho,
            poles: raw.get("poles").map(|s| parse_points("poles", s)).transpose()?.unwrap_or_default(),
            points: raw.get("points").map(|s| parse_points("points", s)).transpose()?.unwrap_or_default(),
            bc,
            checks,
            out: PathBuf::from(raw.get("out").unwrap_or("out")),
            seed: int("seed", 0)?,
            samples: int("samples", MIN_SAMPLES as u64)? as usize,
            levels,
            t_grid: match raw.get("meyers.t_grid") {
                Some(s) => numbers("meyers.t_grid", s)?,
                None => vec![2.5, 3.0, 3.5, 4.5, 5.0, 5.5, 6.0],
            },
            lt_t: opt_num("lt.t")?.unwrap_or(3.0),
            symmetry_tol: opt_num("symmetry.tol")?.unwrap_or(1e-2),
            free_radius: opt_num("free.radius")?,
            free_h_near: opt_num("free.h_near")?,
            f: raw.get("data.f").map(|s| exprs("data.f", s)).transpose()?,
            f_n: raw.get("data.f_n").map(|s| exprs("data.f_n", s)).transpose()?,
        };
        if let Some(f) = cfg.f.iter().chain(&cfg.f_n).find(|f| f.len() != cfg.coeff.m) {
            return Err(Error::Config(format!(
                "data has {} components, the operator has m = {}",
                f.len(),
                cfg.coeff.m
            )));
        }
        Ok(cfg)
    }

    /// Mesh size, required by every subcommand except `report`.
    pub fn require_h(&self) -> Result<f64> {
        self.h.ok_or_else(|| Error::Config("mesh size `h` not given (--h)".into()))
    }

    /// Reads and parses the domain file.
    pub fn load_domain(&self) -> Result<(Domain, String)> {
        let path = self
            .domain
            .as_ref()
            .ok_or_else(|| Error::Config("domain file not given (--domain)".into()))?;
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Config(format!("domain file not found: {}", path.display())),
            _ => Error::Config(format!("cannot read domain file {}: {e}", path.display())),
        })?;
        Ok((Domain::parse(&text)?, text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_keys() {
        let raw = RawConfig::parse(
            "h = 0.05\nrho = 4h\npoles = 0.5,0.5; 0.25, 0.75\ncoeff.kind = tensor\n\
             coeff.m = 1\ncoeff.tensor = [1, 0.5, -0.5, 1]\ndata.f = min(y1, y2)\n",
        )
        .unwrap();
        let cfg = RunConfig::from_raw(&raw, None).unwrap();
        assert_eq!(cfg.h, Some(0.05));
        assert_eq!(cfg.rho, RhoPolicy::MeshMultiple(4.0));
        assert_eq!(cfg.poles, vec![Point::new(0.5, 0.5), Point::new(0.25, 0.75)]);
        assert_eq!(cfg.coeff.tensor.as_deref(), Some(&[1.0, 0.5, -0.5, 1.0][..]));
        assert_eq!(cfg.f.as_ref().unwrap()[0].eval(Point::new(0.3, 0.2)), 0.2);
        assert!(!cfg.coeff.build(None).unwrap().is_symmetric());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RawConfig::parse("a.b.c = 1").is_err());
        assert!(RawConfig::parse("unknown = 1").is_err());
        assert!(RawConfig::parse("h = 1\nh = 2").is_err());
        assert!(RawConfig::parse("h 1").is_err());
        let bad = |text: &str| RunConfig::from_raw(&RawConfig::parse(text).unwrap(), None).is_err();
        assert!(bad("h = -1"));
        assert!(bad("h = abc"));
        assert!(bad("checks = poincare, nonsense"));
        assert!(bad("bc = robin"));
        assert!(bad("coeff.kind = lame\ncoeff.mu = 1"));
        assert!(bad("data.f = 1; 2"));
        assert!(bad("rho = 0"));
    }

    #[test]
    fn rho_policy() {
        assert_eq!(RhoPolicy::parse("4h").unwrap().value(0.02), 0.08);
        assert_eq!(RhoPolicy::parse("h").unwrap().value(0.5), 0.5);
        assert_eq!(RhoPolicy::parse("0.3").unwrap().value(0.02), 0.3);
        let err = RhoPolicy::Absolute(0.01).resolve(0.1).unwrap_err().to_string();
        assert!(err.starts_with("rho under-resolved (rho < 4h)"), "{err}");
        assert!(RhoPolicy::MeshMultiple(4.0).resolve(0.1).is_ok());
    }

    #[test]
    fn canonical_text_is_sorted() {
        let a = RawConfig::parse("seed = 3\nh = 0.1").unwrap();
        let b = RawConfig::parse("h = 0.1\nseed = 3").unwrap();
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(a.canonical(), "h = 0.1\nseed = 3\n");
    }

    #[test]
    fn missing_domain_file() {
        let raw = RawConfig::parse("domain = /nonexistent/square.dom").unwrap();
        let err = RunConfig::from_raw(&raw, None).unwrap().load_domain().unwrap_err().to_string();
        assert!(err.starts_with("config: domain file not found"), "{err}");
    }
}
