//! Run configuration files.
//!
//! Same flat `key = value` text as sweep grids. Top-level keys name the
//! command and the law; `[geometry]`, `[solver]`, `[mc]` and `[output]` hold
//! the rest. Rendering is canonical, so a parsed config echoes back to the
//! same text.
//!
//! ```text
//! command = solve exit-time
//! law = srw
//!
//! [geometry]
//! n = 1
//! points = 0,0
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::exact::SolveOptions;
use crate::geometry::LatticePoint;
use crate::law::LawSpec;
use crate::verify::fmt_num;
use crate::verify::grid::{parse_point, GridError, SweepGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("config key `{0}` is not recognised")]
    UnknownKey(String),
    #[error("config section [{0}] is not recognised")]
    UnknownSection(String),
    #[error("config key `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("{0}")]
    Precondition(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Geometry {
    pub k: Option<i64>,
    pub n: Option<f64>,
    pub s: Option<f64>,
    pub r: Option<f64>,
    pub big_r: Option<f64>,
    pub points: Vec<LatticePoint>,
    /// Second point: the column of a Green function, or the relocation target of the worst-case walk.
    pub y: Option<LatticePoint>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct McConfig {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub cap: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    /// Subcommand path, e.g. `solve exit-time`.
    pub command: String,
    pub law: Option<LawSpec>,
    pub geometry: Geometry,
    pub solver: SolveOptions,
    pub mc: McConfig,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e: T::Err| ConfigError::BadValue { key: key.into(), msg: format!("`{v}`: {e}") })
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::BadValue { key: key.into(), msg: format!("must be positive and finite, got {v}") })
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let grid = SweepGrid::parse(text)?;
        let mut cfg = RunConfig::default();
        for (k, v) in &grid.globals {
            match k.as_str() {
                "command" => cfg.command = v.split_whitespace().collect::<Vec<_>>().join(" "),
                "law" => {
                    cfg.law =
                        Some(v.parse().map_err(|e| ConfigError::BadValue { key: k.clone(), msg: format!("{e}") })?)
                }
                _ => return Err(ConfigError::UnknownKey(k.clone())),
            }
        }
        let empty = BTreeMap::new();
        for name in grid.sections.keys() {
            if !["geometry", "solver", "mc", "output"].contains(&name.as_str()) {
                return Err(ConfigError::UnknownSection(name.clone()));
            }
        }
        for (k, v) in grid.sections.get("geometry").unwrap_or(&empty) {
            let g = &mut cfg.geometry;
            match k.as_str() {
                "K" => g.k = Some(parse(k, v)?),
                "n" => g.n = Some(positive(k, parse(k, v)?)?),
                "s" => g.s = Some(positive(k, parse(k, v)?)?),
                "r" => g.r = Some(positive(k, parse(k, v)?)?),
                "R" => g.big_r = Some(positive(k, parse(k, v)?)?),
                "y" => {
                    g.y = Some(parse_point(v).ok_or_else(|| ConfigError::BadValue {
                        key: k.clone(),
                        msg: format!("`{v}` is not a point `x1,x2`"),
                    })?)
                }
                "points" => {
                    g.points = v
                        .split(';')
                        .map(|p| {
                            parse_point(p).ok_or_else(|| ConfigError::BadValue {
                                key: k.clone(),
                                msg: format!("`{}` is not a point `x1,x2`", p.trim()),
                            })
                        })
                        .collect::<Result<_, _>>()?
                }
                _ => return Err(ConfigError::UnknownKey(format!("geometry.{k}"))),
            }
        }
        for (k, v) in grid.sections.get("solver").unwrap_or(&empty) {
            let o = &mut cfg.solver;
            match k.as_str() {
                "cg_tol" => o.cg_tol = positive(k, parse(k, v)?)?,
                "residual_check" => o.residual_check = positive(k, parse(k, v)?)?,
                "max_iterations" => o.max_iterations = parse(k, v)?,
                "max_states" => o.max_states = parse(k, v)?,
                "dense_threshold" => o.dense_threshold = parse(k, v)?,
                "csr_limit" => o.csr_limit = parse(k, v)?,
                "tail_tol" => o.tail_tol = positive(k, parse(k, v)?)?,
                "full_table_cap" => o.full_table_cap = parse(k, v)?,
                _ => return Err(ConfigError::UnknownKey(format!("solver.{k}"))),
            }
        }
        for (k, v) in grid.sections.get("mc").unwrap_or(&empty) {
            match k.as_str() {
                "samples" => cfg.mc.samples = Some(parse(k, v)?),
                "seed" => cfg.mc.seed = Some(parse(k, v)?),
                "cap" => cfg.mc.cap = Some(parse(k, v)?),
                _ => return Err(ConfigError::UnknownKey(format!("mc.{k}"))),
            }
        }
        for (k, v) in grid.sections.get("output").unwrap_or(&empty) {
            match k.as_str() {
                "out" => cfg.out = Some(PathBuf::from(v)),
                "workers" => cfg.workers = Some(parse(k, v)?),
                _ => return Err(ConfigError::UnknownKey(format!("output.{k}"))),
            }
        }
        Ok(cfg)
    }

    /// Geometric preconditions shared by every command.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.geometry;
        if let Some(k) = g.k {
            if k < 3 {
                return Err(ConfigError::Precondition(format!("K must be at least 3, got {k}")));
            }
            let quarter = k as f64 / 4.0;
            match (g.n, g.s) {
                (Some(n), Some(s)) if n + s >= quarter => {
                    return Err(ConfigError::Precondition(format!(
                        "n + s must be < K/4 (n + s = {}, K/4 = {quarter})",
                        n + s
                    )))
                }
                (Some(n), None) if n >= quarter => {
                    return Err(ConfigError::Precondition(format!("n must be < K/4 (n = {n}, K/4 = {quarter})")))
                }
                _ => {}
            }
            if let Some(big_r) = g.big_r {
                if big_r >= quarter {
                    return Err(ConfigError::Precondition(format!("R must be < K/4 (R = {big_r}, K/4 = {quarter})")));
                }
            }
        }
        if let (Some(r), Some(big_r)) = (g.r, g.big_r) {
            if r >= big_r {
                return Err(ConfigError::Precondition(format!("r must be < R (r = {r}, R = {big_r})")));
            }
        }
        if self.workers == Some(0) {
            return Err(ConfigError::Precondition("workers must be at least 1".into()));
        }
        Ok(())
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.command.is_empty() {
            writeln!(f, "command = {}", self.command)?;
        }
        if let Some(law) = &self.law {
            writeln!(f, "law = {law}")?;
        }
        let g = &self.geometry;
        writeln!(f, "\n[geometry]")?;
        if let Some(k) = g.k {
            writeln!(f, "K = {k}")?;
        }
        for (name, v) in [("n", g.n), ("s", g.s), ("r", g.r), ("R", g.big_r)] {
            if let Some(v) = v {
                writeln!(f, "{name} = {}", fmt_num(v))?;
            }
        }
        if !g.points.is_empty() {
            let pts: Vec<String> = g.points.iter().map(|p| format!("{},{}", p.x1, p.x2)).collect();
            writeln!(f, "points = {}", pts.join("; "))?;
        }
        if let Some(y) = g.y {
            writeln!(f, "y = {},{}", y.x1, y.x2)?;
        }
        let o = &self.solver;
        writeln!(f, "\n[solver]")?;
        writeln!(f, "cg_tol = {}", fmt_num(o.cg_tol))?;
        writeln!(f, "csr_limit = {}", o.csr_limit)?;
        writeln!(f, "dense_threshold = {}", o.dense_threshold)?;
        writeln!(f, "full_table_cap = {}", o.full_table_cap)?;
        writeln!(f, "max_iterations = {}", o.max_iterations)?;
        writeln!(f, "max_states = {}", o.max_states)?;
        writeln!(f, "residual_check = {}", fmt_num(o.residual_check))?;
        writeln!(f, "tail_tol = {}", fmt_num(o.tail_tol))?;
        let m = &self.mc;
        if m.samples.is_some() || m.seed.is_some() || m.cap.is_some() {
            writeln!(f, "\n[mc]")?;
            if let Some(v) = m.cap {
                writeln!(f, "cap = {v}")?;
            }
            if let Some(v) = m.samples {
                writeln!(f, "samples = {v}")?;
            }
            if let Some(v) = m.seed {
                writeln!(f, "seed = {v}")?;
            }
        }
        if self.out.is_some() || self.workers.is_some() {
            writeln!(f, "\n[output]")?;
            if let Some(p) = &self.out {
                writeln!(f, "out = {}", p.display())?;
            }
            if let Some(w) = self.workers {
                writeln!(f, "workers = {w}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "command = mc  gamblers\nlaw = power_law(1,64)\n[geometry]\nr = 5\nR = 25\npoints = 11,0; (-3,2)\ny = 1,1\n[mc]\nsamples = 100000\nseed = 7\n[solver]\ncg_tol = 1e-11\n";

    #[test]
    fn echo_is_stable() {
        let cfg = RunConfig::parse(TEXT).unwrap();
        assert_eq!(cfg.command, "mc gamblers");
        assert_eq!(cfg.geometry.points, vec![LatticePoint::new(11, 0), LatticePoint::new(-3, 2)]);
        assert_eq!(cfg.solver.cg_tol, 1e-11);
        let echoed = cfg.to_string();
        let again = RunConfig::parse(&echoed).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_string(), echoed);
    }

    #[test]
    fn preconditions_are_named() {
        let cfg = RunConfig::parse("command = solve annulus-stats\n[geometry]\nK = 32\nn = 6\ns = 3\n").unwrap();
        let e = cfg.validate().unwrap_err().to_string();
        assert!(e.contains("n + s must be < K/4"), "{e}");
        assert!(matches!(RunConfig::parse("bogus = 1\n"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(RunConfig::parse("[extra]\na = 1\n"), Err(ConfigError::UnknownSection(_))));
        assert!(matches!(RunConfig::parse("[geometry]\nn = -1\n"), Err(ConfigError::BadValue { .. })));
    }
}
