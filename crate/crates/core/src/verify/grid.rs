//! Sweep grids.
//!
//! A grid file is flat `key = value` text. Keys before the first `[check-id]`
//! header apply to every check; keys inside a section apply to that check and
//! override the global ones. `#` starts a comment.
//!
//! ```text
//! seed = 7
//!
//! [escape-bounds]
//! laws = srw; lazy_srw(0.3)
//! n = 8, 16, 32
//! ```
//!
//! List values are comma-separated, except `laws` and `points`, which are
//! separated by `;` because their items contain commas. `pairs` holds
//! `r:R` items.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::LatticePoint;
use crate::law::LawSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("grid key `{key}` in [{section}]: {msg}")]
    BadValue { section: String, key: String, msg: String },
    #[error("grid section [{section}] is missing required key `{key}`")]
    Missing { section: String, key: String },
}

/// Raw key/value parameters of one section.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Params {
    section: String,
    values: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepGrid {
    pub globals: BTreeMap<String, String>,
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl SweepGrid {
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let mut grid = SweepGrid::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |msg: String| GridError::Syntax { line: i + 1, msg };
            if let Some(rest) = line.strip_prefix('[') {
                let name =
                    rest.strip_suffix(']').ok_or_else(|| syntax("section header must end with `]`".into()))?.trim();
                if !valid_key(name) {
                    return Err(syntax(format!("bad section name `{name}`")));
                }
                if grid.sections.contains_key(name) {
                    return Err(syntax(format!("section [{name}] appears twice")));
                }
                grid.sections.insert(name.to_string(), BTreeMap::new());
                current = Some(name.to_string());
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| syntax("expected `key = value`".into()))?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(syntax(format!("bad key `{k}`")));
            }
            if v.is_empty() {
                return Err(syntax(format!("key `{k}` has no value")));
            }
            let map = match &current {
                Some(s) => grid.sections.get_mut(s).expect("section exists"),
                None => &mut grid.globals,
            };
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(syntax(format!("key `{k}` appears twice")));
            }
        }
        Ok(grid)
    }

    /// Parameters of `check`: its section over the globals, or `None` without a section.
    pub fn params(&self, check: &str) -> Option<Params> {
        let sec = self.sections.get(check)?;
        let mut values = self.globals.clone();
        values.extend(sec.iter().map(|(k, v)| (k.clone(), v.clone())));
        Some(Params { section: check.to_string(), values })
    }

    /// SHA-256 of the canonical rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_string().as_bytes()))
    }
}

impl fmt::Display for SweepGrid {
    /// Canonical form: globals, then sections, keys sorted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.globals {
            writeln!(f, "{k} = {v}")?;
        }
        for (name, sec) in &self.sections {
            writeln!(f, "\n[{name}]")?;
            for (k, v) in sec {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}

impl Params {
    pub fn new(section: &str, values: BTreeMap<String, String>) -> Self {
        Self { section: section.to_string(), values }
    }

    pub fn section(&self) -> &str {
        &self.section
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    fn raw(&self, key: &str) -> Result<&str, GridError> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| GridError::Missing { section: self.section.clone(), key: key.to_string() })
    }

    fn bad(&self, key: &str, msg: impl Into<String>) -> GridError {
        GridError::BadValue { section: self.section.clone(), key: key.to_string(), msg: msg.into() }
    }

    fn items<'a>(&self, key: &str, v: &'a str, sep: char) -> Result<Vec<&'a str>, GridError> {
        let items: Vec<&str> = v.split(sep).map(str::trim).collect();
        if items.iter().any(|s| s.is_empty()) {
            return Err(self.bad(key, "empty list item"));
        }
        Ok(items)
    }

    pub fn laws(&self) -> Result<Vec<LawSpec>, GridError> {
        let v = self.raw("laws")?;
        self.items("laws", v, ';')?
            .into_iter()
            .map(|s| s.parse::<LawSpec>().map_err(|e| self.bad("laws", e.to_string())))
            .collect()
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>, GridError> {
        let v = self.raw(key)?;
        self.items(key, v, ',')?
            .into_iter()
            .map(|s| match s.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(self.bad(key, format!("`{s}` is not a finite number"))),
            })
            .collect()
    }

    pub fn ints(&self, key: &str) -> Result<Vec<i64>, GridError> {
        let v = self.raw(key)?;
        self.items(key, v, ',')?
            .into_iter()
            .map(|s| s.parse::<i64>().map_err(|_| self.bad(key, format!("`{s}` is not an integer"))))
            .collect()
    }

    pub fn float(&self, key: &str) -> Result<f64, GridError> {
        match self.floats(key)?.as_slice() {
            [x] => Ok(*x),
            _ => Err(self.bad(key, "expected a single number")),
        }
    }

    pub fn float_or(&self, key: &str, default: f64) -> Result<f64, GridError> {
        if self.has(key) {
            self.float(key)
        } else {
            Ok(default)
        }
    }

    pub fn int(&self, key: &str) -> Result<i64, GridError> {
        match self.ints(key)?.as_slice() {
            [x] => Ok(*x),
            _ => Err(self.bad(key, "expected a single integer")),
        }
    }

    pub fn int_or(&self, key: &str, default: i64) -> Result<i64, GridError> {
        if self.has(key) {
            self.int(key)
        } else {
            Ok(default)
        }
    }

    /// `r:R` pairs.
    pub fn pairs(&self, key: &str) -> Result<Vec<(f64, f64)>, GridError> {
        let v = self.raw(key)?;
        self.items(key, v, ',')?
            .into_iter()
            .map(|s| {
                let (a, b) = s.split_once(':').ok_or_else(|| self.bad(key, format!("`{s}` is not `r:R`")))?;
                let parse = |t: &str| t.trim().parse::<f64>().ok().filter(|x| x.is_finite());
                match (parse(a), parse(b)) {
                    (Some(a), Some(b)) => Ok((a, b)),
                    _ => Err(self.bad(key, format!("`{s}` is not `r:R`"))),
                }
            })
            .collect()
    }

    pub fn points(&self, key: &str) -> Result<Vec<LatticePoint>, GridError> {
        let v = self.raw(key)?;
        self.items(key, v, ';')?
            .into_iter()
            .map(|s| parse_point(s).ok_or_else(|| self.bad(key, format!("`{s}` is not a point `x1,x2`"))))
            .collect()
    }
}

/// `x1,x2` with optional parentheses.
pub fn parse_point(s: &str) -> Option<LatticePoint> {
    let s = s.trim();
    let s = s.strip_prefix('(').and_then(|t| t.strip_suffix(')')).unwrap_or(s);
    let (a, b) = s.split_once(',')?;
    Some(LatticePoint::new(a.trim().parse().ok()?, b.trim().parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "seed = 7  # global\nn = 1\n\n[escape-bounds]\nlaws = srw; power_law(1,64)\nn = 8, 16\n\n[gamblers-ruin]\npairs = 8:64, 16:128\npoints = 3,0; (5,-1)\n";

    #[test]
    fn sections_override_globals() {
        let g = SweepGrid::parse(TEXT).unwrap();
        let p = g.params("escape-bounds").unwrap();
        assert_eq!(p.floats("n").unwrap(), vec![8.0, 16.0]);
        assert_eq!(p.int("seed").unwrap(), 7);
        assert_eq!(p.laws().unwrap().len(), 2);
        let q = g.params("gamblers-ruin").unwrap();
        assert_eq!(q.floats("n").unwrap(), vec![1.0]);
        assert_eq!(q.pairs("pairs").unwrap(), vec![(8.0, 64.0), (16.0, 128.0)]);
        assert_eq!(q.points("points").unwrap(), vec![LatticePoint::new(3, 0), LatticePoint::new(5, -1)]);
        assert!(g.params("local-time").is_none());
    }

    #[test]
    fn canonical_form_round_trips() {
        let g = SweepGrid::parse(TEXT).unwrap();
        let again = SweepGrid::parse(&g.to_string()).unwrap();
        assert_eq!(g, again);
        assert_eq!(g.hash(), again.hash());
        assert_eq!(g.hash().len(), 64);
    }

    #[test]
    fn errors_name_the_line() {
        assert!(matches!(SweepGrid::parse("a = 1\nb\n"), Err(GridError::Syntax { line: 2, .. })));
        assert!(matches!(SweepGrid::parse("[x\n"), Err(GridError::Syntax { line: 1, .. })));
        assert!(matches!(SweepGrid::parse("a = 1\na = 2\n"), Err(GridError::Syntax { line: 2, .. })));
        let g = SweepGrid::parse("[c]\nn = 1, x\n").unwrap();
        assert!(matches!(g.params("c").unwrap().floats("n"), Err(GridError::BadValue { .. })));
        assert!(matches!(g.params("c").unwrap().floats("s"), Err(GridError::Missing { .. })));
    }
}
