//! Symmetric step distributions and their statistics.

mod file;
mod kernel;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{project, LatticePoint};

pub use file::{format_law_file, parse_law_file, LawFileError};
pub use kernel::{large_jump_prob, project_kernel, LargeJumpProb, ToralKernel};

/// Tolerance on `sum of masses == 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Absolute tolerance on `Gamma = cI` (off-diagonal and `|Gamma_11 - Gamma_22|`).
pub const ISOTROPY_TOL: f64 = 1e-9;
/// Relative tolerance on `mass(x) == mass(-x)`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Torus side used for the aperiodicity certificate.
pub const APERIODICITY_TORUS: i64 = 5;
/// Largest kernel power tried by the aperiodicity certificate.
pub const APERIODICITY_MAX_POWER: usize = 25;

/// Exponent offset `delta_0` in the heavy-tailed builtin, `mass ~ |x|^-(M + 2 + delta_0)`.
pub const POWER_LAW_DELTA0: f64 = 0.1;
/// Holding mass at the origin in the heavy-tailed builtin.
pub const POWER_LAW_HOLD: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("step law has empty support")]
    EmptySupport,
    #[error("step law has a non-positive or non-finite mass {mass} at {point}")]
    BadMass { point: LatticePoint, mass: f64 },
    #[error("point {0} appears twice in the support")]
    DuplicatePoint(LatticePoint),
    #[error("masses sum to {0}, not 1 (the walk's step law must be a probability distribution)")]
    BadNormalization(f64),
    #[error("asymmetric law: mass({point}) = {mass} but mass(-{point}) = {neg_mass} (the walk must be symmetric)")]
    AsymmetricLaw { point: LatticePoint, mass: f64, neg_mass: f64 },
    #[error(
        "anisotropic covariance [[{g11}, {g12}], [{g12}, {g22}]] (the covariance of X_1 must be a scalar times the identity)"
    )]
    AnisotropicCovariance { g11: f64, g12: f64, g22: f64 },
    #[error("no power P^t, t <= {max_power}, of the kernel projected to Z^2_{torus} is strictly positive (the walk must be strongly aperiodic)")]
    NotAperiodic { torus: i64, max_power: usize },
    #[error("parameter out of range: {0}")]
    BadParameter(String),
    #[error("unknown law `{0}` (expected srw, lazy_srw(eps), power_law(beta,r_max) or a law file path)")]
    UnknownLaw(String),
}

/// A finitely supported step law `p_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLaw {
    name: String,
    /// Exponent `beta` in the moment condition `M = 4 + 2 beta`.
    beta: f64,
    support: Vec<(LatticePoint, f64)>,
}

impl StepLaw {
    /// Build a law from raw support. Points are sorted; nothing else is checked.
    pub fn from_support(name: impl Into<String>, beta: f64, mut support: Vec<(LatticePoint, f64)>) -> Self {
        support.sort_by_key(|a| a.0);
        Self { name: name.into(), beta, support }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `M = 4 + 2 beta`.
    pub fn moment_order(&self) -> f64 {
        4.0 + 2.0 * self.beta
    }

    pub fn support(&self) -> &[(LatticePoint, f64)] {
        &self.support
    }

    pub fn mass(&self, x: LatticePoint) -> f64 {
        self.support.binary_search_by(|(p, _)| p.cmp(&x)).map(|i| self.support[i].1).unwrap_or(0.0)
    }

    /// Largest step length in the support.
    pub fn max_step(&self) -> f64 {
        self.support.iter().map(|(p, _)| p.norm()).fold(0.0, f64::max)
    }

    /// Largest `|x_1|` or `|x_2|` in the support.
    pub fn max_coord(&self) -> i64 {
        self.support.iter().map(|(p, _)| p.x1.abs().max(p.x2.abs())).max().unwrap_or(0)
    }

    /// Whether no step can be large (`|X| > K - 2n`) for this geometry.
    pub fn cannot_wrap(&self, k: i64, n: f64) -> bool {
        self.max_step() < k as f64 - 2.0 * n
    }
}

/// Statistics of a validated law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawStats {
    /// `Gamma = c I`.
    pub c: f64,
    /// `gamma^2 = tr Gamma = E|X_1|^2`.
    pub gamma_sq: f64,
    /// `pi_Gamma = 2 pi sqrt(det Gamma)`.
    pub pi_gamma: f64,
    pub beta: f64,
    /// `M = 4 + 2 beta`.
    pub m: f64,
    /// `C_M = E|X_1|^M`.
    pub moment_m: f64,
    pub max_step: f64,
    pub support_size: usize,
}

/// `E|X_1|^m`.
pub fn moment(law: &StepLaw, m: f64) -> f64 {
    law.support.iter().map(|(x, w)| if m == 0.0 { *w } else { x.norm().powf(m) * w }).sum()
}

fn covariance(law: &StepLaw) -> (f64, f64, f64) {
    let mut g = (0.0, 0.0, 0.0);
    for (x, w) in &law.support {
        let (a, b) = (x.x1 as f64, x.x2 as f64);
        g.0 += a * a * w;
        g.1 += a * b * w;
        g.2 += b * b * w;
    }
    g
}

/// Check the standing assumptions and compute the law's statistics.
pub fn validate(law: &StepLaw) -> Result<LawStats, LawError> {
    if law.support.is_empty() {
        return Err(LawError::EmptySupport);
    }
    for w in law.support.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(LawError::DuplicatePoint(w[0].0));
        }
    }
    for &(point, mass) in &law.support {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(LawError::BadMass { point, mass });
        }
    }
    let total: f64 = law.support.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(LawError::BadNormalization(total));
    }
    for &(point, mass) in &law.support {
        let neg_mass = law.mass(-point);
        if (mass - neg_mass).abs() > SYMMETRY_TOL * mass.max(neg_mass) {
            return Err(LawError::AsymmetricLaw { point, mass, neg_mass });
        }
    }
    if !(law.beta.is_finite() && law.beta > 0.0) {
        return Err(LawError::BadParameter(format!("beta must be > 0, got {}", law.beta)));
    }
    let (g11, g12, g22) = covariance(law);
    if g12.abs() > ISOTROPY_TOL || (g11 - g22).abs() > ISOTROPY_TOL || g11 <= 0.0 {
        return Err(LawError::AnisotropicCovariance { g11, g12, g22 });
    }
    if !aperiodicity_certificate(law, APERIODICITY_TORUS, APERIODICITY_MAX_POWER) {
        return Err(LawError::NotAperiodic { torus: APERIODICITY_TORUS, max_power: APERIODICITY_MAX_POWER });
    }
    let c = 0.5 * (g11 + g22);
    let m = law.moment_order();
    Ok(LawStats {
        c,
        gamma_sq: 2.0 * c,
        pi_gamma: 2.0 * PI * c,
        beta: law.beta,
        m,
        moment_m: moment(law, m),
        max_step: law.max_step(),
        support_size: law.support.len(),
    })
}

/// Whether some power `P^t`, `t <= max_power`, of the kernel projected to
/// `Z^2_k` has all entries positive.
pub fn aperiodicity_certificate(law: &StepLaw, k: i64, max_power: usize) -> bool {
    let n = (k * k) as usize;
    let idx = |p: LatticePoint| {
        let q = project(p, k);
        let h = k / 2;
        ((q.x2 + h) * k + (q.x1 + h)) as usize
    };
    let mut step = vec![0.0; n];
    for (x, w) in &law.support {
        step[idx(*x)] += w;
    }
    // The projected walk is translation invariant, so P^t is determined by its
    // first row, the law of S_t from the origin.
    let cells: Vec<LatticePoint> = crate::geometry::fundamental_box(k).points().collect();
    let mut dist = vec![0.0; n];
    dist[idx(LatticePoint::ORIGIN)] = 1.0;
    for _ in 0..max_power {
        let mut next = vec![0.0; n];
        for (i, &from) in cells.iter().enumerate() {
            if dist[i] == 0.0 {
                continue;
            }
            for (j, &off) in cells.iter().enumerate() {
                if step[j] > 0.0 {
                    next[idx(from + off)] += dist[i] * step[j];
                }
            }
        }
        dist = next;
        if dist.iter().all(|&v| v > 0.0) {
            return true;
        }
    }
    false
}

/// Simple random walk: `+-e_1, +-e_2` with mass 1/4 each.
pub fn srw() -> StepLaw {
    lazy_srw(0.0).expect("eps = 0 is valid").renamed("srw")
}

/// Stays put with probability `eps`, otherwise a simple random walk step.
pub fn lazy_srw(eps: f64) -> Result<StepLaw, LawError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(LawError::BadParameter(format!("lazy_srw needs 0 <= eps < 1, got {eps}")));
    }
    let q = (1.0 - eps) / 4.0;
    let mut support: Vec<(LatticePoint, f64)> =
        [(1, 0), (-1, 0), (0, 1), (0, -1)].into_iter().map(|p| (LatticePoint::from(p), q)).collect();
    if eps > 0.0 {
        support.push((LatticePoint::ORIGIN, eps));
    }
    Ok(StepLaw::from_support(format!("lazy_srw({eps})"), 1.0, support))
}

/// Heavy-tailed law with `mass(x) ~ |x|^-(4 + 2 beta + 2 + delta_0)` on
/// `0 < |x| <= r_max`, plus a holding mass at the origin.
pub fn power_law(beta: f64, r_max: i64) -> Result<StepLaw, LawError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(LawError::BadParameter(format!("power_law needs beta > 0, got {beta}")));
    }
    if r_max < 2 {
        return Err(LawError::BadParameter(format!("power_law needs r_max >= 2, got {r_max}")));
    }
    let alpha = 4.0 + 2.0 * beta + 2.0 + POWER_LAW_DELTA0;
    let r2 = r_max * r_max;
    // Masses depend on |x| only, so the weights are symmetric and isotropic by
    // construction; summing over sorted points keeps the result reproducible.
    let mut raw: Vec<(LatticePoint, f64)> = Vec::new();
    for x2 in -r_max..=r_max {
        for x1 in -r_max..=r_max {
            let p = LatticePoint::new(x1, x2);
            let d2 = p.norm_sq();
            if d2 > 0 && d2 <= r2 {
                raw.push((p, (d2 as f64).powf(-alpha / 2.0)));
            }
        }
    }
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    let scale = (1.0 - POWER_LAW_HOLD) / total;
    let mut support: Vec<_> = raw.into_iter().map(|(p, w)| (p, w * scale)).collect();
    support.push((LatticePoint::ORIGIN, POWER_LAW_HOLD));
    Ok(StepLaw::from_support(format!("power_law({beta},{r_max})"), beta, support))
}

impl StepLaw {
    fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    /// Mass grouped by step length, for display.
    pub fn radial_profile(&self) -> BTreeMap<i64, f64> {
        let mut out = BTreeMap::new();
        for (x, w) in &self.support {
            *out.entry(x.norm_sq()).or_insert(0.0) += w;
        }
        out
    }
}

/// A law named on the command line or in a grid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LawSpec {
    Srw,
    LazySrw(f64),
    PowerLaw { beta: f64, r_max: i64 },
    File(String),
}

impl LawSpec {
    pub fn build(&self) -> Result<StepLaw, LawError> {
        match self {
            LawSpec::Srw => Ok(srw()),
            LawSpec::LazySrw(eps) => lazy_srw(*eps),
            LawSpec::PowerLaw { beta, r_max } => power_law(*beta, *r_max),
            LawSpec::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| LawError::BadParameter(format!("cannot read law file {path}: {e}")))?;
                parse_law_file(&text).map_err(|e| LawError::BadParameter(format!("{path}: {e}")))
            }
        }
    }

    pub fn builtins() -> Vec<LawSpec> {
        vec![LawSpec::Srw, LawSpec::LazySrw(0.3), LawSpec::PowerLaw { beta: 1.0, r_max: 64 }]
    }
}

impl fmt::Display for LawSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawSpec::Srw => write!(f, "srw"),
            LawSpec::LazySrw(e) => write!(f, "lazy_srw({e})"),
            LawSpec::PowerLaw { beta, r_max } => write!(f, "power_law({beta},{r_max})"),
            LawSpec::File(p) => write!(f, "file:{p}"),
        }
    }
}

fn parse_args(s: &str, name: &str) -> Option<Vec<String>> {
    let rest = s.strip_prefix(name)?.trim();
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(|a| a.trim().to_string()).collect())
}

impl FromStr for LawSpec {
    type Err = LawError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || LawError::UnknownLaw(s.to_string());
        if s == "srw" {
            return Ok(LawSpec::Srw);
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(LawSpec::File(path.to_string()));
        }
        if let Some(args) = parse_args(s, "lazy_srw") {
            let [eps] = args.as_slice() else { return Err(bad()) };
            let eps: f64 = eps.parse().map_err(|_| bad())?;
            return Ok(LawSpec::LazySrw(eps));
        }
        if let Some(args) = parse_args(s, "power_law") {
            let [beta, r_max] = args.as_slice() else { return Err(bad()) };
            let beta: f64 = beta.parse().map_err(|_| bad())?;
            let r_max: i64 = r_max.parse().map_err(|_| bad())?;
            return Ok(LawSpec::PowerLaw { beta, r_max });
        }
        if s.ends_with(".law") || s.contains('/') {
            return Ok(LawSpec::File(s.to_string()));
        }
        Err(bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn srw_stats() {
        let s = validate(&srw()).unwrap();
        assert_eq!(s.c, 0.5);
        assert_eq!(s.gamma_sq, 1.0);
        assert!((s.pi_gamma - PI).abs() < 1e-15);
        assert_eq!(srw().support().len(), 4);
        assert!(srw().support().iter().all(|(_, w)| *w == 0.25));
    }

    #[test]
    fn lazy_stats() {
        let s = validate(&lazy_srw(0.3).unwrap()).unwrap();
        // 4 unit steps of mass 0.7/4 each.
        assert!((s.gamma_sq - 0.7).abs() < 1e-15);
        assert_eq!(lazy_srw(0.0).unwrap().support(), srw().support());
        assert!(lazy_srw(1.0).is_err());
        assert!(lazy_srw(-0.1).is_err());
    }

    #[test]
    fn moments() {
        assert_eq!(moment(&srw(), 2.0), 1.0);
        assert_eq!(moment(&srw(), 0.0), 1.0);
        assert!((moment(&lazy_srw(0.5).unwrap(), 4.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn power_law_validates() {
        let law = power_law(1.0, 64).unwrap();
        let s = validate(&law).unwrap();
        assert_eq!(s.m, 6.0);
        assert!(s.moment_m.is_finite() && s.moment_m > 0.0);
        assert!(s.max_step <= 64.0 && s.max_step > 63.0);
        assert!(power_law(0.0, 64).is_err());
        assert!(power_law(1.0, 1).is_err());
    }

    #[test]
    fn asymmetric_rejected() {
        let law = StepLaw::from_support(
            "skew",
            1.0,
            vec![
                (LatticePoint::new(1, 0), 0.3),
                (LatticePoint::new(-1, 0), 0.2),
                (LatticePoint::new(0, 1), 0.25),
                (LatticePoint::new(0, -1), 0.25),
            ],
        );
        assert!(matches!(validate(&law), Err(LawError::AsymmetricLaw { .. })));
    }

    #[test]
    fn anisotropic_rejected() {
        let law = StepLaw::from_support(
            "stretched",
            1.0,
            vec![
                (LatticePoint::new(2, 0), 0.25),
                (LatticePoint::new(-2, 0), 0.25),
                (LatticePoint::new(0, 1), 0.25),
                (LatticePoint::new(0, -1), 0.25),
            ],
        );
        assert!(matches!(validate(&law), Err(LawError::AnisotropicCovariance { .. })));
    }

    #[test]
    fn periodic_on_small_torus_rejected() {
        // Steps of length 5 vanish on Z^2_5.
        let law = StepLaw::from_support(
            "fives",
            1.0,
            [(5, 0), (-5, 0), (0, 5), (0, -5)].into_iter().map(|p| (LatticePoint::from(p), 0.25)).collect(),
        );
        assert!(matches!(validate(&law), Err(LawError::NotAperiodic { .. })));
    }

    #[test]
    fn normalization_rejected() {
        let law = StepLaw::from_support(
            "heavy",
            1.0,
            [(1, 0), (-1, 0), (0, 1), (0, -1)].into_iter().map(|p| (LatticePoint::from(p), 0.3)).collect(),
        );
        assert!(matches!(validate(&law), Err(LawError::BadNormalization(_))));
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("srw".parse::<LawSpec>().unwrap(), LawSpec::Srw);
        assert_eq!("lazy_srw(0.3)".parse::<LawSpec>().unwrap(), LawSpec::LazySrw(0.3));
        assert_eq!("power_law(1, 64)".parse::<LawSpec>().unwrap(), LawSpec::PowerLaw { beta: 1.0, r_max: 64 });
        assert!("levy".parse::<LawSpec>().is_err());
        for spec in LawSpec::builtins() {
            assert_eq!(spec.to_string().parse::<LawSpec>().unwrap(), spec);
            validate(&spec.build().unwrap()).unwrap();
        }
    }
}
