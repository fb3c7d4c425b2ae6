use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{moment, LawError, StepLaw};
use crate::geometry::{project, LatticePoint};

/// The one-step kernel `p^_1` of the projected walk on `Z^2_K`.
///
/// The projected walk is translation invariant, so the kernel is stored as a
/// law on fundamental-domain offsets: `p^_1(x^, y^) = mass(pi_K(y - x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToralKernel {
    k: i64,
    offsets: Vec<(LatticePoint, f64)>,
    /// Mass of planar steps dropped by the copy-sum truncation.
    pub truncation_bias: f64,
    /// Truncation radius used for the copy sum (`inf` when nothing was dropped).
    pub radius: f64,
}

impl ToralKernel {
    pub fn side(&self) -> i64 {
        self.k
    }

    /// Projected offsets with their masses, sorted by offset.
    pub fn offsets(&self) -> &[(LatticePoint, f64)] {
        &self.offsets
    }

    pub fn mass(&self, offset: LatticePoint) -> f64 {
        let o = project(offset, self.k);
        self.offsets.binary_search_by(|(p, _)| p.cmp(&o)).map(|i| self.offsets[i].1).unwrap_or(0.0)
    }

    /// `p^_1(x^, y^)` for representatives `x`, `y`.
    pub fn prob(&self, x: LatticePoint, y: LatticePoint) -> f64 {
        self.mass(y - x)
    }

    /// The row `p^_1(x^, .)` as `(y^, mass)` pairs.
    pub fn row(&self, x: LatticePoint) -> impl Iterator<Item = (LatticePoint, f64)> + '_ {
        let k = self.k;
        self.offsets.iter().map(move |(o, w)| (project(x + *o, k), *w))
    }

    pub fn row_sum(&self) -> f64 {
        self.offsets.iter().map(|(_, w)| w).sum()
    }
}

/// Project a planar law onto `Z^2_K`.
///
/// Planar steps longer than `R_t = (C_M / tail_tol)^(1/M)` are dropped, which
/// by Markov's inequality loses at most `tail_tol` mass; laws whose support
/// fits inside `R_t` are projected exactly.
pub fn project_kernel(law: &StepLaw, k: i64, tail_tol: f64) -> Result<ToralKernel, LawError> {
    if k < 3 {
        return Err(LawError::BadParameter(format!("project_kernel needs K >= 3, got {k}")));
    }
    let m = law.moment_order();
    let c_m = moment(law, m);
    let r_t = if tail_tol > 0.0 { (c_m / tail_tol).powf(1.0 / m) } else { f64::INFINITY };
    let exact = r_t >= law.max_step();
    let mut acc: BTreeMap<LatticePoint, f64> = BTreeMap::new();
    let mut dropped = 0.0;
    for &(x, w) in law.support() {
        if exact || x.norm() <= r_t {
            *acc.entry(project(x, k)).or_insert(0.0) += w;
        } else {
            dropped += w;
        }
    }
    // Copy sums for a class and its negative add the same numbers in different
    // orders; averaging the pair makes the stored kernel exactly symmetric.
    let offsets = acc
        .iter()
        .map(|(o, w)| {
            let neg = acc.get(&project(-*o, k)).copied().unwrap_or(0.0);
            (*o, 0.5 * (w + neg))
        })
        .collect();
    Ok(ToralKernel {
        k,
        offsets,
        truncation_bias: if exact { 0.0 } else { dropped },
        radius: if exact { f64::INFINITY } else { r_t },
    })
}

/// `P(|X_1| > K - 2n)` and its Markov bound `C_M / (K - 2n)^M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeJumpProb {
    pub exact: f64,
    pub markov_bound: f64,
}

pub fn large_jump_prob(law: &StepLaw, k: i64, n: f64) -> Result<LargeJumpProb, LawError> {
    if !(n > 0.0 && 2.0 * n < k as f64 / 2.0) {
        return Err(LawError::BadParameter(format!("large_jump_prob needs 0 < 2n < K/2 (n = {n}, K = {k})")));
    }
    let far = k as f64 - 2.0 * n;
    let exact = law.support().iter().filter(|(x, _)| x.norm() > far).map(|(_, w)| w).sum();
    let m = law.moment_order();
    Ok(LargeJumpProb { exact, markov_bound: moment(law, m) / far.powf(m) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{power_law, srw};

    #[test]
    fn srw_projects_exactly() {
        let ker = project_kernel(&srw(), 9, 1e-12).unwrap();
        assert_eq!(ker.truncation_bias, 0.0);
        assert_eq!(ker.offsets(), srw().support());
        assert_eq!(ker.prob(LatticePoint::new(4, 0), LatticePoint::new(-4, 0)), 0.25);
    }

    #[test]
    fn power_law_rows_normalized() {
        let ker = project_kernel(&power_law(1.0, 64).unwrap(), 16, 1e-12).unwrap();
        assert!(ker.row_sum() >= 1.0 - 1e-12);
        assert!(ker.row_sum() + ker.truncation_bias <= 1.0 + 1e-12);
        assert!(ker.offsets().len() <= 256);
    }

    #[test]
    fn truncation_bias_bounded_by_tolerance() {
        let law = power_law(1.0, 64).unwrap();
        for tol in [1e-3, 1e-6, 1e-9] {
            let ker = project_kernel(&law, 16, tol).unwrap();
            assert!(ker.truncation_bias <= tol, "{tol}: {}", ker.truncation_bias);
            assert!((ker.row_sum() + ker.truncation_bias - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn large_jumps() {
        let srw = srw();
        assert_eq!(large_jump_prob(&srw, 20, 4.0).unwrap().exact, 0.0);
        let law = power_law(1.0, 64).unwrap();
        let lj = large_jump_prob(&law, 40, 5.0).unwrap();
        assert!(lj.exact > 0.0 && lj.exact <= lj.markov_bound);
        let mut last = f64::INFINITY;
        for k in [24, 32, 48, 64, 96, 128, 200] {
            let e = large_jump_prob(&law, k, 5.0).unwrap().exact;
            assert!(e <= last);
            last = e;
        }
        assert_eq!(last, 0.0);
    }
}
