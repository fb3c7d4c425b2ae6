use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solver::{total, System};
use super::{Domain, ExactError, Walk};
use crate::geometry::{fundamental_box, Ambient, LatticePoint, Region};

/// `G_A(x, y)` for every pair of states, row-major.
#[derive(Debug, Clone)]
pub struct GreenTable {
    domain: Domain,
    values: Vec<f64>,
}

impl GreenTable {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Expected visits to `y` from `x` before leaving the domain; 0 if either
    /// point is outside it.
    pub fn get(&self, x: LatticePoint, y: LatticePoint) -> f64 {
        match (self.domain.index(x), self.domain.index(y)) {
            (Some(i), Some(j)) => self.values[i * self.domain.len() + j],
            _ => 0.0,
        }
    }

    pub fn row(&self, x: LatticePoint) -> Option<&[f64]> {
        let n = self.domain.len();
        self.domain.index(x).map(|i| &self.values[i * n..(i + 1) * n])
    }

    /// Largest `|G(x,y) - G(y,x)|`.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.domain.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.values[i * n + j] - self.values[j * n + i]).abs());
            }
        }
        worst
    }
}

/// The full Green table of a (small) domain.
pub fn green(walk: &Walk, domain: Domain) -> Result<GreenTable, ExactError> {
    let cap = walk.options().full_table_cap;
    if domain.len() > cap {
        return Err(ExactError::DimensionTooLarge { states: domain.len(), cap });
    }
    let sys = walk.system(domain)?;
    let n = sys.len();
    let values = if sys.uses_dense() {
        sys.dense_inverse()?
    } else {
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                sys.solve(&e)
            })
            .collect::<Result<_, _>>()?;
        // G is symmetric, so column j is row j.
        cols.concat()
    };
    Ok(GreenTable { domain: sys.domain().clone(), values })
}

/// `G_A(., y)`, which equals `G_A(y, .)` by symmetry.
pub fn green_column(sys: &System, y: LatticePoint) -> Result<Vec<f64>, ExactError> {
    sys.solve(&sys.unit(y)?)
}

/// `E^x T_{A^c}` for every state `x`.
pub fn exit_times(sys: &System) -> Result<Vec<f64>, ExactError> {
    sys.solve(&vec![1.0; sys.len()])
}

/// `E^x T_{A^c}` for the domain `region`.
pub fn expected_exit_time(walk: &Walk, region: &Region, x: LatticePoint) -> Result<f64, ExactError> {
    let sys = walk.system(Domain::from_region(walk.ambient(), region)?)?;
    let i = sys.domain().require(x)?;
    Ok(exit_times(&sys)?[i])
}

/// Absorption probabilities `P^x(T_target < T_forbidden)` on the transient set.
#[derive(Debug)]
pub struct HitTable {
    pub system: System,
    pub values: Vec<f64>,
    target: Region,
}

impl HitTable {
    pub fn get(&self, x: LatticePoint) -> f64 {
        let ambient = self.system.domain().ambient();
        match self.system.domain().index(x) {
            Some(i) => self.values[i],
            None if self.target.contains(ambient, ambient.canonical(x)) => 1.0,
            None => 0.0,
        }
    }
}

fn check_disjoint(ambient: Ambient, a: &Region, b: &Region) -> Result<(), ExactError> {
    let window = match ambient {
        Ambient::Torus(k) => fundamental_box(k),
        Ambient::Plane => match (a.bbox(), b.bbox()) {
            (Some(bb), _) | (None, Some(bb)) => bb,
            (None, None) => a.clone().union(b.clone()).cobounded_box().map(|bb| bb.expand(2)).ok_or_else(|| {
                ExactError::UnboundedDomain("target and forbidden sets leave an unbounded transient set".into())
            })?,
        },
    };
    match window.points().find(|p| a.contains(ambient, *p) && b.contains(ambient, *p)) {
        Some(p) => Err(ExactError::OverlappingAbsorbers(p)),
        None => Ok(()),
    }
}

/// `P^x(T_target < T_forbidden)` for every transient `x`.
pub fn hit_probabilities(walk: &Walk, target: &Region, forbidden: &Region) -> Result<HitTable, ExactError> {
    let ambient = walk.ambient();
    check_disjoint(ambient, target, forbidden)?;
    let absorbing = target.clone().union(forbidden.clone());
    let sys = walk.system(Domain::complement_of(ambient, &absorbing)?)?;
    let b = sys.boundary_rhs(&|p| if target.contains(ambient, p) { 1.0 } else { 0.0 });
    let values = sys.solve(&b)?;
    Ok(HitTable { system: sys, values, target: target.clone() })
}

/// `P^x(T_target < T_forbidden)`.
pub fn hit_before(walk: &Walk, target: &Region, forbidden: &Region, x: LatticePoint) -> Result<f64, ExactError> {
    Ok(hit_probabilities(walk, target, forbidden)?.get(x))
}

/// Law of the walk's position on first entry to an absorbing set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingDist {
    pub start: LatticePoint,
    /// `(y, H(x, y))`, sorted by `y`.
    pub masses: Vec<(LatticePoint, f64)>,
}

impl HittingDist {
    pub fn get(&self, y: LatticePoint) -> f64 {
        self.masses.binary_search_by(|(p, _)| p.cmp(&y)).map(|i| self.masses[i].1).unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        total(&self.masses.iter().map(|(_, w)| *w).collect::<Vec<_>>())
    }

    /// `P^x(S_{T_B} in A)` for a subset `A` of the absorbing set.
    pub fn mass_in(&self, ambient: Ambient, region: &Region) -> f64 {
        let w: Vec<f64> = self.masses.iter().filter(|(p, _)| region.contains(ambient, *p)).map(|(_, w)| *w).collect();
        total(&w)
    }
}

/// Hitting distribution by the last-exit decomposition
/// `H_B(x, y) = sum_z G_{B^c}(x, z) p(z, y)`.
pub fn hitting_distribution(walk: &Walk, absorbing: &Region, x: LatticePoint) -> Result<HittingDist, ExactError> {
    let ambient = walk.ambient();
    let start = ambient.canonical(x);
    if absorbing.contains(ambient, start) {
        return Ok(HittingDist { start, masses: vec![(start, 1.0)] });
    }
    let sys = walk.system(Domain::complement_of(ambient, absorbing)?)?;
    let g = green_column(&sys, start)?;
    let masses = sys.exit_mass(&g).into_iter().filter(|(_, w)| *w > 0.0).collect();
    Ok(HittingDist { start, masses })
}

/// `P^x(S_{T_B} = y)` for each `y`, one absorbing solve per target point.
pub fn hitting_distribution_by_absorption(
    walk: &Walk,
    absorbing: &Region,
    x: LatticePoint,
    ys: &[LatticePoint],
) -> Result<Vec<f64>, ExactError> {
    let ambient = walk.ambient();
    let sys = walk.system(Domain::complement_of(ambient, absorbing)?)?;
    let i = sys.domain().require(x)?;
    ys.par_iter()
        .map(|&y| {
            let y = ambient.canonical(y);
            let b = sys.boundary_rhs(&|p| if p == y { 1.0 } else { 0.0 });
            Ok(sys.solve(&b)?[i])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{power_law, srw};

    fn p(a: i64, b: i64) -> LatticePoint {
        LatticePoint::new(a, b)
    }

    #[test]
    fn unit_disc_oracles() {
        let walk = Walk::plane(&srw()).unwrap();
        let g = green(&walk, Domain::from_region(Ambient::Plane, &Region::disc(1.0)).unwrap()).unwrap();
        assert!((g.get(p(0, 0), p(0, 0)) - 4.0 / 3.0).abs() < 1e-14);
        assert!((g.get(p(0, 0), p(1, 0)) - g.get(p(1, 0), p(0, 0))).abs() < 1e-15);
        assert!(g.max_asymmetry() < 1e-14);
        assert_eq!(g.get(p(0, 0), p(2, 0)), 0.0);
        let t = expected_exit_time(&walk, &Region::disc(1.0), p(0, 0)).unwrap();
        assert!((t - 8.0 / 3.0).abs() < 1e-14);
        let row: f64 = g.row(p(0, 0)).unwrap().iter().sum();
        assert!((row - t).abs() < 1e-14);
        let q = hit_before(&walk, &Region::point(p(0, 0)), &Region::disc(1.0).complement(), p(1, 0)).unwrap();
        assert!((q - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unit_disc_exit_distribution() {
        let walk = Walk::plane(&srw()).unwrap();
        let outside = Region::disc(1.0).complement();
        let h = hitting_distribution(&walk, &outside, p(0, 0)).unwrap();
        assert_eq!(h.masses.len(), 8);
        assert!((h.total() - 1.0).abs() < 1e-14);
        let axis = h.get(p(2, 0));
        let diag = h.get(p(1, 1));
        for q in [p(-2, 0), p(0, 2), p(0, -2)] {
            assert!((h.get(q) - axis).abs() < 1e-15);
        }
        for q in [p(-1, 1), p(1, -1), p(-1, -1)] {
            assert!((h.get(q) - diag).abs() < 1e-15);
        }
        // From 0: one step to a neighbour, then each exit point is reached
        // with 1/4 per neighbour route; 4/3 expected neighbour visits in total.
        assert!((axis - 1.0 / 12.0).abs() < 1e-14);
        assert!((diag - 1.0 / 6.0).abs() < 1e-14);
        let ys: Vec<_> = h.masses.iter().map(|(y, _)| *y).collect();
        let by_solve = hitting_distribution_by_absorption(&walk, &outside, p(0, 0), &ys).unwrap();
        for ((_, a), b) in h.masses.iter().zip(&by_solve) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn overlapping_absorbers_rejected() {
        let walk = Walk::plane(&srw()).unwrap();
        let err = hit_before(&walk, &Region::disc(2.0), &Region::disc(1.0), p(5, 0));
        assert!(matches!(err, Err(ExactError::OverlappingAbsorbers(_))));
    }

    #[test]
    fn long_range_last_exit_matches_absorption() {
        let walk = Walk::plane(&power_law(1.0, 8).unwrap()).unwrap();
        let outside = Region::disc(4.0).complement();
        let h = hitting_distribution(&walk, &outside, p(1, 2)).unwrap();
        assert!((h.total() - 1.0).abs() < 1e-12);
        let ys: Vec<_> = h.masses.iter().step_by(17).map(|(y, _)| *y).collect();
        let by_solve = hitting_distribution_by_absorption(&walk, &outside, p(1, 2), &ys).unwrap();
        for (y, b) in ys.iter().zip(&by_solve) {
            assert!((h.get(*y) - b).abs() < 1e-12);
        }
    }
}
