//! The disc / annulus / outside partition, external Green's functions and
//! entrance times.
//!
//! With `A = D(0,n)`, `C` the annulus of width `s` and `B` everything beyond
//! `D(0,n+s)`:
//! - `v(x) = P^x(T_B < T_C)` on `A` (jumping outward over the annulus),
//! - `u(y) = P^y(T_A < T_C)` on `B` (jumping inward over it),
//! - `rho(x)` on `A`: reach `B` and then `A` again, all before `C`,
//! - `phi(y)` on `B`: reach `A` and then `B` again, all before `C`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::green::exit_times;
use super::{Domain, ExactError, System, Walk};
use crate::geometry::{Ambient, LatticePoint, Region};

fn annulus_regions(ambient: Ambient, n: f64, s: f64) -> Result<(Region, Region, Region), ExactError> {
    if !(s > 0.0 && s <= n) {
        return Err(ExactError::BadParameter(format!("annulus needs 0 < s <= n (n = {n}, s = {s})")));
    }
    let annulus = match ambient {
        Ambient::Torus(k) => Region::torus_annulus(n, s, k)?,
        Ambient::Plane => Region::annulus(n, s),
    };
    Ok((Region::disc(n), annulus, Region::disc(n + s).complement()))
}

/// The outward jump probabilities `v` on `A = D(0,n)`.
fn outward(walk: &Walk, n: f64, s: f64) -> Result<(System, Vec<f64>), ExactError> {
    let ambient = walk.ambient();
    let (disc, _, outside) = annulus_regions(ambient, n, s)?;
    let sys = walk.system(Domain::from_region(ambient, &disc)?)?;
    let b = sys.boundary_rhs(&|p| if outside.contains(ambient, p) { 1.0 } else { 0.0 });
    let v = sys.solve(&b)?;
    Ok((sys, v))
}

fn sup_over(sys: &System, values: &[f64], radius: f64) -> f64 {
    let ambient = sys.domain().ambient();
    sys.domain()
        .states()
        .iter()
        .zip(values)
        .filter(|(p, _)| ambient.norm(**p) <= radius)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max)
}

/// `psi = sup_{x in D(0,n/2)} P^x(T_B < T_C)` and the same supremum over all of `D(0,n)`.
pub fn annulus_psi(walk: &Walk, n: f64, s: f64) -> Result<(f64, f64), ExactError> {
    let (sys, v) = outward(walk, n, s)?;
    Ok((sup_over(&sys, &v, n / 2.0), v.iter().cloned().fold(0.0, f64::max)))
}

/// Summary of the partition quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusStats {
    pub k: i64,
    pub n: f64,
    pub s: f64,
    /// Supremum of `v` over `D(0,n/2)`.
    pub psi: f64,
    /// Supremum of `v` over `D(0,n)`.
    pub psi_disc: f64,
    /// Supremum of `u` over `B`.
    pub sigma: f64,
    /// Supremum of `rho` over `D(0,n/2)`.
    pub rho_half: f64,
    pub rho_max: f64,
    pub phi_max: f64,
    /// `(x, rho(x))` on `A`.
    pub rho: Vec<(LatticePoint, f64)>,
    /// `(y, phi(y))` on `B`.
    pub phi: Vec<(LatticePoint, f64)>,
}

/// Solved systems and per-state tables of the partition.
#[derive(Debug)]
pub struct AnnulusTables {
    pub k: i64,
    pub n: f64,
    pub s: f64,
    /// System on `A`.
    pub disc: System,
    /// System on `B`.
    pub outer: System,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
}

impl AnnulusTables {
    pub fn new(walk: &Walk, n: f64, s: f64) -> Result<Self, ExactError> {
        let ambient = walk.ambient();
        let Ambient::Torus(k) = ambient else {
            return Err(ExactError::UnboundedDomain(
                "the outer region of the partition is unbounded on the plane; use a torus".into(),
            ));
        };
        let (disc, _, outside) = annulus_regions(ambient, n, s)?;
        let (disc_sys, v) = outward(walk, n, s)?;
        let outer = walk.system(Domain::from_region(ambient, &outside)?)?;
        let b = outer.boundary_rhs(&|p| if disc.contains(ambient, p) { 1.0 } else { 0.0 });
        let u = outer.solve(&b)?;
        // Payoffs after the first crossing: from B the walk must still reach
        // A before C (probability u), from A it must reach B (probability v).
        let rho_rhs = disc_sys.boundary_rhs(&|p| outer.domain().index(p).map_or(0.0, |j| u[j]));
        let rho = disc_sys.solve(&rho_rhs)?;
        let phi_rhs = outer.boundary_rhs(&|p| disc_sys.domain().index(p).map_or(0.0, |i| v[i]));
        let phi = outer.solve(&phi_rhs)?;
        Ok(Self { k, n, s, disc: disc_sys, outer, v, u, rho, phi })
    }

    pub fn stats(&self) -> AnnulusStats {
        let max = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
        let pair = |sys: &System, v: &[f64]| sys.domain().states().iter().cloned().zip(v.iter().cloned()).collect();
        AnnulusStats {
            k: self.k,
            n: self.n,
            s: self.s,
            psi: sup_over(&self.disc, &self.v, self.n / 2.0),
            psi_disc: max(&self.v),
            sigma: max(&self.u),
            rho_half: sup_over(&self.disc, &self.rho, self.n / 2.0),
            rho_max: max(&self.rho),
            phi_max: max(&self.phi),
            rho: pair(&self.disc, &self.rho),
            phi: pair(&self.outer, &self.phi),
        }
    }

    pub fn v_at(&self, x: LatticePoint) -> Option<f64> {
        self.disc.domain().index(x).map(|i| self.v[i])
    }

    pub fn u_at(&self, y: LatticePoint) -> Option<f64> {
        self.outer.domain().index(y).map(|i| self.u[i])
    }

    pub fn rho_at(&self, x: LatticePoint) -> Option<f64> {
        self.disc.domain().index(x).map(|i| self.rho[i])
    }

    pub fn phi_at(&self, y: LatticePoint) -> Option<f64> {
        self.outer.domain().index(y).map(|i| self.phi[i])
    }
}

/// `psi, sigma, rho, phi` for `(K, n, s)`.
pub fn annulus_stats(walk: &Walk, n: f64, s: f64) -> Result<AnnulusStats, ExactError> {
    Ok(AnnulusTables::new(walk, n, s)?.stats())
}

/// `G_{D(0,n)^c}(x, x)` on the torus for each `x`.
pub fn external_green(walk: &Walk, n: f64, xs: &[LatticePoint]) -> Result<Vec<f64>, ExactError> {
    let ambient = walk.ambient();
    let Ambient::Torus(k) = ambient else {
        return Err(ExactError::UnboundedDomain("planar external Green's functions need an infinite domain".into()));
    };
    let disc = Region::torus_disc(n, k)?;
    let sys = walk.system(Domain::complement_of(ambient, &disc)?)?;
    xs.par_iter()
        .map(|&x| {
            let i = sys.domain().require(x)?;
            Ok(sys.solve(&sys.unit(x)?)?[i])
        })
        .collect()
}

fn entrance_domain(walk: &Walk, target: &Region, outer_cap: Option<&Region>) -> Result<Domain, ExactError> {
    let ambient = walk.ambient();
    match (ambient, outer_cap) {
        (Ambient::Plane, None) => Err(ExactError::MissingOuterCap),
        (_, Some(cap)) => Domain::complement_of(ambient, &target.clone().union(cap.clone().complement())),
        (Ambient::Torus(_), None) => Domain::complement_of(ambient, target),
    }
}

/// `E^y[T_target]` on the torus, or `E^y[T_target ^ T_{cap^c}]` with an outer cap,
/// for every transient state.
pub fn entrance_times(
    walk: &Walk,
    target: &Region,
    outer_cap: Option<&Region>,
) -> Result<(System, Vec<f64>), ExactError> {
    let sys = walk.system(entrance_domain(walk, target, outer_cap)?)?;
    let t = exit_times(&sys)?;
    Ok((sys, t))
}

/// `E^y[T_target]` (torus) or the capped time (plane).
pub fn entrance_time(
    walk: &Walk,
    target: &Region,
    y: LatticePoint,
    outer_cap: Option<&Region>,
) -> Result<f64, ExactError> {
    let (sys, t) = entrance_times(walk, target, outer_cap)?;
    Ok(t[sys.domain().require(y)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{power_law, srw};

    #[test]
    fn srw_cannot_jump_the_annulus() {
        let walk = Walk::torus(&srw(), 64).unwrap();
        let st = annulus_stats(&walk, 8.0, 2.0).unwrap();
        assert_eq!((st.psi, st.psi_disc, st.sigma, st.rho_max, st.phi_max), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn long_jumps_cross_the_annulus() {
        let law = power_law(1.0, 16).unwrap();
        let walk = Walk::torus(&law, 64).unwrap();
        let st = annulus_stats(&walk, 8.0, 4.0).unwrap();
        for v in [st.psi, st.sigma, st.rho_max, st.phi_max] {
            assert!(v > 0.0 && v < 1.0, "{st:?}");
        }
        assert!(st.psi <= st.psi_disc);
        assert!(st.rho_half <= st.psi);
        let planar = annulus_psi(&Walk::plane(&law).unwrap(), 8.0, 4.0).unwrap();
        // K - 2n = 48 exceeds every step, so nothing wraps.
        assert!((planar.0 - st.psi).abs() < 1e-12);
    }

    #[test]
    fn psi_decreases_with_width() {
        let walk = Walk::plane(&power_law(1.0, 32).unwrap()).unwrap();
        let mut last = 1.0;
        for s in [2.0, 4.0, 8.0] {
            let (psi, _) = annulus_psi(&walk, 8.0, s).unwrap();
            assert!(psi < last);
            last = psi;
        }
    }

    #[test]
    fn external_green_is_symmetric_and_bounded_below() {
        let walk = Walk::torus(&srw(), 32).unwrap();
        let g = external_green(&walk, 3.0, &[LatticePoint::new(6, 2), LatticePoint::new(-6, -2)]).unwrap();
        assert!((g[0] - g[1]).abs() < 1e-9 * g[0]);
        // Inscribed disc D(x, |x| - n) avoids D(0,n).
        let inner = Walk::torus(&srw(), 32).unwrap();
        let r = LatticePoint::new(6, 2).norm() - 3.0;
        let sys = inner.system(Domain::from_region(Ambient::Torus(32), &Region::disc(r)).unwrap()).unwrap();
        let g0 = sys.solve(&sys.unit(LatticePoint::ORIGIN).unwrap()).unwrap();
        assert!(g[0] >= g0[sys.domain().index(LatticePoint::ORIGIN).unwrap()]);
    }

    #[test]
    fn entrance_needs_a_cap_on_the_plane() {
        let walk = Walk::plane(&srw()).unwrap();
        let target = Region::disc(2.0);
        assert!(matches!(
            entrance_time(&walk, &target, LatticePoint::new(5, 0), None),
            Err(ExactError::MissingOuterCap)
        ));
        let mut last = 0.0;
        for cap in [8.0, 16.0, 32.0] {
            let t = entrance_time(&walk, &target, LatticePoint::new(5, 0), Some(&Region::disc(cap))).unwrap();
            assert!(t > last);
            last = t;
        }
    }
}
