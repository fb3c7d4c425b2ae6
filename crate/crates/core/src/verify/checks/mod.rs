//! The check registry and helpers shared by the checks.

mod annulus;
mod disc;
mod green;
mod outer;

use super::{CheckInfo, CheckResult, Params, VerifyError};
use crate::exact::{ExactError, SolveOptions, Walk};
use crate::geometry::{Ambient, LatticePoint, Region};
use crate::law::StepLaw;

pub(super) static REGISTRY: &[CheckInfo] = &[
    CheckInfo {
        id: "escape-bounds",
        claim: "(n^2-|x|^2)/gamma^2 <= E^x T_esc <= (n^2-|x|^2)/gamma^2 + 2n + 1 for every x in D(0,n)",
        keys: &["laws", "n"],
        run: disc::escape_bounds,
    },
    CheckInfo {
        id: "escape-toral-correction",
        claim: "toral escape time exceeds the planar one by at most c (K-2n)^-M n^4 <= c 2^M K^-M n^4; equal for laws that cannot wrap",
        keys: &["laws", "K", "n"],
        run: disc::escape_toral_correction,
    },
    CheckInfo {
        id: "hit-zero-first",
        claim: "toral P(T_0 < T_esc) exceeds the planar one by at most c (K-2n)^-M n^2 <= c 2^M K^-M n^2; equal for laws that cannot wrap",
        keys: &["laws", "K", "n"],
        run: disc::hit_zero_first,
    },
    CheckInfo {
        id: "prob-zero-before-disc",
        claim: "P^x(T_0 < T_esc) = log(n/|x|)/log n + O(1/log n) uniformly in x",
        keys: &["laws", "K", "n"],
        run: disc::prob_zero_before_disc,
    },
    CheckInfo {
        id: "inner-hit-bounds",
        claim: "P^x(T_D(delta n) < T_esc) is within [c1, c2] (rho(x) v 1)/n for |x| > eps n",
        keys: &["laws", "K", "n", "delta", "epsilon"],
        run: disc::inner_hit_bounds,
    },
    CheckInfo {
        id: "green-zero-asymptotic",
        claim: "G_D(0,n)(0,0) = (2/pi_Gamma) log n + C' + o(1)",
        keys: &["laws", "K", "n"],
        run: green::green_zero_asymptotic,
    },
    CheckInfo {
        id: "green-x-zero",
        claim: "G_D(0,n)(x,0) = (2/pi_Gamma) log(n/|x|) + C + o(1)",
        keys: &["laws", "K", "n", "fractions"],
        run: green::green_x_zero,
    },
    CheckInfo {
        id: "green-rim",
        claim: "G(y,x) is within [c1, c2] (rho(x) v 1)/n for |y| <= delta n < eps n < |x|",
        keys: &["laws", "K", "n", "delta", "epsilon"],
        run: green::green_rim,
    },
    CheckInfo {
        id: "gamblers-ruin",
        claim: "P^x(T_D(r) < T_D(R)^c) = [log(R/|x|) + O(r^-1/4)]/log(R/r) on the plane",
        keys: &["laws", "pairs"],
        run: green::gamblers_ruin,
    },
    CheckInfo {
        id: "gamblers-ruin-toral",
        claim: "P^x(T_D(r) < T_D(R)^c) = [log(R/|x|) + O(r^-1/4)]/log(R/r) on the torus",
        keys: &["laws", "K", "pairs"],
        run: green::gamblers_ruin_toral,
    },
    CheckInfo {
        id: "local-time",
        claim: "E L^k = k! G(x,0) G(0,0)^(k-1) and P(L >= z G(0,0)) <= c sqrt(z) e^-z",
        keys: &["laws", "K", "n", "starts", "k_max", "z_fit", "z_check"],
        run: green::local_time_check,
    },
    CheckInfo {
        id: "external-green-regimes",
        claim: "G_D(0,n)^c(x,x) <= C log|x| below (K/2)^(1/3) and <= C log^2|x| beyond; >= G_D(|x|-n)(0,0)",
        keys: &["laws", "K", "n"],
        run: outer::external_green_regimes,
    },
    CheckInfo {
        id: "entrance-divergence",
        claim: "the capped planar entrance time E^y T_D(0,n) ^ T_D(0,N)^c grows at least linearly in N",
        keys: &["laws", "n", "N", "starts"],
        run: outer::entrance_divergence,
    },
    CheckInfo {
        id: "entrance-toral",
        claim: "(|y|-n)^2/gamma^2 <= E^y T_D(0,n) <= c K^2 L(y) on the torus, with sup growing like K^2",
        keys: &["laws", "K", "n_over_K"],
        run: outer::entrance_toral,
    },
    CheckInfo {
        id: "annulus-psi",
        claim: "psi <= c (s^(2-M) v n^(2-M)): slope of psi in s near 2 - M, toral equal to planar",
        keys: &["laws", "K", "n", "s"],
        run: annulus::annulus_psi_check,
    },
    CheckInfo {
        id: "annulus-sigma",
        claim: "sigma <= c n^2 log^2 n (s^-M + n^-M), rho and phi <= c (s^(2-M) v n^(2-M))",
        keys: &["laws", "K", "n", "s_over_n"],
        run: annulus::annulus_sigma,
    },
    CheckInfo {
        id: "annulus-entry-ring",
        claim: "escape into the annulus, far escape, deep entry and ring entry probabilities vs log formulas",
        keys: &["laws", "K", "n", "s_over_n", "pairs", "s_over_r"],
        run: annulus::annulus_entry_ring,
    },
    CheckInfo {
        id: "annulus-green",
        claim: "annulus-avoiding Green's functions are bounded by the disc and outer Green's functions",
        keys: &["laws", "K", "n", "s"],
        run: annulus::annulus_green,
    },
    CheckInfo {
        id: "annulus-hitting-time",
        claim: "expected annulus hitting times obey the renewal bounds and match E T_esc up to 1 + O(K^(-2-beta))",
        keys: &["laws", "K", "n_over_K", "s_over_K"],
        run: annulus::annulus_hitting_time,
    },
];

pub(super) fn laws(p: &Params) -> Result<Vec<StepLaw>, VerifyError> {
    p.laws()?.iter().map(|l| l.build().map_err(VerifyError::from)).collect()
}

pub(super) fn walk(law: &StepLaw, ambient: Ambient, opts: SolveOptions) -> Result<Walk, VerifyError> {
    Ok(Walk::new(law, ambient, opts)?)
}

pub(super) fn disc(ambient: Ambient, n: f64) -> Result<Region, VerifyError> {
    Ok(match ambient {
        Ambient::Plane => Region::disc(n),
        Ambient::Torus(k) => Region::torus_disc(n, k).map_err(ExactError::from)?,
    })
}

pub(super) fn annulus_region(ambient: Ambient, n: f64, s: f64) -> Result<Region, VerifyError> {
    Ok(match ambient {
        Ambient::Plane => Region::annulus(n, s),
        Ambient::Torus(k) => Region::torus_annulus(n, s, k).map_err(ExactError::from)?,
    })
}

/// `(ambient, n)` points: planar `n` values, or `(K_i, n_i)` pairs when `K` is set.
pub(super) fn scales(p: &Params) -> Result<Vec<(Ambient, f64)>, VerifyError> {
    let ns = p.floats("n")?;
    if !p.has("K") {
        return Ok(ns.into_iter().map(|n| (Ambient::Plane, n)).collect());
    }
    let ks = p.ints("K")?;
    if ks.len() != ns.len() {
        return Err(super::GridError::BadValue {
            section: p.section().to_string(),
            key: "K".into(),
            msg: format!("{} values of K but {} of n; they are paired", ks.len(), ns.len()),
        }
        .into());
    }
    Ok(ks.into_iter().zip(ns).map(|(k, n)| (Ambient::Torus(k), n)).collect())
}

/// Tag a row with its ambient space and radius.
pub(super) fn at(row: CheckResult, ambient: Ambient, n: f64) -> CheckResult {
    let row = row.n(n);
    match ambient {
        Ambient::Torus(k) => row.k(k),
        Ambient::Plane => row,
    }
}

/// Why an error makes a grid point infeasible, if it does.
fn infeasible(e: &VerifyError) -> Option<String> {
    match e {
        VerifyError::Exact(
            ExactError::Geometry(_)
            | ExactError::DimensionTooLarge { .. }
            | ExactError::BadParameter(_)
            | ExactError::StartOutside(_)
            | ExactError::EmptyDomain,
        )
        | VerifyError::Fit(_) => Some(e.to_string()),
        _ => None,
    }
}

/// Evaluate one grid point; infeasible points become a skipped copy of `template`.
pub(super) fn point(
    rows: &mut Vec<CheckResult>,
    template: CheckResult,
    f: impl FnOnce() -> Result<Vec<CheckResult>, VerifyError>,
) -> Result<(), VerifyError> {
    match f() {
        Ok(r) => {
            rows.extend(r);
            Ok(())
        }
        Err(e) => match infeasible(&e) {
            Some(reason) => {
                rows.push(template.skip(reason));
                Ok(())
            }
            None => Err(e),
        },
    }
}

/// Rows comparing each value with the previous one: the ratio must stay within `1 +- rel`.
pub(super) fn stability_rows(template: &CheckResult, series: &[(CheckResult, f64)], rel: f64) -> Vec<CheckResult> {
    series
        .windows(2)
        .map(|w| {
            let (tagged, v) = (&w[1].0, w[1].1);
            let mut row = tagged.clone();
            row.quantity = format!("{} / previous scale", template.quantity);
            row.stable(v, w[0].1, rel).tolerance(format!("ratio to previous scale within 1 +- {rel}"))
        })
        .collect()
}

/// Whether the law's masses are invariant under the symmetries of the square.
pub(super) fn dihedral_invariant(law: &StepLaw) -> bool {
    law.support().iter().all(|(p, w)| p.dihedral_images().iter().all(|q| (law.mass(*q) - w).abs() <= 1e-14 * w))
}

/// Points of `D(0,r)` with `0 <= x2 <= x1` when the law is dihedral invariant, else all of it.
pub(super) fn disc_representatives(law: &StepLaw, r: f64) -> Vec<LatticePoint> {
    let all = Region::disc(r).enumerate(Ambient::Plane).unwrap_or_default();
    if dihedral_invariant(law) {
        all.into_iter().filter(|p| 0 <= p.x2 && p.x2 <= p.x1).collect()
    } else {
        all
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{power_law, srw, StepLaw};

    #[test]
    fn registry_ids_are_unique() {
        let mut ids: Vec<_> = REGISTRY.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), REGISTRY.len());
        assert_eq!(REGISTRY.len(), 19);
    }

    #[test]
    fn builtins_are_dihedral() {
        assert!(dihedral_invariant(&srw()));
        assert!(dihedral_invariant(&power_law(1.0, 16).unwrap()));
        let p = LatticePoint::new;
        let skew =
            StepLaw::from_support("skew", 1.0, vec![(p(1, 0), 0.2), (p(-1, 0), 0.2), (p(0, 1), 0.3), (p(0, -1), 0.3)]);
        assert!(!dihedral_invariant(&skew));
        assert_eq!(disc_representatives(&srw(), 2.0).len(), 4);
    }
}
