//! Outside the disc: external Green's functions and entrance times.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{at, disc, laws, point, stability_rows, walk};
use crate::exact::{entrance_times, external_green, green_column, Domain};
use crate::geometry::{Ambient, LatticePoint, Region};
use crate::verify::fit::{fit_constant, least_squares, FitModel};
use crate::verify::{CheckResult, Params, Recorder, VerifyError, SOLVER_SLACK, STABILITY_LOOSE};

/// Strict inset keeping the inscribed disc around `x` clear of `D(0,n)`.
const INSET: f64 = 1e-9;

pub(in crate::verify) fn external_green_regimes(
    p: &Params,
    rec: &mut Recorder,
) -> Result<Vec<CheckResult>, VerifyError> {
    const ID: &str = "external-green-regimes";
    let opts = rec.opts();
    let n = p.float_or("n", 2.0)?;
    let mut rows = Vec::new();
    for law in laws(p)? {
        let name = law.name().to_string();
        let c1_t = CheckResult::new(ID, &name, "C1 = max G(x,x)/log|x| for n < |x| < (K/2)^(1/3)");
        let c2_t = CheckResult::new(ID, &name, "C2 = max G(x,x)/log^2|x| for |x| >= (K/2)^(1/3)");
        let (mut s1, mut s2) = (Vec::new(), Vec::new());
        let plane = walk(&law, Ambient::Plane, opts)?;
        // Planar G_D(0,rho)(0,0) by inscribed radius.
        let mut inscribed: BTreeMap<u64, f64> = BTreeMap::new();
        for k in p.ints("K")? {
            let ambient = Ambient::Torus(k);
            point(&mut rows, at(c1_t.clone(), ambient, n), || {
                let w = walk(&law, ambient, opts)?;
                let cut = (k as f64 / 2.0).cbrt();
                let mut xs: Vec<LatticePoint> = Region::disc(cut)
                    .enumerate(Ambient::Plane)
                    .unwrap_or_default()
                    .into_iter()
                    .filter(|x| x.norm() > n && x.norm() < cut)
                    .collect();
                for j in 1..k / 2 {
                    for x in [LatticePoint::new(j, 0), LatticePoint::new(j, j)] {
                        if x.norm() > n && x.norm() >= cut {
                            xs.push(x);
                        }
                    }
                }
                let g = external_green(&w, n, &xs)?;
                let (mut c1, mut c2) = ((f64::NAN, LatticePoint::ORIGIN), (f64::NAN, LatticePoint::ORIGIN));
                let mut worst_lower = (f64::INFINITY, LatticePoint::ORIGIN, 0.0);
                for (&x, &gx) in xs.iter().zip(&g) {
                    let ln = x.norm().ln();
                    let (ratio, slot) = if x.norm() < cut { (gx / ln, &mut c1) } else { (gx / (ln * ln), &mut c2) };
                    #[allow(clippy::neg_cmp_op_on_partial_ord)]
                    if !(slot.0 >= ratio) {
                        *slot = (ratio, x);
                    }
                    let radius = x.norm() - n - INSET;
                    let lower = match inscribed.get(&radius.to_bits()) {
                        Some(&v) => v,
                        None => {
                            let sys = plane.system(Domain::from_region(Ambient::Plane, &Region::disc(radius))?)?;
                            let col = green_column(&sys, LatticePoint::ORIGIN)?;
                            let v = col[sys.domain().require(LatticePoint::ORIGIN)?];
                            inscribed.insert(radius.to_bits(), v);
                            v
                        }
                    };
                    if gx - lower < worst_lower.0 {
                        worst_lower = (gx - lower, x, lower);
                    }
                }
                let mut out = Vec::new();
                for (t, c, series) in [(&c1_t, c1, &mut s1), (&c2_t, c2, &mut s2)] {
                    let row = at(t.clone(), ambient, n).constant("cut", cut);
                    out.push(if c.0.is_nan() {
                        row.skip("no lattice point in this regime")
                    } else {
                        series.push((at(t.clone(), ambient, n), c.0));
                        row.x(c.1).tolerance("fitted constant positive and finite").at_least(c.0, f64::MIN_POSITIVE)
                    });
                }
                let mut r = at(CheckResult::new(ID, &name, "min_x [G(x,x) - G_D(0,|x|-n)(0,0)]"), ambient, n)
                    .x(worst_lower.1)
                    .formula(worst_lower.2)
                    .constant("points", xs.len() as f64)
                    .tolerance("exact inequality from the inscribed disc around x");
                r = r.at_least(worst_lower.0, -SOLVER_SLACK * worst_lower.2.max(1.0));
                out.push(r);
                Ok(out)
            })?;
        }
        rows.extend(stability_rows(&c1_t, &s1, STABILITY_LOOSE));
        rows.extend(stability_rows(&c2_t, &s2, STABILITY_LOOSE));
    }
    Ok(rows)
}

pub(in crate::verify) fn entrance_divergence(p: &Params, rec: &mut Recorder) -> Result<Vec<CheckResult>, VerifyError> {
    const ID: &str = "entrance-divergence";
    let opts = rec.opts();
    let n = p.float("n")?;
    let caps = p.floats("N")?;
    let starts =
        if p.has("starts") { p.points("starts")? } else { vec![LatticePoint::new(2 * n.floor() as i64 + 1, 0)] };
    let mut rows = Vec::new();
    for law in laws(p)? {
        let name = law.name().to_string();
        let w = walk(&law, Ambient::Plane, opts)?;
        let target = Region::disc(n);
        // One capped solve per N serves every start.
        let tables: Vec<_> = caps
            .par_iter()
            .map(|&cap| match entrance_times(&w, &target, Some(&Region::disc(cap))) {
                Ok((sys, t)) => Ok(Some((sys, t))),
                Err(e) => {
                    let e = VerifyError::from(e);
                    if super::infeasible(&e).is_some() {
                        Ok(None)
                    } else {
                        Err(e)
                    }
                }
            })
            .collect::<Result<_, VerifyError>>()?;
        for &y in &starts {
            let template = CheckResult::new(ID, &name, "E^y[T_D(0,n) ^ T_D(0,N)^c]").n(n).x(y);
            let mut series: Vec<(f64, f64)> = Vec::new();
            for (&cap, table) in caps.iter().zip(&tables) {
                let mut row = template.clone();
                row.big_r = Some(cap);
                let Some((sys, t)) = table else {
                    rows.push(row.skip("cap solve infeasible"));
                    continue;
                };
                let Some(i) = sys.domain().index(y) else {
                    rows.push(row.skip("start is not strictly between the target and the cap"));
                    continue;
                };
                let e = t[i];
                rows.push(match series.last() {
                    None => row.tolerance("first cap: positive").at_least(e, f64::MIN_POSITIVE),
                    Some(&(prev_n, prev)) => {
                        let mut r = row
                            .constant("previous", prev)
                            .constant("previous_N", prev_n)
                            .tolerance("strictly increasing in N");
                        r.quantity = "E_N - E_previous N".into();
                        r.at_least(e - prev, f64::MIN_POSITIVE)
                    }
                });
                series.push((cap, e));
            }
            let xs: Vec<f64> = series.iter().map(|t| t.0).collect();
            let ys: Vec<f64> = series.iter().map(|t| t.1).collect();
            let mut lin = template.clone();
            lin.quantity = "least-squares slope of E against N".into();
            rows.push(match least_squares(&xs, &ys) {
                Ok((_, b, r2, _)) => lin.constant("R2", r2).tolerance("positive").at_least(b, f64::MIN_POSITIVE),
                Err(e) => lin.skip(e.to_string()),
            });
            let mut pw = template.clone();
            pw.quantity = "log-log slope of E against N".into();
            rows.push(match fit_constant(FitModel::PowerLawSlope, &xs, &ys) {
                Ok(f) => pw
                    .constant("R2", f.r2.unwrap_or(f64::NAN))
                    .tolerance("at least linear growth")
                    .at_least(f.slope(), 1.0),
                Err(e) => pw.skip(e.to_string()),
            });
        }
    }
    Ok(rows)
}

/// The logarithmic factor of the upper envelope, by regime of `|y|`.
fn entrance_log(y: f64, n: f64, k: f64) -> f64 {
    if y < n * n {
        n.ln()
    } else if y < (k / 2.0).cbrt() {
        (y / n).ln()
    } else {
        y.ln().powi(2)
    }
}

pub(in crate::verify) fn entrance_toral(p: &Params, rec: &mut Recorder) -> Result<Vec<CheckResult>, VerifyError> {
    const ID: &str = "entrance-toral";
    const EXPONENT: f64 = 2.0;
    const EXPONENT_TOL: f64 = 0.3;
    let opts = rec.opts();
    let ratio = p.float_or("n_over_K", 0.125)?;
    let mut rows = Vec::new();
    for law in laws(p)? {
        let name = law.name().to_string();
        let c_t = CheckResult::new(ID, &name, "c = max_y E^y T_D(0,n) / (K^2 L(y))");
        let far_t = CheckResult::new(ID, &name, "min_{|y| >= K/3} E^y T_D(0,n) / ((K-n)^2/gamma^2)");
        let (mut cs, mut fars) = (Vec::new(), Vec::new());
        let mut sups: Vec<(f64, f64)> = Vec::new();
        for k in p.ints("K")? {
            let ambient = Ambient::Torus(k);
            let kf = k as f64;
            let n = kf * ratio;
            let lower_t =
                at(CheckResult::new(ID, &name, "min_{|y| < K/3} [E^y T_D(0,n) - (|y|-n)^2/gamma^2]"), ambient, n);
            if n >= kf / 6.0 {
                rows.push(lower_t.skip("needs n < K/6"));
                continue;
            }
            point(&mut rows, lower_t.clone(), || {
                let w = walk(&law, ambient, opts)?;
                let g2 = w.stats().gamma_sq;
                let (sys, t) = entrance_times(&w, &disc(ambient, n)?, None)?;
                let mut lower = (f64::INFINITY, LatticePoint::ORIGIN);
                let mut c = (0.0, LatticePoint::ORIGIN);
                let mut far = (f64::INFINITY, LatticePoint::ORIGIN);
                let mut sup = 0.0f64;
                for (&y, &e) in sys.domain().states().iter().zip(&t) {
                    let r = ambient.norm(y);
                    sup = sup.max(e);
                    if r < kf / 3.0 {
                        let slack = e - (r - n).powi(2) / g2;
                        if slack < lower.0 {
                            lower = (slack, y);
                        }
                    } else {
                        let v = e / ((kf - n).powi(2) / g2);
                        if v < far.0 {
                            far = (v, y);
                        }
                    }
                    let v = e / (kf * kf * entrance_log(r, n, kf));
                    if v > c.0 {
                        c = (v, y);
                    }
                }
                sups.push((kf, sup));
                let mut out = vec![lower_t
                    .clone()
                    .x(lower.1)
                    .tolerance("exact inequality for every |y| < K/3")
                    .at_least(lower.0, -SOLVER_SLACK * sup)];
                cs.push((at(c_t.clone(), ambient, n), c.0));
                out.push(
                    at(c_t.clone(), ambient, n)
                        .x(c.1)
                        .tolerance("fitted constant positive and finite")
                        .at_least(c.0, f64::MIN_POSITIVE),
                );
                let far_row = at(far_t.clone(), ambient, n);
                out.push(if far.0.is_finite() {
                    fars.push((far_row.clone(), far.0));
                    far_row.x(far.1).tolerance("fitted constant positive").at_least(far.0, f64::MIN_POSITIVE)
                } else {
                    far_row.skip("no state with |y| >= K/3")
                });
                Ok(out)
            })?;
        }
        rows.extend(stability_rows(&c_t, &cs, STABILITY_LOOSE));
        rows.extend(stability_rows(&far_t, &fars, STABILITY_LOOSE));
        let slope_t = CheckResult::new(ID, &name, "log-log slope of sup_y E^y T_D(0,n) against K");
        let xs: Vec<f64> = sups.iter().map(|t| t.0).collect();
        let ys: Vec<f64> = sups.iter().map(|t| t.1).collect();
        rows.push(match fit_constant(FitModel::PowerLawSlope, &xs, &ys) {
            Ok(f) => slope_t
                .constant("R2", f.r2.unwrap_or(f64::NAN))
                .formula(EXPONENT)
                .tolerance(format!("within {EXPONENT} +- {EXPONENT_TOL}"))
                .within(f.slope(), EXPONENT - EXPONENT_TOL, EXPONENT + EXPONENT_TOL),
            Err(e) => slope_t.skip(e.to_string()),
        });
    }
    Ok(rows)
}
