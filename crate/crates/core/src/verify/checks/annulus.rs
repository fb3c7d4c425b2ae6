//! The disc / annulus / outside partition: jump-over probabilities, the
//! annulus-avoiding Green's function and annulus hitting times.

use rayon::prelude::*;

use super::{annulus_region, at, disc, laws, point, scales, stability_rows, walk};
use crate::exact::{annulus_psi, exit_times, hit_probabilities, AnnulusTables, Domain, System};
use crate::geometry::{Ambient, LatticePoint, Region};
use crate::verify::fit::{fit_constant, FitModel};
use crate::verify::{CheckResult, Params, Recorder, VerifyError, SOLVER_SLACK, STABILITY_LOOSE, STABILITY_TIGHT};

/// Torus against plane for the jump-over probability.
const TORAL_REL: f64 = 0.10;
const PSI_SLOPE_TOL: f64 = 0.5;

/// Fit `c = measured / envelope` at the first point and bound the later ones by `c envelope`.
#[allow(clippy::too_many_arguments)]
fn frozen_envelope(
    rec: &mut Recorder,
    law: &str,
    name: &str,
    slot: &mut Option<f64>,
    row: CheckResult,
    measured: f64,
    envelope: f64,
    abs_slack: f64,
) -> CheckResult {
    match *slot {
        None => {
            let c = rec.freeze(law, name, measured / envelope);
            *slot = Some(c);
            row.constant(name, c)
                .formula(c * envelope)
                .tolerance(format!("{name} fitted here and frozen"))
                .note("envelope fit")
                .at_most(measured, c * envelope * (1.0 + 1e-12) + f64::MIN_POSITIVE)
        }
        Some(c) => row
            .constant(name, c)
            .formula(c * envelope)
            .tolerance(format!("measured <= {name} * envelope with {name} frozen at the first point"))
            .note("envelope validation")
            .at_most(measured, c * envelope * (1.0 + SOLVER_SLACK) + abs_slack),
    }
}

/// A slope row over `(abscissa, value)`, or an exact-zero row when every value vanishes.
fn decay_row(template: CheckResult, pts: &[(f64, f64)], zero_note: &str) -> CheckResult {
    let max = pts.iter().map(|t| t.1).fold(0.0, f64::max);
    if !pts.is_empty() && max == 0.0 {
        let mut r = template.note(zero_note).tolerance("identically zero");
        r.quantity = format!("max of {}", r.quantity);
        return r.at_most(max, 0.0);
    }
    let xs: Vec<f64> = pts.iter().map(|t| t.0).collect();
    let ys: Vec<f64> = pts.iter().map(|t| t.1).collect();
    match fit_constant(FitModel::PowerLawSlope, &xs, &ys) {
        Ok(f) => {
            let mut r = template.constant("R2", f.r2.unwrap_or(f64::NAN)).tolerance("negative log-log slope");
            r.quantity = format!("log-log slope of {}", r.quantity);
            r.at_most(f.slope(), -f64::EPSILON)
        }
        Err(e) => template.skip(e.to_string()),
    }
}

pub(in crate::verify) fn annulus_psi_check(p: &Params, rec: &mut Recorder) -> Result<Vec<CheckResult>, VerifyError> {
    const ID: &str = "annulus-psi";
    let opts = rec.opts();
    let n = p.float("n")?;
    let ss = p.floats("s")?;
    let ks = if p.has("K") { p.ints("K")? } else { Vec::new() };
    let mut rows = Vec::new();
    for law in laws(p)? {
        let name = law.name().to_string();
        let target = 2.0 - law.moment_order();
        let plane = walk(&law, Ambient::Plane, opts)?;
        let planar: Vec<(f64, Option<f64>)> = ss
            .par_iter()
            .map(|&s| match annulus_psi(&plane, n, s) {
                Ok(v) => Ok((s, Some(v.0))),
                Err(e) => {
                    let e = VerifyError::from(e);
                    super::infeasible(&e).map(|_| (s, None)).ok_or(e)
                }
            })
            .collect::<Result<_, VerifyError>>()?;
        let template = CheckResult::new(ID, &name, "psi = sup_{D(0,n/2)} P^x(T_B < T_annulus)").n(n);
        let mut pts = Vec::new();
        for &(s, v) in &planar {
            let row = template.clone().s(s);
            rows.push(match v {
                Some(v) => {
                    pts.push((s, v));
                    row.tolerance("a probability").within(v, 0.0, 1.0)
                }
                None => row.skip("needs 0 < s <= n"),
            });
        }
        rows.push(slope_row(template.clone(), &pts, target));
        for &k in &ks {
            let ambient = Ambient::Torus(k);
            let mut toral_pts = Vec::new();
            for &(s, v) in &planar {
                let row = template.clone().k(k).s(s);
                let mut row = row.tolerance(format!("|toral / planar - 1| <= {TORAL_REL}"));
                row.quantity = "toral psi".into();
                let Some(v) = v else { continue };
                if n + s >= k as f64 / 4.0 {
                    rows.push(row.skip("the annulus does not fit in the fundamental domain (needs n + s < K/4)"));
                    continue;
                }
                point(&mut rows, row.clone(), || {
                    let (t, _) = annulus_psi(&walk(&law, ambient, opts)?, n, s)?;
                    toral_pts.push((s, t));
                    let row = row.constant("planar", v).formula(v);
                    Ok(vec![if v == 0.0 { row.at_most(t, 0.0) } else { row.near(t, v, TORAL_REL) }])
                })?;
            }
            if toral_pts.len() >= 3 {
                rows.push(slope_row(template.clone().k(k), &toral_pts, target));
            }
        }
    }
    Ok(rows)
}

fn slope_row(template: CheckResult, pts: &[(f64, f64)], target: f64) -> CheckResult {
    let mut row = template;
    row.quantity = "log-log slope of psi against s".into();
    if !pts.is_empty() && pts.iter().all(|t| t.1 == 0.0) {
        return row
            .note("psi vanishes identically: no step crosses the annulus")
            .tolerance("identically zero")
            .at_most(0.0, 0.0);
    }
    let xs: Vec<f64> = pts.iter().map(|t| t.0).collect();
    let ys: Vec<f64> = pts.iter().map(|t| t.1).collect();
    match fit_constant(FitModel::PowerLawSlope, &xs, &ys) {
        Ok(f) => row
            .constant("R2", f.r2.unwrap_or(f64::NAN))
            .formula(target)
            .tolerance(format!("within 2 - M +- {PSI_SLOPE_TOL}"))
            .within(f.slope(), target - PSI_SLOPE_TOL, target + PSI_SLOPE_TOL),
        Err(e) => row.skip(e.to_string()),
    }
}

pub(in crate::verify) fn annulus_sigma(p: &Params, rec: &mut Recorder) -> Result<Vec<CheckResult>, VerifyError> {
    const ID: &str = "annulus-sigma";
    let opts = rec.opts();
    let ratio = p.float_or("s_over_n", 0.5)?;
    let mut rows = Vec::new();
    for law in laws(p)? {
        let name = law.name().to_string();
        let m = law.moment_order();
        let mut slots = [None; 4];
        for (ambient, n) in scales(p)? {
            let s = (n * ratio).floor().max(1.0);
            let template = at(CheckResult::new(ID, &name, "sigma = sup_B P^y(T_A < T_annulus)"), ambient, n).s(s);
            point(&mut rows, template.clone(), || {
                let st = AnnulusTables::new(&walk(&law, ambient, opts)?, n, s)?.stats();
                let jump = (s.powf(2.0 - m)).max(n.powf(2.0 - m));
                let specs = [
                    ("c_sigma", "sigma", st.sigma, n * n * n.ln().powi(2) * (s.powf(-m) + n.powf(-m))),
                    ("c_sigma_n2", "sigma (against n^-2)", st.sigma, n.powi(-2)),
                    ("c_rho", "rho = sup_{D(0,n/2)} P^x(T_B < T_annulus, then T_A < T_annulus)", st.rho_half, jump),
                    ("c_phi", "phi = sup_B P^y(T_A < T_annulus, then T_B < T_annulus)", st.phi_max, jump),
                ];
                Ok(specs
                    .into_iter()
                    .zip(slots.iter_mut())
                    .map(|((cname, quantity, measured, env), slot)| {
                        let mut row = template.clone();
                        row.quantity = quantity.into();
                        frozen_envelope(rec, &name, cname, slot, row, measured, env, 1e-15)
                    })
                    .collect())
            })?;
        }
    }
    Ok(rows)
}

fn sup_error(
    table: &crate::exact::HitTable,
    keep: impl Fn(LatticePoint, f64) -> bool,
    mut formula: impl FnMut(f64) -> f64,
) -> (f64, LatticePoint) {
    let ambient = table.system.domain().ambient();
    table
        .system
        .domain()
        .states()
        .iter()
        .zip(&table.values)
        .filter(|(x, _)| keep(**x, ambient.norm(**x)))
        .map(|(x, v)| ((v - formula(ambient.norm(*x))).abs(), *x))
        .fold((0.0, LatticePoint::ORIGIN), |a, b| if b.0 > a.0 { b } else { a })
}

pub(in crate::verify) fn annulus_entry_ring(p: &Params, rec: &mut Recorder) -> Result<Vec<CheckResult>, VerifyError> {
    const ID: &str = "annulus-entry-ring";
    let opts = rec.opts();
    let s_over_n = p.float_or("s_over_n", 0.5)?;
    let s_over_r = p.float_or("s_over_r", 0.5)?;
    let mut rows = Vec::new();
    for law in laws(p)? {
        let name = law.name().to_string();
        let m = law.moment_order();

        // Reaching the annulus before the origin, from inside the disc.
        let a_t = CheckResult::new(ID, &name, "A(n) = log n sup_x |P^x(T_annulus < T_0) - log|x|/log n|");
        let mut series = Vec::new();
        if p.has("n") {
            for (ambient, n) in scales(p)? {
                let s = (n * s_over_n).floor().max(1.0);
                let row = at(a_t.clone(), ambient, n).s(s);
                point(&mut rows, row.clone(), || {
                    let w = walk(&law, ambient, opts)?;
                    let forbidden = Region::point(LatticePoint::ORIGIN).union(disc(ambient, n + s)?.complement());
                    let h = hit_probabilities(&w, &annulus_region(ambient, n, s)?, &forbidden)?;
                    let mut clamped = 0usize;
                    let (err, x) = sup_error(
                        &h,
                        |_, _| true,
                        |r| {
                            let f = r.ln() / n.ln();
                            clamped += usize::from(!(0.0..=1.0).contains(&f));
                            f.clamp(0.0, 1.0)
                        },
                    );
                    let a = err * n.ln();
                    series.push((row.clone(), a));
                    Ok(vec![row
                        .x(x)
                        .constant("clamped", clamped as f64)
                        .tolerance("positive and finite")
                        .at_least(a, f64::MIN_POSITIVE)])
                })?;
            }
        }
        rows.extend(stability_rows(&a_t, &series, STABILITY_TIGHT));

        if !p.has("pairs") {
            continue;
        }
        let w = walk(&law, Ambient::Plane, opts)?;
        let far_t =
            CheckResult::new(ID, &name, "sup_{r < |x| <= R/2} |P^x(T_annulus(R,s) < T_D(r)) - log(|x|/r)/log(R/r)|");
        let deep_t = CheckResult::new(ID, &name, "sup_x P^x(T_D(r) < T_D(R)^c, entering inside D(r-s))");
        let ring_t = CheckResult::new(
            ID,
            &name,
            "e(r) = log(R/r) sup_x |P^x(T_ring < T_D(R)^c, ring first) - log(R/|x|)/log(R/r)|",
        );
        let mut slot = None;
        let (mut deep, mut ring) = (Vec::new(), Vec::new());
        for (r, big_r) in p.pairs("pairs")? {
            let s = (r * s_over_r).floor().max(1.0);
            let far = far_t.clone().rr(r, big_r).s(s);
            point(&mut rows, far.clone(), || {
                let forbidden = Region::disc(r).union(Region::disc(big_r + s).complement());
                let h = hit_probabilities(&w, &Region::annulus(big_r, s), &forbidden)?;
                let (err, x) = sup_error(&h, |_, nx| nx <= big_r / 2.0, |nx| (nx / r).ln() / (big_r / r).ln());
                let env = r.powf(-0.25) / (big_r / r).ln() + s.powf(2.0 - m);
                Ok(vec![frozen_envelope(rec, &name, "A", &mut slot, far.clone().x(x), err, env, 1e-15)])
            })?;
            let deep_row = deep_t.clone().rr(r, big_r).s(s);
            if !(s < r && big_r <= r * r) {
                rows.push(deep_row.skip("needs s < r and R <= r^2"));
                continue;
            }
            point(&mut rows, deep_row.clone(), || {
                let forbidden = Region::annulus(r - s, s).union(Region::disc(big_r).complement());
                let h = hit_probabilities(&w, &Region::disc(r - s), &forbidden)?;
                let (sup, x) = sup_error(&h, |_, _| true, |_| 0.0);
                deep.push((r, sup));
                Ok(vec![deep_row.clone().x(x).tolerance("a probability").within(sup, 0.0, 1.0)])
            })?;
            let ring_row = ring_t.clone().rr(r, big_r).s(s);
            point(&mut rows, ring_row.clone(), || {
                let forbidden = Region::disc(r - s).union(Region::disc(big_r).complement());
                let h = hit_probabilities(&w, &Region::annulus(r - s, s), &forbidden)?;
                let (err, x) = sup_error(&h, |_, _| true, |nx| (big_r / nx).ln() / (big_r / r).ln());
                let e = err * (big_r / r).ln();
                ring.push((r, e));
                Ok(vec![ring_row.clone().x(x).tolerance("finite").at_least(e, 0.0)])
            })?;
        }
        rows.push(decay_row(deep_t, &deep, "no step jumps the ring"));
        rows.push(decay_row(ring_t, &ring, "the ring formula is exact"));
    }
    Ok(rows)
}

/// Canonical, deduplicated points.
fn pts(ambient: Ambient, raw: &[(f64, f64)]) -> Vec<LatticePoint> {
    let mut out: Vec<LatticePoint> = Vec::new();
    for &(a, b) in raw {
        let x = ambient.canonical(LatticePoint::new(a.floor() as i64, b.floor() as i64));
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Green columns `G(., y)` for each `y`, indexed by the system's states.
fn columns(sys: &System, ys: &[LatticePoint]) -> Result<Vec<Vec<f64>>, VerifyError> {
    let units = ys.iter().map(|&y| sys.unit(y)).collect::<Result<Vec<_>, _>>()?;
    Ok(sys.solve_many(&units)?)
}

fn lookup(
    sys: &System,
    cols: &[Vec<f64>],
    ys: &[LatticePoint],
    x: LatticePoint,
    y: LatticePoint,
) -> Result<f64, VerifyError> {
    let j = ys.iter().position(|p| *p == y).expect("column computed");
    Ok(cols[j][sys.domain().require(x)?])
}

/// The worst `(x, y)` of a family of upper bounds, as `(excess, x, y, value, bound)`.
type Worst = (f64, LatticePoint, LatticePoint, f64, f64);

fn worse(w: &mut Option<Worst>, x: LatticePoint, y: LatticePoint, value: f64, bound: f64) {
    let excess = value - bound;
    if w.is_none_or(|c| excess > c.0) {
        *w = Some((excess, x, y, value, bound));
    }
}

fn bound_row(template: &CheckResult, quantity: &str, w: Option<Worst>) -> CheckResult {
    let mut row = template.clone();
    row.quantity = quantity.into();
    match w {
        None => row.skip("no admissible pair"),
        Some((_, x, y, value, bound)) => row
            .x(x)
            .constant("y1", y.x1 as f64)
            .constant("y2", y.x2 as f64)
            .formula(bound)
            .tolerance("exact inequality at the worst pair, up to solver slack")
            .at_most(value, bound * (1.0 + SOLVER_SLACK) + 1e-12),
    }
}

pub(in crate::verify) fn annulus_green(p: &Params, rec: &mut Recorder) -> Result<Vec<CheckResult>, VerifyError> {
    const ID: &str = "annulus-green";
    let opts = rec.opts();
    let sc = scales(p)?;
    let ss = p.floats("s")?;
    if ss.len() != 1 && ss.len() != sc.len() {
        return Err(crate::verify::grid::GridError::BadValue {
            section: p.section().to_string(),
            key: "s".into(),
            msg: "give one s or one per (K, n)".into(),
        }
        .into());
    }
    let mut rows = Vec::new();
    for law in laws(p)? {
        let name = law.name().to_string();
        for (i, &(ambient, n)) in sc.iter().enumerate() {
            let s = ss[i.min(ss.len() - 1)];
            let template = at(CheckResult::new(ID, &name, "annulus-avoiding Green's function"), ambient, n).s(s);
            point(&mut rows, template.clone(), || {
                let w = walk(&law, ambient, opts)?;
                let kf = ambient.side().map_or(f64::NAN, |k| k as f64);
                let t = AnnulusTables::new(&w, n, s)?;
                let cc = w.system(Domain::complement_of(ambient, &annulus_region(ambient, n, s)?)?)?;
                let d = std::f64::consts::FRAC_1_SQRT_2;
                let xs = pts(ambient, &[(0.0, 0.0), (n / 4.0, 0.0), (n / 2.0, 0.0), (n * d / 2.0, n * d / 2.0)]);
                let a_pts = pts(ambient, &[(0.0, 0.0), (n / 2.0, 0.0), (n, 0.0), (n * d, n * d)]);
                let b_pts = pts(
                    ambient,
                    &[
                        ((n + s).floor() + 1.0, 0.0),
                        (kf / 2.0 - 1.0, 0.0),
                        (kf / 4.0, kf / 4.0),
                        (kf / 2.0 - 1.0, kf / 2.0 - 1.0),
                    ],
                );
                let b_pts: Vec<_> = b_pts.into_iter().filter(|y| t.outer.domain().contains(*y)).collect();
                let a_cols: Vec<LatticePoint> = xs.iter().chain(&a_pts).fold(Vec::new(), |mut v, p| {
                    if !v.contains(p) {
                        v.push(*p);
                    }
                    v
                });
                let cc_cols: Vec<LatticePoint> = a_pts.iter().chain(&b_pts).copied().collect();
                let ga = columns(&t.disc, &a_cols)?;
                let gb = columns(&t.outer, &b_pts)?;
                let gc = columns(&cc, &cc_cols)?;
                let g_a = |x, y| lookup(&t.disc, &ga, &a_cols, x, y);
                let g_b = |x, y| lookup(&t.outer, &gb, &b_pts, x, y);
                let g_c = |x, y| lookup(&cc, &gc, &cc_cols, x, y);
                let rho = |x| t.rho_at(x).unwrap_or(0.0);
                let phi = |y| t.phi_at(y).unwrap_or(0.0);

                let (mut inner, mut outer, mut cross, mut mono) = (None, None, None, None);
                let mut out = Vec::new();
                for &x in &xs {
                    for &y in &a_pts {
                        let bound = g_a(x, y)? + rho(x) / (1.0 - rho(y)) * g_a(y, y)?;
                        worse(&mut inner, x, y, g_c(x, y)?, bound);
                    }
                    // Killing on the annulus only: more time than killing on all of A^c.
                    worse(
                        &mut mono,
                        x,
                        LatticePoint::ORIGIN,
                        g_a(x, LatticePoint::ORIGIN)?,
                        g_c(x, LatticePoint::ORIGIN)?,
                    );
                    if x != LatticePoint::ORIGIN {
                        let c = g_c(x, LatticePoint::ORIGIN)? - 2.0 / w.stats().pi_gamma * (n / ambient.norm(x)).ln();
                        let mut r = template.clone().x(x).tolerance("reported; finite");
                        r.quantity = "C = G(x,0) - (2/pi_Gamma) log(n/|x|)".into();
                        out.push(r.judge(c, None, None));
                    }
                    for &y in &b_pts {
                        let u_y = t.u_at(y).unwrap_or(0.0);
                        let v_x = t.v_at(x).unwrap_or(0.0);
                        let bound = (u_y / (1.0 - rho(x)) * g_a(x, x)?).min(v_x / (1.0 - phi(y)) * g_b(y, y)?);
                        worse(&mut cross, x, y, g_c(x, y)?, bound);
                    }
                }
                for &x in &b_pts {
                    for &y in &b_pts {
                        let bound = g_b(x, y)? + phi(x) / (1.0 - phi(y)) * g_b(y, y)?;
                        worse(&mut outer, x, y, g_c(x, y)?, bound);
                    }
                }
                out.push(bound_row(
                    &template,
                    "G(x,y) <= G_A(x,y) + rho_x/(1-rho_y) G_A(y,y), x in D(0,n/2), y in A",
                    inner,
                ));
                out.push(bound_row(&template, "G_A(x,0) <= G(x,0), x in D(0,n/2)", mono));
                out.push(bound_row(&template, "G(x,y) <= G_B(x,y) + phi_x/(1-phi_y) G_B(y,y), x, y in B", outer));
                out.push(bound_row(
                    &template,
                    "G(x,y) <= min(sigma_y/(1-rho_x) G_A(x,x), psi_x/(1-phi_y) G_B(y,y)), x in D(0,n/2), y in B",
                    cross,
                ));
                Ok(out)
            })?;
        }
    }
    Ok(rows)
}

pub(in crate::verify) fn annulus_hitting_time(p: &Params, rec: &mut Recorder) -> Result<Vec<CheckResult>, VerifyError> {
    const ID: &str = "annulus-hitting-time";
    let opts = rec.opts();
    let n_over_k = p.float_or("n_over_K", 0.125)?;
    let s_over_k = p.float_or("s_over_K", 0.0625)?;
    let mut rows = Vec::new();
    for law in laws(p)? {
        let name = law.name().to_string();
        let fa_t = CheckResult::new(ID, &name, "f_A / n^2");
        let fb_t = CheckResult::new(ID, &name, "f_B / (K log K)^2");
        let (mut fas, mut fbs) = (Vec::new(), Vec::new());
        let mut slot = None;
        for k in p.ints("K")? {
            let ambient = Ambient::Torus(k);
            let kf = k as f64;
            let (n, s) = ((kf * n_over_k).floor(), (kf * s_over_k).floor().max(1.0));
            let template = at(CheckResult::new(ID, &name, "annulus hitting time"), ambient, n).s(s);
            point(&mut rows, template.clone(), || {
                let w = walk(&law, ambient, opts)?;
                let t = AnnulusTables::new(&w, n, s)?;
                let cc = w.system(Domain::complement_of(ambient, &annulus_region(ambient, n, s)?)?)?;
                let (ta, tb, tc) = (exit_times(&t.disc)?, exit_times(&t.outer)?, exit_times(&cc)?);
                let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
                let (f_a, f_b, psi, sigma) = (max(&ta), max(&tb), max(&t.v), max(&t.u));
                let denom = 1.0 - psi * sigma;
                let tc_at = |x: LatticePoint| cc.domain().require(x).map(|i| tc[i]);
                let ratio_max =
                    |sys: &System, base: &[f64], w: &[f64], tail: f64| -> Result<(f64, LatticePoint), VerifyError> {
                        let mut best = (0.0, LatticePoint::ORIGIN);
                        for (i, &x) in sys.domain().states().iter().enumerate() {
                            let r = tc_at(x)? / (base[i] + w[i] * tail / denom);
                            if r > best.0 {
                                best = (r, x);
                            }
                        }
                        Ok(best)
                    };
                let inside = ratio_max(&t.disc, &ta, &t.v, f_b + sigma * f_a)?;
                let outside = ratio_max(&t.outer, &tb, &t.u, f_a + psi * f_b)?;
                let mut q = (0.0f64, LatticePoint::ORIGIN);
                for (i, &x) in t.disc.domain().states().iter().enumerate() {
                    if ambient.norm(x) <= n / 2.0 {
                        let v = tc_at(x)? / ta[i] - 1.0;
                        if v > q.0 {
                            q = (v, x);
                        }
                    }
                }
                let row = |quantity: &str| {
                    let mut r = template.clone();
                    r.quantity = quantity.into();
                    r.constant("psi_disc", psi).constant("sigma", sigma)
                };
                let fa_row = at(fa_t.clone(), ambient, n).s(s);
                let fb_row = at(fb_t.clone(), ambient, n).s(s);
                fas.push((fa_row.clone(), f_a / (n * n)));
                fbs.push((fb_row.clone(), f_b / (kf * kf.ln()).powi(2)));
                let beta = law.beta();
                Ok(vec![
                    row("max_{x in A} E^x T_annulus / [E^x T_A^c + v_x (f_B + sigma f_A)/(1 - psi sigma)]")
                        .x(inside.1)
                        .tolerance("renewal bound, up to solver slack")
                        .at_most(inside.0, 1.0 + SOLVER_SLACK),
                    row("max_{y in B} E^y T_annulus / [E^y T_B^c + u_y (f_A + psi f_B)/(1 - psi sigma)]")
                        .x(outside.1)
                        .tolerance("renewal bound, up to solver slack")
                        .at_most(outside.0, 1.0 + SOLVER_SLACK),
                    fa_row.tolerance("positive").at_least(f_a / (n * n), f64::MIN_POSITIVE),
                    fb_row.tolerance("positive").at_least(f_b / (kf * kf.ln()).powi(2), f64::MIN_POSITIVE),
                    frozen_envelope(
                        rec,
                        &name,
                        "c",
                        &mut slot,
                        row("max_{|x| <= n/2} E^x T_annulus / E^x T_A^c - 1").x(q.1).constant("beta", beta),
                        q.0,
                        kf.powf(-2.0 - beta),
                        1e-10,
                    ),
                ])
            })?;
        }
        rows.extend(stability_rows(&fa_t, &fas, STABILITY_TIGHT));
        rows.extend(stability_rows(&fb_t, &fbs, STABILITY_LOOSE));
    }
    Ok(rows)
}
