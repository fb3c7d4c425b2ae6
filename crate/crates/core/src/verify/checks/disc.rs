//! Checks about a single disc: escape times and hitting probabilities.

use std::collections::BTreeMap;

use super::{at, disc, laws, point, scales, stability_rows, walk};
use crate::exact::{exit_times, hit_probabilities, Domain, Walk};
use crate::geometry::{Ambient, LatticePoint, Region};
use crate::law::StepLaw;
use crate::verify::{CheckResult, Params, Recorder, VerifyError, SOLVER_SLACK, STABILITY_TIGHT};

type Table = Vec<(LatticePoint, f64)>;

fn pairs(sys_states: &[LatticePoint], values: &[f64]) -> Table {
    sys_states.iter().copied().zip(values.iter().copied()).collect()
}

/// `E^x T_esc` for every `x` in the disc.
fn exit_table(w: &Walk, n: f64) -> Result<Table, VerifyError> {
    let sys = w.system(Domain::from_region(w.ambient(), &disc(w.ambient(), n)?)?)?;
    let t = exit_times(&sys)?;
    Ok(pairs(sys.domain().states(), &t))
}

/// `P^x(T_0 < T_esc)` for every `x != 0` in the disc.
fn hit_zero_table(w: &Walk, n: f64) -> Result<Table, VerifyError> {
    let h = hit_probabilities(w, &Region::point(LatticePoint::ORIGIN), &disc(w.ambient(), n)?.complement())?;
    Ok(pairs(h.system.domain().states(), &h.values))
}

pub(in crate::verify) fn escape_bounds(p: &Params, rec: &mut Recorder) -> Result<Vec<CheckResult>, VerifyError> {
    const ID: &str = "escape-bounds";
    let opts = rec.opts();
    let mut rows = Vec::new();
    for law in laws(p)? {
        let name = law.name().to_string();
        for n in p.floats("n")? {
            point(&mut rows, CheckResult::new(ID, &name, "escape bounds").n(n), || {
                let w = walk(&law, Ambient::Plane, opts)?;
                let g2 = w.stats().gamma_sq;
                let table = exit_table(&w, n)?;
                let (mut lo, mut hi) = ((f64::INFINITY, LatticePoint::ORIGIN), (f64::INFINITY, LatticePoint::ORIGIN));
                let (mut lo_bad, mut hi_bad) = (0usize, 0usize);
                for &(x, t) in &table {
                    let lower = (n * n - x.norm_sq() as f64) / g2;
                    let upper = lower + 2.0 * n + 1.0;
                    if t - lower < lo.0 {
                        lo = (t - lower, x);
                    }
                    if upper - t < hi.0 {
                        hi = (upper - t, x);
                    }
                    lo_bad += usize::from(t < lower);
                    hi_bad += usize::from(t > upper);
                }
                let starts = table.len() as f64;
                Ok(vec![
                    CheckResult::new(ID, &name, "min_x [E^x T_esc - (n^2-|x|^2)/gamma^2]")
                        .n(n)
                        .x(lo.1)
                        .constant("violations", lo_bad as f64)
                        .constant("starts", starts)
                        .tolerance("exact inequality, every start in the disc")
                        .at_least(lo.0, 0.0),
                    CheckResult::new(ID, &name, "min_x [(n^2-|x|^2)/gamma^2 + 2n + 1 - E^x T_esc]")
                        .n(n)
                        .x(hi.1)
                        .constant("violations", hi_bad as f64)
                        .constant("starts", starts)
                        .tolerance("exact inequality, every start in the disc")
                        .at_least(hi.0, 0.0),
                ])
            })?;
        }
    }
    Ok(rows)
}

/// Shared body of the two toral-correction checks.
///
/// Laws that cannot wrap at `(K, n)` must agree exactly. Otherwise the toral
/// value may only be larger, and the excess divided by `envelope(K, n)` is
/// fitted at the first grid point (K ascending) where wrapping is possible and
/// must bound the excess at every later point.
///
/// Wrapping needs a jump longer than `K - 2n`, so envelopes are written in
/// that length; `n < K/4` keeps it above `K/2`.
#[allow(clippy::too_many_arguments)]
fn toral_correction(
    id: &'static str,
    what: &str,
    p: &Params,
    rec: &mut Recorder,
    table: fn(&Walk, f64) -> Result<Table, VerifyError>,
    envelope: fn(f64, f64, f64) -> f64,
    envelope_name: &str,
    relative: bool,
) -> Result<Vec<CheckResult>, VerifyError> {
    let opts = rec.opts();
    let mut ks = p.ints("K")?;
    ks.sort_unstable();
    let ns = p.floats("n")?;
    let mut rows = Vec::new();
    for law in laws(p)? {
        let name = law.name().to_string();
        let m = law.moment_order();
        let mut planar: BTreeMap<u64, Table> = BTreeMap::new();
        for &n in &ns {
            planar.insert(n.to_bits(), table(&walk(&law, Ambient::Plane, opts)?, n)?);
        }
        let mut c: Option<f64> = None;
        for &k in &ks {
            for &n in &ns {
                let template = CheckResult::new(id, &name, what).k(k).n(n);
                let base = &planar[&n.to_bits()];
                point(&mut rows, template.clone(), || {
                    let toral = table(&walk(&law, Ambient::Torus(k), opts)?, n)?;
                    compare(
                        template.clone(),
                        &law,
                        k,
                        n,
                        base,
                        &toral,
                        relative,
                        m,
                        envelope,
                        envelope_name,
                        &mut c,
                        rec,
                    )
                })?;
            }
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn compare(
    template: CheckResult,
    law: &StepLaw,
    k: i64,
    n: f64,
    planar: &Table,
    toral: &Table,
    relative: bool,
    m: f64,
    envelope: fn(f64, f64, f64) -> f64,
    envelope_name: &str,
    c: &mut Option<f64>,
    rec: &mut Recorder,
) -> Result<Vec<CheckResult>, VerifyError> {
    let lookup: BTreeMap<LatticePoint, f64> = toral.iter().copied().collect();
    let scale = planar.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max).max(1e-300);
    let mut max_abs: (f64, LatticePoint) = (0.0, LatticePoint::ORIGIN);
    let mut min_diff: (f64, LatticePoint) = (f64::INFINITY, LatticePoint::ORIGIN);
    let mut max_diff: (f64, LatticePoint) = (f64::NEG_INFINITY, LatticePoint::ORIGIN);
    for &(x, v) in planar {
        let Some(&t) = lookup.get(&x) else {
            return Err(VerifyError::Constants(format!("toral table lacks the planar state {x}")));
        };
        let d = t - v;
        let rel = if relative { d.abs() / v.abs().max(1e-300) } else { d.abs() };
        if rel > max_abs.0 {
            max_abs = (rel, x);
        }
        if d < min_diff.0 {
            min_diff = (d, x);
        }
        if d > max_diff.0 {
            max_diff = (d, x);
        }
    }
    let name = law.name();
    if law.cannot_wrap(k, n) {
        let kind = if relative { "relative" } else { "absolute" };
        return Ok(vec![template
            .clone()
            .x(max_abs.1)
            .constant("max_step", law.max_step())
            .tolerance(format!("exact equality to solver tolerance 1e-10 ({kind})"))
            .note("the law cannot jump across K - 2n")
            .at_most(max_abs.0, 1e-10)]);
    }
    let env = envelope(k as f64, n, m);
    let mut rows = vec![template
        .clone()
        .x(min_diff.1)
        .tolerance("toral >= planar up to solver slack 1e-9 of the largest value")
        .note("min_x (toral - planar)")
        .at_least(min_diff.0, -SOLVER_SLACK * scale)];
    let ratio = max_diff.0.max(0.0) / env;
    match *c {
        None => {
            let fitted = rec.freeze(name, "c", ratio);
            *c = Some(fitted);
            rows.push(
                template
                    .x(max_diff.1)
                    .constant("c", fitted)
                    .formula(fitted * env)
                    .tolerance(format!("c = max_x (toral - planar) / {envelope_name} fitted at this point"))
                    .note("envelope fit")
                    .at_most(max_diff.0, fitted * env * (1.0 + SOLVER_SLACK)),
            );
        }
        Some(fitted) => rows.push(
            template
                .x(max_diff.1)
                .constant("c", fitted)
                .formula(fitted * env)
                .tolerance(format!(
                    "max_x (toral - planar) <= c {envelope_name} with c frozen at the first wrapping point"
                ))
                .note("envelope validation")
                .at_most(max_diff.0, fitted * env + SOLVER_SLACK * scale),
        ),
    }
    Ok(rows)
}

pub(in crate::verify) fn escape_toral_correction(
    p: &Params,
    rec: &mut Recorder,
) -> Result<Vec<CheckResult>, VerifyError> {
    toral_correction(
        "escape-toral-correction",
        "E^x T_esc toral vs planar",
        p,
        rec,
        exit_table,
        |k, n, m| (k - 2.0 * n).powf(-m) * n.powi(4),
        "(K-2n)^-M n^4",
        true,
    )
}

pub(in crate::verify) fn hit_zero_first(p: &Params, rec: &mut Recorder) -> Result<Vec<CheckResult>, VerifyError> {
    toral_correction(
        "hit-zero-first",
        "P^x(T_0 < T_esc) toral vs planar",
        p,
        rec,
        hit_zero_table,
        |k, n, m| (k - 2.0 * n).powf(-m) * n * n,
        "(K-2n)^-M n^2",
        false,
    )
}

/// One fitted constant per scale, positive and finite, then stable across consecutive scales.
fn per_scale_constant(rows: &mut Vec<CheckResult>, series: &mut Vec<(CheckResult, f64)>, row: CheckResult, value: f64) {
    rows.push(
        row.clone()
            .constant("A", value)
            .tolerance("fitted constant positive and finite")
            .at_least(value, f64::MIN_POSITIVE),
    );
    series.push((row, value));
}

pub(in crate::verify) fn prob_zero_before_disc(
    p: &Params,
    rec: &mut Recorder,
) -> Result<Vec<CheckResult>, VerifyError> {
    const ID: &str = "prob-zero-before-disc";
    let opts = rec.opts();
    let mut rows = Vec::new();
    for law in laws(p)? {
        let name = law.name().to_string();
        let quantity = "A(n) = log n * max_x |P^x(T_0 < T_esc) - log(n/|x|)/log n|";
        let template = CheckResult::new(ID, &name, quantity);
        let mut series = Vec::new();
        for (ambient, n) in scales(p)? {
            point(&mut rows, at(template.clone(), ambient, n), || {
                let table = hit_zero_table(&walk(&law, ambient, opts)?, n)?;
                let ln = n.ln();
                let (mut worst, mut wx) = (0.0, LatticePoint::ORIGIN);
                for &(x, v) in &table {
                    let f = (n / ambient.norm(x)).ln() / ln;
                    if (v - f).abs() > worst {
                        worst = (v - f).abs();
                        wx = x;
                    }
                }
                let mut out = Vec::new();
                per_scale_constant(&mut out, &mut series, at(template.clone(), ambient, n).x(wx), worst * ln);
                Ok(out)
            })?;
        }
        rows.extend(stability_rows(&template, &series, STABILITY_TIGHT));
    }
    Ok(rows)
}

pub(in crate::verify) fn inner_hit_bounds(p: &Params, rec: &mut Recorder) -> Result<Vec<CheckResult>, VerifyError> {
    const ID: &str = "inner-hit-bounds";
    let opts = rec.opts();
    let delta = p.float_or("delta", 0.25)?;
    let eps = p.float_or("epsilon", 0.5)?;
    if !(0.0 < delta && delta < eps && eps < 1.0) {
        return Ok(vec![CheckResult::new(ID, "", "parameters")
            .skip(format!("need 0 < delta < epsilon < 1, got delta = {delta}, epsilon = {eps}"))]);
    }
    let mut rows = Vec::new();
    for law in laws(p)? {
        let name = law.name().to_string();
        let quantity = "P^x(T_D(delta n) < T_esc) n / (rho(x) v 1)";
        let c1_t = CheckResult::new(ID, &name, format!("c1 = min_x {quantity}"));
        let c2_t = CheckResult::new(ID, &name, format!("c2 = max_x {quantity}"));
        let (mut s1, mut s2) = (Vec::new(), Vec::new());
        for (ambient, n) in scales(p)? {
            point(&mut rows, at(c1_t.clone(), ambient, n), || {
                let w = walk(&law, ambient, opts)?;
                let h = hit_probabilities(&w, &disc(ambient, delta * n)?, &disc(ambient, n)?.complement())?;
                let (c1, c2) = ratio_range(h.system.domain().states(), &h.values, ambient, n, eps);
                s1.push((at(c1_t.clone(), ambient, n), c1.0));
                s2.push((at(c2_t.clone(), ambient, n), c2.0));
                Ok(vec![at(c1_t.clone(), ambient, n)
                    .x(c1.1)
                    .constant("c1", c1.0)
                    .constant("c2", c2.0)
                    .constant("delta", delta)
                    .constant("epsilon", eps)
                    .tolerance("0 < c1 <= c2 < infinity")
                    .within(c1.0, f64::MIN_POSITIVE, c2.0)])
            })?;
        }
        rows.extend(stability_rows(&c1_t, &s1, STABILITY_TIGHT));
        rows.extend(stability_rows(&c2_t, &s2, STABILITY_TIGHT));
    }
    Ok(rows)
}

/// Extremes of `value(x) n / (rho(x) v 1)` over states with `|x| > eps n`.
pub(super) fn ratio_range(
    states: &[LatticePoint],
    values: &[f64],
    ambient: Ambient,
    n: f64,
    eps: f64,
) -> ((f64, LatticePoint), (f64, LatticePoint)) {
    let mut lo = (f64::INFINITY, LatticePoint::ORIGIN);
    let mut hi = (f64::NEG_INFINITY, LatticePoint::ORIGIN);
    for (&x, &v) in states.iter().zip(values) {
        let r = ambient.norm(x);
        if r <= eps * n {
            continue;
        }
        let ratio = v * n / (n - r).max(1.0);
        if ratio < lo.0 {
            lo = (ratio, x);
        }
        if ratio > hi.0 {
            hi = (ratio, x);
        }
    }
    (lo, hi)
}
