//! Acceptance criteria 1 to 10, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines reach the terminal
//! uncaptured. Exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use toruswalk::exact::{exit_times, green, hit_probabilities, Domain, Walk};
use toruswalk::geometry::{Ambient, LatticePoint, Region};
use toruswalk::law::{lazy_srw, power_law, srw, StepLaw};
use toruswalk::mc::{estimate, Statistic, StopSpec};
use toruswalk::verify::{run_check, CheckResult, Context, SweepGrid, Verdict};

type Outcome = Result<String, String>;

fn p(x1: i64, x2: i64) -> LatticePoint {
    LatticePoint::new(x1, x2)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Run one check on an inline grid section; fail on any failed row or on no passing row.
fn check(id: &str, section: &str) -> Result<(Vec<CheckResult>, Duration), String> {
    let grid = SweepGrid::parse(&format!("[{id}]\n{section}")).map_err(err)?;
    let t = Instant::now();
    let run = run_check(id, &grid, &Context::default()).map_err(err)?;
    let elapsed = t.elapsed();
    let failed: Vec<String> = run
        .results
        .iter()
        .filter(|r| r.verdict == Verdict::Fail)
        .map(|r| format!("{} (law {}, n {:?}, K {:?}): measured {}", r.quantity, r.law, r.n, r.k, r.measured))
        .collect();
    if !failed.is_empty() {
        return Err(format!("{} failed rows: {}", failed.len(), failed.join("; ")));
    }
    if !run.results.iter().any(|r| r.verdict == Verdict::Pass) {
        return Err("no row passed".into());
    }
    Ok((run.results, elapsed))
}

fn counts(rows: &[CheckResult]) -> String {
    let pass = rows.iter().filter(|r| r.verdict == Verdict::Pass).count();
    let skip = rows.iter().filter(|r| r.verdict == Verdict::Skip).count();
    format!("{pass} rows pass, {skip} skipped")
}

fn find<'a>(rows: &'a [CheckResult], needle: &str) -> Option<&'a CheckResult> {
    rows.iter().find(|r| r.quantity.contains(needle) && r.verdict != Verdict::Skip)
}

fn within_time(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    if elapsed < limit {
        Ok(format!("{detail}, {:.1}s", elapsed.as_secs_f64()))
    } else {
        Err(format!("{detail}, but took {:.1}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()))
    }
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let walk = Walk::plane(&srw()).map_err(err)?;
    let sys = walk.system(Domain::from_region(Ambient::Plane, &Region::disc(1.0)).map_err(err)?).map_err(err)?;
    let i = sys.domain().require(LatticePoint::ORIGIN).map_err(err)?;
    let e = exit_times(&sys).map_err(err)?[i];
    let g = green(&walk, sys.domain().clone()).map_err(err)?.get(LatticePoint::ORIGIN, LatticePoint::ORIGIN);
    if (e - 8.0 / 3.0).abs() > 1e-10 || (g - 4.0 / 3.0).abs() > 1e-10 {
        return Err(format!("exact E = {e}, G = {g}"));
    }
    let spec = StopSpec::new(Ambient::Plane).exit(Region::disc(1.0));
    let mc_t = estimate(&srw(), LatticePoint::ORIGIN, &spec, Statistic::Time, 100_000, 11).map_err(err)?;
    let mc_g = estimate(&srw(), LatticePoint::ORIGIN, &spec, Statistic::LocalTime(LatticePoint::ORIGIN), 100_000, 12)
        .map_err(err)?;
    let (zt, zg) = (mc_t.z_score(8.0 / 3.0), mc_g.z_score(4.0 / 3.0));
    if zt > 3.0 || zg > 3.0 {
        return Err(format!("MC mean {} (z {zt:.2}), visits {} (z {zg:.2})", mc_t.mean, mc_g.mean));
    }
    within_time(
        t.elapsed(),
        Duration::from_secs(60),
        format!("E = {e}, G = {g}; MC {:.5} (z {zt:.2}) and {:.5} (z {zg:.2})", mc_t.mean, mc_g.mean),
    )
}

fn criterion_2() -> Outcome {
    let (rows, el) = check("escape-bounds", "laws = srw; lazy_srw(0.3); power_law(1,64)\nn = 8, 16, 32, 64\n")?;
    within_time(el, Duration::from_secs(300), format!("zero violations, {}", counts(&rows)))
}

/// Largest `|toral - planar|` over escape times, Green tables and hit-zero probabilities.
fn toral_gap(law: &StepLaw, k: i64, n: f64) -> Result<f64, String> {
    let plane = Walk::plane(law).map_err(err)?;
    let torus = Walk::torus(law, k).map_err(err)?;
    let disc = Region::torus_disc(n, k).map_err(err)?;
    let dp = Domain::from_region(Ambient::Plane, &disc).map_err(err)?;
    let dt = Domain::from_region(Ambient::Torus(k), &disc).map_err(err)?;
    let mut gap: f64 = 0.0;

    let tp = exit_times(&plane.system(dp.clone()).map_err(err)?).map_err(err)?;
    let tt_sys = torus.system(dt.clone()).map_err(err)?;
    let tt = exit_times(&tt_sys).map_err(err)?;
    for (x, v) in dp.states().iter().zip(&tp) {
        gap = gap.max((tt[tt_sys.domain().require(*x).map_err(err)?] - v).abs());
    }

    let gp = green(&plane, dp.clone()).map_err(err)?;
    let gt = green(&torus, dt).map_err(err)?;
    for &x in dp.states() {
        for &y in dp.states() {
            gap = gap.max((gp.get(x, y) - gt.get(x, y)).abs());
        }
    }

    let zero = Region::point(LatticePoint::ORIGIN);
    let hp = hit_probabilities(&plane, &zero, &disc.clone().complement()).map_err(err)?;
    let ht = hit_probabilities(&torus, &zero, &disc.complement()).map_err(err)?;
    for &x in dp.states() {
        gap = gap.max((hp.get(x) - ht.get(x)).abs());
    }
    Ok(gap)
}

fn criterion_3() -> Outcome {
    let mut parts = Vec::new();
    for (k, n) in [(32, 7.0), (64, 15.0)] {
        let gap = toral_gap(&srw(), k, n)?;
        if gap > 1e-10 {
            return Err(format!("(K, n) = ({k}, {n}): toral and planar differ by {gap:e}"));
        }
        parts.push(format!("(K,n)=({k},{n}) max gap {gap:e}"));
    }
    Ok(parts.join(", "))
}

fn criterion_4() -> Outcome {
    let (rows, el) = check("green-zero-asymptotic", "laws = srw\nn = 16, 32, 64, 128, 256\n")?;
    let slope = find(&rows, "slope").map(|r| r.measured).ok_or("no slope row")?;
    within_time(el, Duration::from_secs(600), format!("slope {slope:.5} vs 2/pi = 0.63662, {}", counts(&rows)))
}

fn criterion_5() -> Outcome {
    let (rows, _) = check("gamblers-ruin", "laws = srw\npairs = 8:64, 16:128, 32:256\n")?;
    let a = rows.iter().flat_map(|r| &r.constants).find(|(k, _)| k == "A").map(|c| c.1).ok_or("A was not recorded")?;
    Ok(format!("A = {a:.4} fitted at (8,64), envelope holds at (16,128) and (32,256), {}", counts(&rows)))
}

fn criterion_6() -> Outcome {
    let (rows, _) = check("local-time", "laws = srw; power_law(1,64)\nK = 32\nn = 7\n")?;
    Ok(format!("moment identity and tail envelope hold for srw and power_law(1,64), {}", counts(&rows)))
}

fn criterion_7() -> Outcome {
    let (rows, _) = check("annulus-psi", "laws = power_law(1,64)\nn = 32\ns = 4, 8, 16, 32\nK = 256\n")?;
    let slope = find(&rows, "slope").map(|r| r.measured).ok_or("no slope row")?;
    let toral =
        rows.iter().filter(|r| r.k.is_some() && r.verdict == Verdict::Pass && r.quantity.contains("toral")).count();
    Ok(format!("planar slope {slope:.3} (target -4 +- 0.5), {toral} toral rows within 10%, {}", counts(&rows)))
}

fn criterion_8() -> Outcome {
    let (div, _) = check("entrance-divergence", "laws = srw\nn = 4\nN = 32, 64, 128, 256\n")?;
    let (tor, _) = check("entrance-toral", "laws = srw\nK = 32, 64, 128\n")?;
    let slope = tor.iter().find(|r| r.quantity.contains("against K")).map(|r| r.measured).ok_or("no K-scaling row")?;
    Ok(format!(
        "capped entrance increasing ({}); toral exponent {slope:.4} (2 +- 0.3) ({})",
        counts(&div),
        counts(&tor)
    ))
}

fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_toruswalk")).args(args).output().map_err(err)?;
    if !out.status.success() {
        return Err(format!(
            "`{}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn criterion_9(dir: &Path) -> Outcome {
    let mut parts = Vec::new();
    let d1 = dir.join("w1");
    let d8 = dir.join("w8");
    let a = cli(&["verify", "--all", "--workers", "1", "--out", d1.to_str().unwrap()])?;
    let b = cli(&["verify", "--all", "--workers", "8", "--out", d8.to_str().unwrap()])?;
    let (fa, fb) =
        (std::fs::read(d1.join("results.csv")).map_err(err)?, std::fs::read(d8.join("results.csv")).map_err(err)?);
    if a != b || fa != fb {
        return Err("verify --all output differs between 1 and 8 workers".into());
    }
    parts.push(format!("verify --all: {} identical bytes", a.len()));
    for mc in [
        "mc gamblers --law srw --r 5 --R 25 --start 11,0 --samples 100000 --seed 7",
        "mc worst-case --law power_law(1,64) --K 40 --n 9 --start 0,0 --y 3,0 --samples 20000 --seed 5",
        "mc escape --law lazy_srw(0.3) --K 32 --n 7 --start 0,0;3,4 --samples 20000 --seed 3",
    ] {
        let args: Vec<&str> = mc.split(' ').collect();
        let one = cli(&[args.as_slice(), &["--workers", "1"]].concat())?;
        let eight = cli(&[args.as_slice(), &["--workers", "8"]].concat())?;
        if one != eight {
            return Err(format!("`{mc}` differs between 1 and 8 workers"));
        }
        parts.push(format!("{} identical", args[..2].join(" ")));
    }
    Ok(parts.join("; "))
}

/// One exact value and the Monte Carlo problem that estimates it.
struct Pair {
    name: &'static str,
    law: StepLaw,
    start: LatticePoint,
    spec: StopSpec,
    statistic: Statistic,
    exact: f64,
}

fn battery() -> Result<Vec<Pair>, String> {
    let mut out = Vec::new();
    let exit = |law: &StepLaw, ambient: Ambient, n: f64, x: LatticePoint| -> Result<f64, String> {
        let w = Walk::new(law, ambient, Default::default()).map_err(err)?;
        let sys = w.system(Domain::from_region(ambient, &Region::disc(n)).map_err(err)?).map_err(err)?;
        Ok(exit_times(&sys).map_err(err)?[sys.domain().require(x).map_err(err)?])
    };
    let pl = power_law(1.0, 64).map_err(err)?;
    let lazy = lazy_srw(0.3).map_err(err)?;
    for (name, law, ambient, n, x) in [
        ("escape srw n=8", srw(), Ambient::Plane, 8.0, p(0, 0)),
        ("escape lazy n=8", lazy.clone(), Ambient::Plane, 8.0, p(3, 2)),
        ("escape power_law K=32 n=7", pl.clone(), Ambient::Torus(32), 7.0, p(0, 0)),
    ] {
        out.push(Pair {
            name,
            exact: exit(&law, ambient, n, x)?,
            spec: StopSpec::new(ambient).exit(Region::disc(n)),
            law,
            start: x,
            statistic: Statistic::Time,
        });
    }

    let w = Walk::plane(&srw()).map_err(err)?;
    let zero = Region::point(LatticePoint::ORIGIN);
    let h = hit_probabilities(&w, &zero, &Region::disc(8.0).complement()).map_err(err)?;
    out.push(Pair {
        name: "hit 0 before escape srw n=8",
        law: srw(),
        start: p(3, 0),
        spec: StopSpec::new(Ambient::Plane).enter(zero.clone()).exit(Region::disc(8.0)),
        statistic: Statistic::Hit(0),
        exact: h.get(p(3, 0)),
    });

    let g = hit_probabilities(&w, &Region::disc(5.0), &Region::disc(25.0).complement()).map_err(err)?;
    out.push(Pair {
        name: "gamblers srw 5:25",
        law: srw(),
        start: p(11, 0),
        spec: StopSpec::new(Ambient::Plane).enter(Region::disc(5.0)).exit(Region::disc(25.0)),
        statistic: Statistic::Hit(0),
        exact: g.get(p(11, 0)),
    });

    let wt = Walk::torus(&pl, 32).map_err(err)?;
    let gt = green(&wt, Domain::from_region(Ambient::Torus(32), &Region::disc(7.0)).map_err(err)?).map_err(err)?;
    out.push(Pair {
        name: "local time power_law K=32 n=7",
        law: pl,
        start: p(2, 1),
        spec: StopSpec::new(Ambient::Torus(32)).exit(Region::disc(7.0)),
        statistic: Statistic::LocalTime(LatticePoint::ORIGIN),
        exact: gt.get(p(2, 1), LatticePoint::ORIGIN),
    });

    let cap = Region::disc(20.0);
    let (sys, t) = toruswalk::exact::entrance_times(&w, &Region::disc(3.0), Some(&cap)).map_err(err)?;
    out.push(Pair {
        name: "capped entrance srw n=3 R=20",
        law: srw(),
        start: p(10, 0),
        spec: StopSpec::new(Ambient::Plane).enter(Region::disc(3.0)).exit(cap),
        statistic: Statistic::Time,
        exact: t[sys.domain().require(p(10, 0)).map_err(err)?],
    });
    Ok(out)
}

fn criterion_10() -> Outcome {
    const SEEDS: u64 = 100;
    const SAMPLES: usize = 2_000;
    let mut total = 0;
    let mut inside = 0;
    let mut worst = (0.0f64, "");
    let pairs = battery()?;
    for pair in &pairs {
        for seed in 0..SEEDS {
            let e = estimate(&pair.law, pair.start, &pair.spec, pair.statistic, SAMPLES, 1_000 + seed).map_err(err)?;
            let z = e.z_score(pair.exact);
            total += 1;
            if z <= 4.0 {
                inside += 1;
            }
            if z > worst.0 {
                worst = (z, pair.name);
            }
        }
    }
    let frac = inside as f64 / total as f64;
    let detail = format!(
        "{inside}/{total} estimates within 4 stderr over {} quantities x {SEEDS} seeds (largest z {:.2}, {})",
        pairs.len(),
        worst.0,
        worst.1
    );
    if frac >= 0.99 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("hand-solvable oracle", Box::new(criterion_1)),
        ("escape-bounds", Box::new(criterion_2)),
        ("finite-range toral equality", Box::new(criterion_3)),
        ("green-zero-asymptotic", Box::new(criterion_4)),
        ("gamblers-ruin", Box::new(criterion_5)),
        ("local-time", Box::new(criterion_6)),
        ("annulus-psi", Box::new(criterion_7)),
        ("entrance", Box::new(criterion_8)),
        ("determinism and parallel invariance", Box::new(|| criterion_9(dir.path()))),
        ("cross-method coherence", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
