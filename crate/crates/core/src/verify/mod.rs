//! The lemma harness: named checks, each evaluating one claim over a sweep grid.
//!
//! Every row carries its own predicate as a closed interval `[lower, upper]`
//! for the measured value; a row passes iff the measured value is finite and
//! lies in it, and every constant it reports is finite. Claims with unknown
//! constants are tested as exact identities, slope recovery in log
//! coordinates, or stability of a fitted constant under parameter doubling.

mod checks;
pub mod fit;
pub mod grid;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{ExactError, SolveOptions};
use crate::geometry::LatticePoint;
use crate::law::LawError;

pub use fit::{fit_constant, least_squares, Fit, FitError, FitModel};
pub use grid::{parse_point, GridError, Params, SweepGrid};

/// Relative stability allowed for the tighter fitted constants.
pub const STABILITY_TIGHT: f64 = 0.25;
/// Relative stability allowed for constants multiplying logarithmic envelopes.
pub const STABILITY_LOOSE: f64 = 0.5;
/// Relative slack for comparing two exact solves of tolerance `1e-10`.
pub const SOLVER_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown check `{0}`; run `verify --list` for the registry")]
    UnknownCheck(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad constants file: {0}")]
    Constants(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skip => "skip",
        })
    }
}

/// One verification row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: String,
    pub law: String,
    pub k: Option<i64>,
    pub n: Option<f64>,
    pub s: Option<f64>,
    pub r: Option<f64>,
    pub big_r: Option<f64>,
    pub x: Option<LatticePoint>,
    pub quantity: String,
    pub measured: f64,
    /// Value of the claimed formula or bound at this point, when there is one.
    pub formula: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub constants: Vec<(String, f64)>,
    /// The tolerance policy behind `lower` and `upper`.
    pub tolerance: String,
    pub verdict: Verdict,
    pub note: String,
}

impl CheckResult {
    pub fn new(check_id: &str, law: &str, quantity: impl Into<String>) -> Self {
        Self {
            check_id: check_id.to_string(),
            law: law.to_string(),
            k: None,
            n: None,
            s: None,
            r: None,
            big_r: None,
            x: None,
            quantity: quantity.into(),
            measured: f64::NAN,
            formula: None,
            lower: None,
            upper: None,
            constants: Vec::new(),
            tolerance: String::new(),
            verdict: Verdict::Skip,
            note: String::new(),
        }
    }

    pub fn k(mut self, k: i64) -> Self {
        self.k = Some(k);
        self
    }

    pub fn n(mut self, n: f64) -> Self {
        self.n = Some(n);
        self
    }

    pub fn s(mut self, s: f64) -> Self {
        self.s = Some(s);
        self
    }

    pub fn rr(mut self, r: f64, big_r: f64) -> Self {
        self.r = Some(r);
        self.big_r = Some(big_r);
        self
    }

    pub fn x(mut self, x: LatticePoint) -> Self {
        self.x = Some(x);
        self
    }

    pub fn formula(mut self, v: f64) -> Self {
        self.formula = Some(v);
        self
    }

    pub fn constant(mut self, name: &str, v: f64) -> Self {
        self.constants.push((name.to_string(), v));
        self
    }

    pub fn tolerance(mut self, t: impl Into<String>) -> Self {
        self.tolerance = t.into();
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.note = s.into();
        self
    }

    /// Judge `measured` against `[lower, upper]`.
    pub fn judge(mut self, measured: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        self.measured = measured;
        self.lower = lower;
        self.upper = upper;
        let inside =
            measured.is_finite() && lower.is_none_or(|lo| measured >= lo) && upper.is_none_or(|hi| measured <= hi);
        let constants_ok = self.constants.iter().all(|(_, v)| v.is_finite());
        self.verdict = if inside && constants_ok { Verdict::Pass } else { Verdict::Fail };
        self
    }

    pub fn at_most(self, measured: f64, upper: f64) -> Self {
        self.judge(measured, None, Some(upper))
    }

    pub fn at_least(self, measured: f64, lower: f64) -> Self {
        self.judge(measured, Some(lower), None)
    }

    pub fn within(self, measured: f64, lower: f64, upper: f64) -> Self {
        self.judge(measured, Some(lower), Some(upper))
    }

    /// `measured` within `rel` of `target`, relatively.
    pub fn near(self, measured: f64, target: f64, rel: f64) -> Self {
        let d = rel * target.abs();
        self.formula(target).within(measured, target - d, target + d)
    }

    /// `measured / reference` within `1 +- rel`.
    pub fn stable(self, measured: f64, reference: f64, rel: f64) -> Self {
        self.constant("reference", reference).within(measured / reference, 1.0 - rel, 1.0 + rel)
    }

    pub fn skip(mut self, reason: impl Into<String>) -> Self {
        self.verdict = Verdict::Skip;
        self.note = reason.into();
        self
    }
}

/// A constant fitted by a check, keyed by check, law and name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedConstant {
    pub check_id: String,
    pub law: String,
    pub name: String,
    pub value: f64,
}

/// Shared inputs of a verification run.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub opts: SolveOptions,
    /// Constants frozen by an earlier run on the same grid.
    pub frozen: BTreeMap<(String, String, String), f64>,
}

impl Context {
    pub fn new(opts: SolveOptions) -> Self {
        Self { opts, frozen: BTreeMap::new() }
    }

    /// Load frozen constants from a `constants.csv` written for the grid with hash `grid_hash`.
    pub fn load_frozen(&mut self, text: &str, grid_hash: &str) -> Result<usize, VerifyError> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let mut count = 0;
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != 5 {
                return Err(VerifyError::Constants(format!("expected 5 columns, found {}", rec.len())));
            }
            if &rec[0] != grid_hash {
                return Err(VerifyError::Constants(format!(
                    "constants were fitted on grid {} but this grid hashes to {grid_hash}",
                    &rec[0]
                )));
            }
            let v: f64 = rec[4].parse().map_err(|_| VerifyError::Constants(format!("bad value `{}`", &rec[4])))?;
            self.frozen.insert((rec[1].to_string(), rec[2].to_string(), rec[3].to_string()), v);
            count += 1;
        }
        Ok(count)
    }
}

/// Constants used while running one check.
#[derive(Debug)]
pub struct Recorder<'a> {
    ctx: &'a Context,
    check_id: &'static str,
    used: Vec<FittedConstant>,
}

impl<'a> Recorder<'a> {
    fn new(ctx: &'a Context, check_id: &'static str) -> Self {
        Self { ctx, check_id, used: Vec::new() }
    }

    pub fn opts(&self) -> SolveOptions {
        self.ctx.opts
    }

    /// The frozen value of `name` if one was loaded, else `fitted`; either way it is recorded.
    pub fn freeze(&mut self, law: &str, name: &str, fitted: f64) -> f64 {
        let key = (self.check_id.to_string(), law.to_string(), name.to_string());
        let v = self.ctx.frozen.get(&key).copied().unwrap_or(fitted);
        self.used.push(FittedConstant { check_id: key.0, law: key.1, name: key.2, value: v });
        v
    }
}

type CheckFn = fn(&Params, &mut Recorder) -> Result<Vec<CheckResult>, VerifyError>;

/// A registered check.
pub struct CheckInfo {
    pub id: &'static str,
    pub claim: &'static str,
    /// Keys its grid section may set.
    pub keys: &'static [&'static str],
    run: CheckFn,
}

impl fmt::Debug for CheckInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CheckInfo").field("id", &self.id).finish()
    }
}

pub fn registry() -> &'static [CheckInfo] {
    checks::REGISTRY
}

pub fn lookup(id: &str) -> Result<&'static CheckInfo, VerifyError> {
    registry().iter().find(|c| c.id == id).ok_or_else(|| VerifyError::UnknownCheck(id.to_string()))
}

/// Rows, constants and wall time of one check.
#[derive(Debug, Clone)]
pub struct CheckRun {
    pub check_id: String,
    pub results: Vec<CheckResult>,
    pub constants: Vec<FittedConstant>,
    pub runtime: Duration,
}

/// Reject sections that name unregistered checks or keys a check does not read.
pub fn validate_grid(grid: &SweepGrid) -> Result<(), VerifyError> {
    for (name, sec) in &grid.sections {
        let info = lookup(name)?;
        for key in sec.keys() {
            if !info.keys.contains(&key.as_str()) {
                return Err(GridError::BadValue {
                    section: name.clone(),
                    key: key.clone(),
                    msg: format!("not read by this check (allowed: {})", info.keys.join(", ")),
                }
                .into());
            }
        }
    }
    Ok(())
}

pub fn run_check(id: &str, grid: &SweepGrid, ctx: &Context) -> Result<CheckRun, VerifyError> {
    let info = lookup(id)?;
    validate_grid(grid)?;
    let start = Instant::now();
    let mut rec = Recorder::new(ctx, info.id);
    let results = match grid.params(info.id) {
        Some(p) => (info.run)(&p, &mut rec)?,
        None => vec![CheckResult::new(info.id, "", "grid").skip("no section for this check in the grid")],
    };
    Ok(CheckRun { check_id: info.id.to_string(), results, constants: rec.used, runtime: start.elapsed() })
}

/// Every registered check, concurrently, in registry order.
pub fn run_all(grid: &SweepGrid, ctx: &Context) -> Result<Vec<CheckRun>, VerifyError> {
    validate_grid(grid)?;
    registry().par_iter().map(|c| run_check(c.id, grid, ctx)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub points: usize,
    pub passes: usize,
    pub failures: usize,
    pub skips: usize,
}

pub fn summarize(runs: &[CheckRun]) -> BTreeMap<String, Counts> {
    let mut out = BTreeMap::new();
    for run in runs {
        let c: &mut Counts = out.entry(run.check_id.clone()).or_default();
        for r in &run.results {
            c.points += 1;
            match r.verdict {
                Verdict::Pass => c.passes += 1,
                Verdict::Fail => c.failures += 1,
                Verdict::Skip => c.skips += 1,
            }
        }
    }
    out
}

pub fn all_passed(runs: &[CheckRun]) -> bool {
    runs.iter().flat_map(|r| &r.results).all(|r| r.verdict != Verdict::Fail)
}

/// Round-trip formatting that stays short for moderate magnitudes.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub const CSV_HEADER: [&str; 19] = [
    "check_id",
    "law",
    "K",
    "n",
    "s",
    "r",
    "R",
    "x1",
    "x2",
    "quantity",
    "measured",
    "formula",
    "lower",
    "upper",
    "constants",
    "tolerance",
    "verdict",
    "note",
    "predicate",
];

impl CheckResult {
    pub fn csv_record(&self) -> Vec<String> {
        let constants =
            self.constants.iter().map(|(k, v)| format!("{k}={}", fmt_num(*v))).collect::<Vec<_>>().join(";");
        let predicate = match (self.lower, self.upper) {
            (Some(_), Some(_)) => "lower <= measured <= upper",
            (Some(_), None) => "measured >= lower",
            (None, Some(_)) => "measured <= upper",
            (None, None) => "",
        };
        vec![
            self.check_id.clone(),
            self.law.clone(),
            self.k.map(|k| k.to_string()).unwrap_or_default(),
            opt_num(self.n),
            opt_num(self.s),
            opt_num(self.r),
            opt_num(self.big_r),
            self.x.map(|p| p.x1.to_string()).unwrap_or_default(),
            self.x.map(|p| p.x2.to_string()).unwrap_or_default(),
            self.quantity.clone(),
            if self.verdict == Verdict::Skip && self.measured.is_nan() {
                String::new()
            } else {
                fmt_num(self.measured)
            },
            opt_num(self.formula),
            opt_num(self.lower),
            opt_num(self.upper),
            constants,
            self.tolerance.clone(),
            self.verdict.to_string(),
            self.note.clone(),
            predicate.to_string(),
        ]
    }
}

pub fn write_results_csv<W: Write>(out: W, runs: &[CheckRun]) -> Result<(), VerifyError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in runs.iter().flat_map(|r| &r.results) {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_constants_csv<W: Write>(out: W, grid_hash: &str, runs: &[CheckRun]) -> Result<(), VerifyError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["grid_hash", "check_id", "law", "name", "value"])?;
    for c in runs.iter().flat_map(|r| &r.constants) {
        w.write_record([grid_hash, &c.check_id, &c.law, &c.name, &format!("{:e}", c.value)])?;
    }
    w.flush()?;
    Ok(())
}

/// Write `results.csv`, `summary.json` and `constants.csv` into `dir`.
pub fn write_outputs(dir: &Path, grid: &SweepGrid, runs: &[CheckRun]) -> Result<(), VerifyError> {
    std::fs::create_dir_all(dir)?;
    write_results_csv(std::fs::File::create(dir.join("results.csv"))?, runs)?;
    write_constants_csv(std::fs::File::create(dir.join("constants.csv"))?, &grid.hash(), runs)?;
    let summary = serde_json::to_string_pretty(&summarize(runs)).expect("counts serialize");
    std::fs::write(dir.join("summary.json"), summary + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicates() {
        let r = CheckResult::new("c", "srw", "q").at_most(1.0, 1.0);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(CheckResult::new("c", "srw", "q").at_most(1.0 + 1e-12, 1.0).verdict, Verdict::Fail);
        assert_eq!(CheckResult::new("c", "srw", "q").at_least(f64::NAN, 0.0).verdict, Verdict::Fail);
        assert_eq!(CheckResult::new("c", "srw", "q").near(1.01, 1.0, 0.02).verdict, Verdict::Pass);
        assert_eq!(CheckResult::new("c", "srw", "q").stable(1.3, 1.0, 0.25).verdict, Verdict::Fail);
        let r = CheckResult::new("c", "srw", "q").constant("c", f64::INFINITY).at_most(0.0, 1.0);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.0, 8.0 / 3.0, 1e-7, -3.5e20, 123456.789, 0.6375] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_num(8.0), "8");
        assert_eq!(fmt_num(1e-7), "1e-7");
    }

    #[test]
    fn unknown_checks_and_keys_are_rejected() {
        let g = SweepGrid::parse("[no-such-check]\nn = 1\n").unwrap();
        assert!(matches!(validate_grid(&g), Err(VerifyError::UnknownCheck(_))));
        let g = SweepGrid::parse("[escape-bounds]\nbogus = 1\n").unwrap();
        assert!(matches!(validate_grid(&g), Err(VerifyError::Grid(_))));
        assert!(matches!(lookup("nope"), Err(VerifyError::UnknownCheck(_))));
    }

    #[test]
    fn missing_section_is_a_skip() {
        let run = run_check("local-time", &SweepGrid::default(), &Context::default()).unwrap();
        assert_eq!(run.results.len(), 1);
        assert_eq!(run.results[0].verdict, Verdict::Skip);
    }

    #[test]
    fn frozen_constants_need_the_same_grid() {
        let mut ctx = Context::default();
        let text = "grid_hash,check_id,law,name,value\nabc,gamblers-ruin,srw,A,1.5e-1\n";
        assert_eq!(ctx.load_frozen(text, "abc").unwrap(), 1);
        let mut rec = Recorder::new(&ctx, "gamblers-ruin");
        assert_eq!(rec.freeze("srw", "A", 9.0), 0.15);
        assert_eq!(rec.freeze("srw", "B", 9.0), 9.0);
        assert!(Context::default().load_frozen(text, "other").is_err());
    }
}
