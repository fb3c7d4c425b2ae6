//! `mc`: Monte Carlo estimates with standard errors.

use clap::{Args, Subcommand};
use rayon::prelude::*;
use toruswalk::geometry::{Ambient, LatticePoint, Region};
use toruswalk::mc::{
    estimate, trajectory_seed, worst_case_walk, Estimate, McError, Statistic, StopSpec, DEFAULT_CAP,
    DEFAULT_CAP_FRACTION,
};

use crate::table::{num, Table};
use crate::{CliError, GeoArgs, McArgs, Setup, PREFIX};

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Args)]
pub struct McFlags {
    #[command(flatten)]
    geo: GeoArgs,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Debug, Subcommand)]
pub enum McCmd {
    /// Exit time of D(0,n).
    Escape(McFlags),
    /// Entrance time of D(0,n): on the torus, or stopped on leaving D(0,R) in the plane.
    Entry(McFlags),
    /// Indicator of entering D(0,r) before leaving D(0,R).
    Gamblers(McFlags),
    /// Visits to --y (default 0) before leaving D(0,n).
    LocalTime(McFlags),
    /// Escape from D(0,n) when steps longer than K-2n are sent back to --y.
    WorstCase(McFlags),
}

impl McCmd {
    fn flags(&self) -> &McFlags {
        match self {
            McCmd::Escape(f) | McCmd::Entry(f) | McCmd::Gamblers(f) | McCmd::LocalTime(f) | McCmd::WorstCase(f) => f,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            McCmd::Escape(_) => "escape",
            McCmd::Entry(_) => "entry",
            McCmd::Gamblers(_) => "gamblers",
            McCmd::LocalTime(_) => "local-time",
            McCmd::WorstCase(_) => "worst-case",
        }
    }

    pub fn geo(&self) -> &GeoArgs {
        &self.flags().geo
    }

    pub fn mc(&self) -> &McArgs {
        &self.flags().mc
    }
}

fn header() -> Vec<&'static str> {
    let mut h = PREFIX.to_vec();
    h.extend(["quantity", "mean", "stderr", "ci95_lo", "ci95_hi", "n_samples", "cap_hits", "flagged", "seed"]);
    h
}

struct Rows<'a> {
    setup: &'a Setup,
    table: Table,
    flagged: Vec<String>,
}

impl Rows<'_> {
    fn push(&mut self, x: LatticePoint, y: Option<LatticePoint>, quantity: &str, e: &Estimate) {
        let mut row = self.setup.prefix(Some(x), y);
        row.extend([
            quantity.to_string(),
            num(e.mean),
            num(e.stderr),
            num(e.ci95.0),
            num(e.ci95.1),
            e.n_samples.to_string(),
            e.cap_hits.to_string(),
            e.flagged.to_string(),
            e.master_seed.to_string(),
        ]);
        self.table.push(row);
        if e.flagged {
            self.flagged
                .push(format!("{quantity} from {x}: {} of {} trajectories hit the step cap", e.cap_hits, e.n_samples));
        }
    }
}

pub fn run(cmd: McCmd, s: Setup) -> Result<(), CliError> {
    let samples = s.cfg.mc.samples.unwrap_or(DEFAULT_SAMPLES);
    let seed = s.cfg.mc.seed.unwrap_or(DEFAULT_SEED);
    let cap = s.cfg.mc.cap.unwrap_or(DEFAULT_CAP);
    let g = &s.cfg.geometry;
    let mut out = Rows { setup: &s, table: Table::new(&header()), flagged: Vec::new() };
    let plain = |spec: StopSpec| spec.cap(cap);
    match &cmd {
        McCmd::Escape(_) => {
            let spec = plain(StopSpec::new(s.ambient).exit(s.disc(s.n()?)?));
            for x in s.starts() {
                let e = estimate(&s.law, x, &spec, Statistic::Time, samples, seed)?;
                out.push(x, None, "T_exit D(n)", &e);
            }
        }
        McCmd::Entry(_) => {
            let mut spec = StopSpec::new(s.ambient).enter(s.disc(s.n()?)?);
            if s.ambient == Ambient::Plane {
                spec = spec.exit(Region::disc(s.require(g.big_r, "R")?));
            }
            let spec = plain(spec);
            for x in s.starts() {
                let e = estimate(&s.law, x, &spec, Statistic::Time, samples, seed)?;
                out.push(x, None, "T_enter D(n)", &e);
            }
        }
        McCmd::Gamblers(_) => {
            let (r, big_r) = (s.require(g.r, "r")?, s.require(g.big_r, "R")?);
            let spec = plain(StopSpec::new(s.ambient).enter(s.disc(r)?).exit(s.disc(big_r)?));
            for x in s.starts() {
                let e = estimate(&s.law, x, &spec, Statistic::Hit(0), samples, seed)?;
                out.push(x, None, "1{hit D(r) before leaving D(R)}", &e);
            }
        }
        McCmd::LocalTime(_) => {
            let spec = plain(StopSpec::new(s.ambient).exit(s.disc(s.n()?)?));
            let y = s.y();
            for x in s.starts() {
                let e = estimate(&s.law, x, &spec, Statistic::LocalTime(y), samples, seed)?;
                out.push(x, Some(y), "visits to y before leaving D(n)", &e);
            }
        }
        McCmd::WorstCase(_) => {
            let k = s.torus_side()?;
            let n = s.n()?;
            let y = s.y();
            if samples < 100 {
                return Err(McError::TooFewSamples(samples).into());
            }
            for x in s.starts() {
                let runs = (0..samples as u64)
                    .into_par_iter()
                    .map(|i| worst_case_walk(&s.law, k, n, y, x, trajectory_seed(seed, i)))
                    .collect::<Result<Vec<_>, _>>()?;
                let capped = runs.iter().filter(|r| r.capped).count();
                let est = |v: &[f64]| Estimate::from_samples(v, seed, capped, DEFAULT_CAP_FRACTION);
                let col = |f: fn(&toruswalk::mc::WorstCaseRun) -> f64| runs.iter().map(f).collect::<Vec<_>>();
                out.push(x, Some(y), "tau", &est(&col(|r| r.tau as f64)));
                out.push(x, Some(y), "planar tau", &est(&col(|r| r.planar_tau as f64)));
                out.push(x, Some(y), "relocations", &est(&col(|r| r.relocations as f64)));
                out.push(x, Some(y), "1{relocated}", &est(&col(|r| f64::from(u8::from(r.relocations > 0)))));
                let given: Vec<f64> = runs.iter().filter(|r| r.relocations > 0).map(|r| r.relocations as f64).collect();
                if given.len() >= 2 {
                    out.push(x, Some(y), "relocations | relocated", &est(&given));
                }
            }
        }
    }
    out.table.emit(s.cfg.out.as_deref(), &s.out_name())?;
    if out.flagged.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("flagged estimate: {}", out.flagged.join("; "))))
    }
}
