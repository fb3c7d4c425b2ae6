//! `solve`: exact quantities from absorbing-chain solves.
//!
//! Every subcommand prints the same long-format columns, one value per row.

use clap::{Args, Subcommand};
use toruswalk::exact::{
    annulus_psi, annulus_stats, entrance_times, exit_times, external_green, green_column, hit_probabilities,
    hitting_distribution, potential_kernel, Domain, Walk,
};
use toruswalk::geometry::{Ambient, LatticePoint, Region};

use crate::table::{num, Table};
use crate::{CliError, GeoArgs, Setup, PREFIX};

#[derive(Debug, Subcommand)]
pub enum SolveCmd {
    /// G_D(0,n)(x, y) for each start x.
    Green(GeoArgs),
    /// Expected exit time of D(0,n) from each start.
    ExitTime(GeoArgs),
    /// P(T_D(0,r) < T_D(0,R)^c) with --r/--R, else P(T_0 < T_D(0,n)^c).
    Hitprob(GeoArgs),
    /// Law of the exit position of D(0,n), or of the absorbing set D(0,r) + D(0,R)^c with --r/--R.
    Hitdist(GeoArgs),
    /// Potential kernel a(x) at each start (plane only).
    PotentialKernel(PotentialArgs),
    /// G_D(0,n)^c(x, x) on the torus.
    ExternalGreen(GeoArgs),
    /// Expected entrance time of D(0,n): on the torus, or before leaving D(0,R) in the plane.
    Entrance(GeoArgs),
    /// Two-crossing quantities of the annulus n < |x| <= n+s.
    AnnulusStats(GeoArgs),
}

#[derive(Debug, Args)]
pub struct PotentialArgs {
    #[command(flatten)]
    geo: GeoArgs,
    /// Number of partial-sum terms.
    #[arg(long, default_value_t = 20_000)]
    t_max: usize,
    /// Accuracy claimed; oscillation of ten times this flags the result.
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
}

impl SolveCmd {
    pub fn name(&self) -> &'static str {
        match self {
            SolveCmd::Green(_) => "green",
            SolveCmd::ExitTime(_) => "exit-time",
            SolveCmd::Hitprob(_) => "hitprob",
            SolveCmd::Hitdist(_) => "hitdist",
            SolveCmd::PotentialKernel(_) => "potential-kernel",
            SolveCmd::ExternalGreen(_) => "external-green",
            SolveCmd::Entrance(_) => "entrance",
            SolveCmd::AnnulusStats(_) => "annulus-stats",
        }
    }

    pub fn geo(&self) -> &GeoArgs {
        match self {
            SolveCmd::Green(g)
            | SolveCmd::ExitTime(g)
            | SolveCmd::Hitprob(g)
            | SolveCmd::Hitdist(g)
            | SolveCmd::ExternalGreen(g)
            | SolveCmd::Entrance(g)
            | SolveCmd::AnnulusStats(g) => g,
            SolveCmd::PotentialKernel(p) => &p.geo,
        }
    }
}

fn header() -> Vec<&'static str> {
    let mut h = PREFIX.to_vec();
    h.extend(["quantity", "value"]);
    h
}

struct Rows<'a> {
    setup: &'a Setup,
    table: Table,
}

impl Rows<'_> {
    fn push(&mut self, x: Option<LatticePoint>, y: Option<LatticePoint>, quantity: &str, value: f64) {
        let mut row = self.setup.prefix(x, y);
        row.extend([quantity.to_string(), num(value)]);
        self.table.push(row);
    }
}

/// `(target, forbidden)` of the hitting problem the flags describe.
fn hit_sets(s: &Setup) -> Result<(Region, Region, &'static str), CliError> {
    let g = &s.cfg.geometry;
    match (g.r, g.big_r) {
        (Some(r), Some(big_r)) => Ok((s.disc(r)?, s.disc(big_r)?.complement(), "P(hit D(r) before leaving D(R))")),
        (None, None) => {
            let n = s.n()?;
            Ok((Region::point(LatticePoint::ORIGIN), s.disc(n)?.complement(), "P(hit 0 before leaving D(n))"))
        }
        _ => Err(CliError::usage("--r and --R go together")),
    }
}

pub fn run(cmd: SolveCmd, s: Setup) -> Result<(), CliError> {
    let walk = Walk::new(&s.law, s.ambient, s.cfg.solver)?;
    let mut out = Rows { setup: &s, table: Table::new(&header()) };
    let mut flagged = None;
    match &cmd {
        SolveCmd::Green(_) => {
            let n = s.n()?;
            let sys = walk.system(Domain::from_region(s.ambient, &s.disc(n)?)?)?;
            let y = s.ambient.canonical(s.y());
            let col = green_column(&sys, y)?;
            for x in s.starts() {
                let i = sys.domain().require(s.ambient.canonical(x))?;
                out.push(Some(x), Some(y), "G_D(n)(x,y)", col[i]);
            }
        }
        SolveCmd::ExitTime(_) => {
            let n = s.n()?;
            let sys = walk.system(Domain::from_region(s.ambient, &s.disc(n)?)?)?;
            let t = exit_times(&sys)?;
            for x in s.starts() {
                let i = sys.domain().require(s.ambient.canonical(x))?;
                out.push(Some(x), None, "E[T_exit D(n)]", t[i]);
            }
        }
        SolveCmd::Hitprob(_) => {
            let (target, forbidden, q) = hit_sets(&s)?;
            let table = hit_probabilities(&walk, &target, &forbidden)?;
            for x in s.starts() {
                out.push(Some(x), None, q, table.get(x));
            }
        }
        SolveCmd::Hitdist(_) => {
            let g = &s.cfg.geometry;
            let absorbing = match (g.r, g.big_r) {
                (Some(r), Some(big_r)) => s.disc(r)?.union(s.disc(big_r)?.complement()),
                (None, None) => s.disc(s.n()?)?.complement(),
                _ => return Err(CliError::usage("--r and --R go together")),
            };
            for x in s.starts() {
                let dist = hitting_distribution(&walk, &absorbing, x)?;
                for &(y, w) in &dist.masses {
                    out.push(Some(x), Some(y), "P(S_T = y)", w);
                }
                out.push(Some(x), None, "total mass", dist.total());
            }
        }
        SolveCmd::PotentialKernel(p) => {
            if s.ambient != Ambient::Plane {
                return Err(CliError::usage("the potential kernel is planar; drop --K"));
            }
            let pts = s.starts();
            let t = potential_kernel(&s.law, &pts, p.t_max, p.tolerance)?;
            for (i, &x) in pts.iter().enumerate() {
                out.push(Some(x), None, "a(x)", t.values[i]);
                out.push(Some(x), None, "oscillation", t.oscillation[i]);
            }
            if t.flagged {
                flagged = Some(format!("partial sums oscillate by at least 10 x {}; raise --t-max", p.tolerance));
            }
        }
        SolveCmd::ExternalGreen(_) => {
            s.torus_side()?;
            let xs = s.starts();
            let g = external_green(&walk, s.n()?, &xs)?;
            for (x, v) in xs.iter().zip(g) {
                out.push(Some(*x), Some(*x), "G_D(n)^c(x,x)", v);
            }
        }
        SolveCmd::Entrance(_) => {
            let target = s.disc(s.n()?)?;
            let cap = match s.ambient {
                Ambient::Torus(_) => None,
                Ambient::Plane => Some(Region::disc(s.require(s.cfg.geometry.big_r, "R")?)),
            };
            let (sys, t) = entrance_times(&walk, &target, cap.as_ref())?;
            for y in s.starts() {
                let v = match sys.domain().index(s.ambient.canonical(y)) {
                    Some(i) => t[i],
                    None if target.contains(s.ambient, s.ambient.canonical(y)) => 0.0,
                    None => return Err(CliError::usage(format!("start {y} lies outside the outer cap"))),
                };
                out.push(Some(y), None, "E[T_enter D(n)]", v);
            }
        }
        SolveCmd::AnnulusStats(_) => {
            let n = s.n()?;
            let w = s.require(s.cfg.geometry.s, "s")?;
            match s.ambient {
                Ambient::Torus(_) => {
                    let st = annulus_stats(&walk, n, w)?;
                    for (q, v) in [
                        ("psi", st.psi),
                        ("psi_disc", st.psi_disc),
                        ("sigma", st.sigma),
                        ("rho_half", st.rho_half),
                        ("rho_max", st.rho_max),
                        ("phi_max", st.phi_max),
                    ] {
                        out.push(None, None, q, v);
                    }
                }
                Ambient::Plane => {
                    let (psi, psi_disc) = annulus_psi(&walk, n, w)?;
                    out.push(None, None, "psi", psi);
                    out.push(None, None, "psi_disc", psi_disc);
                }
            }
        }
    }
    out.table.emit(s.cfg.out.as_deref(), &s.out_name())?;
    match flagged {
        Some(m) => Err(CliError::Numerical(m)),
        None => Ok(()),
    }
}
