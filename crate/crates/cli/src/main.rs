//! `toruswalk`: exact and Monte Carlo random-walk computations from the shell.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 usage or
//! configuration error, 3 numerical failure or flagged estimate.

mod law_cmd;
mod mc;
mod report_cmd;
mod solve;
mod table;
mod verify_cmd;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toruswalk::config::{ConfigError, RunConfig};
use toruswalk::exact::ExactError;
use toruswalk::geometry::{Ambient, GeometryError, LatticePoint, Region};
use toruswalk::law::{LawError, LawFileError, LawSpec, StepLaw};
use toruswalk::mc::McError;
use toruswalk::report::ReportError;
use toruswalk::verify::{parse_point, VerifyError};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files or preconditions.
    Usage(String),
    /// Solver residual, singular system or flagged estimate.
    Numerical(String),
    /// At least one verification row failed.
    Failed,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(e: impl fmt::Display) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Failed => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Failed => write!(f, "verification failed"),
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::SingularSystem(_) | ExactError::Residual { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Exact(e) => e.into(),
            e => CliError::Usage(e.to_string()),
        }
    }
}

macro_rules! usage_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Usage(e.to_string())
            }
        }
    )*};
}
usage_from!(ConfigError, GeometryError, LawError, LawFileError, McError, ReportError);

#[derive(Debug, Parser)]
#[command(
    name = "toruswalk",
    version,
    about = "Exact and Monte Carlo computations for random walks on Z^2 and the torus"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads. Output does not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Run configuration file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    echo_config: bool,
    /// Directory that receives a copy of every CSV (and SVG) produced.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Built-in laws and law files.
    Law {
        #[command(subcommand)]
        cmd: law_cmd::LawCmd,
    },
    /// Exact computations.
    Solve {
        #[command(subcommand)]
        cmd: solve::SolveCmd,
    },
    /// Monte Carlo estimates.
    Mc {
        #[command(subcommand)]
        cmd: mc::McCmd,
    },
    /// Run verification checks on a sweep grid.
    Verify(verify_cmd::VerifyArgs),
    /// Plot columns of a CSV as SVG.
    Report(report_cmd::ReportArgs),
    /// Run the command named in a configuration file.
    Run { file: PathBuf },
}

/// Law, geometry and solver flags shared by `solve` and `mc`.
#[derive(Debug, Clone, Default, Args)]
pub struct GeoArgs {
    /// srw, lazy_srw(eps), power_law(beta,r_max) or a law file path [default: srw]
    #[arg(long)]
    law: Option<String>,
    /// Torus side; omit for the plane.
    #[arg(long = "K")]
    k: Option<i64>,
    /// Disc radius.
    #[arg(long)]
    n: Option<f64>,
    /// Annulus width.
    #[arg(long)]
    s: Option<f64>,
    /// Inner radius of a gambler's-ruin pair, or of the disc to hit.
    #[arg(long)]
    r: Option<f64>,
    /// Outer radius: the escape disc of a gambler's-ruin pair, or the cap of a planar entrance.
    #[arg(long = "R")]
    big_r: Option<f64>,
    /// Starting points `x1,x2`, separated by `;` or given repeatedly [default: 0,0]
    #[arg(long, allow_hyphen_values = true)]
    start: Vec<String>,
    /// Second point: Green column or worst-case target [default: 0,0]
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    /// Largest transient set the solver accepts.
    #[arg(long)]
    max_states: Option<usize>,
    /// Conjugate-gradient tolerance.
    #[arg(long)]
    cg_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct McArgs {
    /// Trajectories per estimate [default: 10000]
    #[arg(long)]
    samples: Option<usize>,
    /// Master seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Step cap per trajectory [default: 10^8]
    #[arg(long)]
    cap: Option<u64>,
}

fn point_arg(key: &str, v: &str) -> Result<LatticePoint, CliError> {
    parse_point(v).ok_or_else(|| CliError::usage(format!("--{key}: `{}` is not a point `x1,x2`", v.trim())))
}

impl GeoArgs {
    /// Overlay these flags on a configuration.
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(l) = &self.law {
            cfg.law = Some(l.parse::<LawSpec>()?);
        }
        let g = &mut cfg.geometry;
        g.k = self.k.or(g.k);
        for (slot, v, name) in
            [(&mut g.n, self.n, "n"), (&mut g.s, self.s, "s"), (&mut g.r, self.r, "r"), (&mut g.big_r, self.big_r, "R")]
        {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::usage(format!("--{name} must be positive and finite, got {v}")));
                }
                *slot = Some(v);
            }
        }
        if !self.start.is_empty() {
            g.points = self
                .start
                .iter()
                .flat_map(|s| s.split(';'))
                .filter(|s| !s.trim().is_empty())
                .map(|s| point_arg("start", s))
                .collect::<Result<_, _>>()?;
        }
        if let Some(y) = &self.y {
            g.y = Some(point_arg("y", y)?);
        }
        if let Some(m) = self.max_states {
            cfg.solver.max_states = m;
        }
        if let Some(t) = self.cg_tol {
            cfg.solver.cg_tol = t;
        }
        Ok(())
    }
}

impl McArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.mc.samples = self.samples.or(cfg.mc.samples);
        cfg.mc.seed = self.seed.or(cfg.mc.seed);
        cfg.mc.cap = self.cap.or(cfg.mc.cap);
    }
}

/// A validated configuration with its law built.
pub struct Setup {
    pub cfg: RunConfig,
    pub law: StepLaw,
    pub ambient: Ambient,
}

impl Setup {
    fn new(cfg: RunConfig) -> Result<Self, CliError> {
        let law = cfg.law.clone().unwrap_or(LawSpec::Srw).build()?;
        let ambient = match cfg.geometry.k {
            Some(k) => Ambient::Torus(k),
            None => Ambient::Plane,
        };
        Ok(Self { cfg, law, ambient })
    }

    pub fn require(&self, v: Option<f64>, flag: &str) -> Result<f64, CliError> {
        v.ok_or_else(|| CliError::usage(format!("`{}` needs --{flag}", self.cfg.command)))
    }

    pub fn n(&self) -> Result<f64, CliError> {
        self.require(self.cfg.geometry.n, "n")
    }

    pub fn torus_side(&self) -> Result<i64, CliError> {
        self.cfg
            .geometry
            .k
            .ok_or_else(|| CliError::usage(format!("`{}` runs on the torus and needs --K", self.cfg.command)))
    }

    pub fn starts(&self) -> Vec<LatticePoint> {
        if self.cfg.geometry.points.is_empty() {
            vec![LatticePoint::ORIGIN]
        } else {
            self.cfg.geometry.points.clone()
        }
    }

    pub fn y(&self) -> LatticePoint {
        self.cfg.geometry.y.unwrap_or(LatticePoint::ORIGIN)
    }

    /// `D(0, radius)`, with the `radius < K/4` check on the torus.
    pub fn disc(&self, radius: f64) -> Result<Region, CliError> {
        Ok(match self.ambient {
            Ambient::Torus(k) => Region::torus_disc(radius, k)?,
            Ambient::Plane => Region::disc(radius),
        })
    }

    /// `law, K, n, s, r, R, x1, x2, y1, y2` cells.
    pub fn prefix(&self, x: Option<LatticePoint>, y: Option<LatticePoint>) -> Vec<String> {
        let g = &self.cfg.geometry;
        let mut row = vec![
            self.law.name().to_string(),
            table::opt_int(g.k),
            table::opt(g.n),
            table::opt(g.s),
            table::opt(g.r),
            table::opt(g.big_r),
        ];
        row.extend(table::point(x));
        row.extend(table::point(y));
        row
    }

    pub fn out_name(&self) -> String {
        self.cfg.command.replace(' ', "-")
    }
}

pub const PREFIX: [&str; 10] = ["law", "K", "n", "s", "r", "R", "x1", "x2", "y1", "y2"];

fn base_config(cli: &Cli, command: &str) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    cfg.command = command.to_string();
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    cfg.workers = cli.workers.or(cfg.workers);
    Ok(cfg)
}

fn command_path(c: &Command) -> String {
    match c {
        Command::Law { cmd } => format!("law {}", cmd.name()),
        Command::Solve { cmd } => format!("solve {}", cmd.name()),
        Command::Mc { cmd } => format!("mc {}", cmd.name()),
        Command::Verify(_) => "verify".into(),
        Command::Report(_) => "report".into(),
        Command::Run { .. } => "run".into(),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Command::Run { file } = &cli.command {
        let text = std::fs::read_to_string(file).map_err(|e| CliError::usage(format!("{}: {e}", file.display())))?;
        let cfg = RunConfig::parse(&text)?;
        if cfg.command.is_empty() || cfg.command.starts_with("run") {
            return Err(CliError::usage(format!("{}: `command` must name a subcommand", file.display())));
        }
        let mut argv = vec!["toruswalk".to_string()];
        argv.extend(cfg.command.split_whitespace().map(String::from));
        argv.extend(["--config".to_string(), file.display().to_string()]);
        if cli.echo_config {
            argv.push("--echo-config".into());
        }
        if let Some(w) = cli.workers {
            argv.extend(["--workers".into(), w.to_string()]);
        }
        if let Some(o) = &cli.out {
            argv.extend(["--out".into(), o.display().to_string()]);
        }
        let inner = Cli::try_parse_from(argv).map_err(|e| CliError::usage(e.to_string()))?;
        return dispatch(inner);
    }

    let mut cfg = base_config(&cli, &command_path(&cli.command))?;
    match &cli.command {
        Command::Solve { cmd } => cmd.geo().apply(&mut cfg)?,
        Command::Mc { cmd } => {
            cmd.geo().apply(&mut cfg)?;
            cmd.mc().apply(&mut cfg);
        }
        _ => {}
    }
    if matches!(cli.command, Command::Solve { .. } | Command::Mc { .. }) {
        cfg.law.get_or_insert(LawSpec::Srw);
    }
    cfg.validate()?;
    if cli.echo_config {
        print!("{cfg}");
        return Ok(());
    }
    let workers = cfg.workers;
    let run = move || -> Result<(), CliError> {
        match cli.command {
            Command::Law { cmd } => law_cmd::run(cmd, &cfg),
            Command::Solve { cmd } => solve::run(cmd, Setup::new(cfg)?),
            Command::Mc { cmd } => mc::run(cmd, Setup::new(cfg)?),
            Command::Verify(args) => verify_cmd::run(args, &cfg),
            Command::Report(args) => report_cmd::run(args, &cfg),
            Command::Run { .. } => unreachable!("handled above"),
        }
    };
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start {w} workers: {e}")))?
            .install(run),
        None => run(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap reports --help and --version as errors.
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
