//! `verify`: run registered checks over a sweep grid.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use toruswalk::config::RunConfig;
use toruswalk::verify::{
    all_passed, registry, run_all, run_check, summarize, validate_grid, write_outputs, write_results_csv, CheckRun,
    Context, SweepGrid,
};

use crate::table::Table;
use crate::CliError;

/// Grids shipped with the binary, addressable by file name.
pub const BUNDLED: [(&str, &str); 2] = [
    ("default.grid", include_str!("../../../grids/default.grid")),
    ("finite_range.grid", include_str!("../../../grids/finite_range.grid")),
];

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Check to run; repeat for several.
    #[arg(long = "check")]
    checks: Vec<String>,
    /// Run every registered check.
    #[arg(long)]
    all: bool,
    /// List the registered checks and exit.
    #[arg(long)]
    list: bool,
    /// Grid file, or the name of a bundled grid [default: default.grid]
    #[arg(long)]
    grid: Option<String>,
    /// Frozen constants from an earlier run on the same grid.
    #[arg(long)]
    constants: Option<PathBuf>,
}

fn load_grid(name: Option<&str>) -> Result<SweepGrid, CliError> {
    let name = name.unwrap_or("default.grid");
    let path = std::path::Path::new(name);
    let text = if path.exists() {
        std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{name}: {e}")))?
    } else {
        let base = path.file_name().and_then(|f| f.to_str()).unwrap_or(name);
        match BUNDLED.iter().find(|(n, _)| *n == base) {
            Some((_, text)) => text.to_string(),
            None => {
                let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
                return Err(CliError::usage(format!(
                    "grid `{name}` is neither a file nor a bundled grid ({})",
                    names.join(", ")
                )));
            }
        }
    };
    let grid = SweepGrid::parse(&text).map_err(|e| CliError::usage(format!("{name}: {e}")))?;
    validate_grid(&grid)?;
    Ok(grid)
}

pub fn run(args: VerifyArgs, cfg: &RunConfig) -> Result<(), CliError> {
    if args.list {
        let mut t = Table::new(&["check_id", "claim", "keys"]);
        for c in registry() {
            t.push(vec![c.id.to_string(), c.claim.to_string(), c.keys.join(";")]);
        }
        return t.emit(cfg.out.as_deref(), "checks");
    }
    if args.all == !args.checks.is_empty() {
        return Err(CliError::usage("give either --all or at least one --check <id>"));
    }
    let grid = load_grid(args.grid.as_deref())?;
    let mut ctx = Context::new(cfg.solver);
    if let Some(p) = &args.constants {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
        ctx.load_frozen(&text, &grid.hash())?;
    }
    let runs: Vec<CheckRun> = if args.all {
        run_all(&grid, &ctx)?
    } else {
        args.checks.iter().map(|id| run_check(id, &grid, &ctx)).collect::<Result<_, _>>()?
    };

    let mut bytes = Vec::new();
    write_results_csv(&mut bytes, &runs)?;
    std::io::stdout().write_all(&bytes).map_err(CliError::io)?;
    if let Some(dir) = &cfg.out {
        write_outputs(dir, &grid, &runs)?;
    }
    for (id, c) in summarize(&runs) {
        let verdict = if c.failures > 0 { "FAIL" } else { "pass" };
        eprintln!("{verdict} {id}");
    }
    if all_passed(&runs) {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}
