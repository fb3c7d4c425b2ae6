//! `report`: SVG plots regenerated from CSV alone.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use toruswalk::config::RunConfig;
use toruswalk::report::{render_svg, series, PlotKind, PlotSpec, Table};

use crate::CliError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Line,
    Scatter,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// CSV written by any subcommand.
    #[arg(long)]
    from: PathBuf,
    /// Columns to plot as `x:y`, e.g. `n:measured`.
    #[arg(long)]
    plot: String,
    #[arg(long, value_enum, default_value = "line")]
    kind: Kind,
    #[arg(long)]
    log_x: bool,
    #[arg(long)]
    log_y: bool,
    /// Keep rows where `column=value`; repeatable.
    #[arg(long)]
    filter: Vec<String>,
    /// One series per distinct value of these columns [default: check_id, law, quantity when present]
    #[arg(long)]
    group_by: Vec<String>,
}

pub fn run(args: ReportArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let file = std::fs::File::open(&args.from).map_err(|e| CliError::usage(format!("{}: {e}", args.from.display())))?;
    let table = Table::read(file)?;
    let mut spec = PlotSpec::from_name(&args.plot)?;
    for f in &args.filter {
        spec = spec.filter(f)?;
    }
    spec.group_by = args.group_by;
    spec.log_x = args.log_x;
    spec.log_y = args.log_y;
    spec.kind = match args.kind {
        Kind::Line => PlotKind::Line,
        Kind::Scatter => PlotKind::Scatter,
    };
    let svg = render_svg(&series(&table, &spec)?, &spec)?;
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(CliError::io)?;
            let name = format!("{}_vs_{}.svg", spec.y, spec.x).replace(['/', ' '], "_");
            std::fs::write(dir.join(&name), &svg).map_err(CliError::io)?;
            eprintln!("wrote {}", dir.join(name).display());
        }
        None => std::io::stdout().write_all(svg.as_bytes()).map_err(CliError::io)?,
    }
    Ok(())
}
