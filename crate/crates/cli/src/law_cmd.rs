//! `law`: list, describe and validate step laws.

use std::path::PathBuf;

use clap::Subcommand;
use toruswalk::config::RunConfig;
use toruswalk::law::{
    aperiodicity_certificate, format_law_file, parse_law_file, validate, LawSpec, StepLaw, APERIODICITY_MAX_POWER,
    APERIODICITY_TORUS,
};

use crate::table::{num, Table};
use crate::CliError;

#[derive(Debug, Subcommand)]
pub enum LawCmd {
    /// Statistics of the built-in laws.
    List,
    /// Statistics of one law; optionally write it as a law file.
    Describe {
        /// srw, lazy_srw(eps), power_law(beta,r_max) or a law file path.
        law: String,
        /// Print the support, one `x1,x2,mass` row per point, instead of the statistics.
        #[arg(long)]
        support: bool,
        /// Write the law in the law file format.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Parse and validate a law file.
    Validate { file: PathBuf },
}

impl LawCmd {
    pub fn name(&self) -> &'static str {
        match self {
            LawCmd::List => "list",
            LawCmd::Describe { .. } => "describe",
            LawCmd::Validate { .. } => "validate",
        }
    }
}

const HEADER: [&str; 10] =
    ["law", "c", "gamma_sq", "pi_gamma", "beta", "M", "moment_M", "max_step", "support_size", "aperiodic"];

fn stats_row(law: &StepLaw) -> Result<Vec<String>, CliError> {
    let s = validate(law)?;
    Ok(vec![
        law.name().to_string(),
        num(s.c),
        num(s.gamma_sq),
        num(s.pi_gamma),
        num(s.beta),
        num(s.m),
        num(s.moment_m),
        num(s.max_step),
        s.support_size.to_string(),
        aperiodicity_certificate(law, APERIODICITY_TORUS, APERIODICITY_MAX_POWER).to_string(),
    ])
}

pub fn run(cmd: LawCmd, cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out.as_deref();
    let mut t = Table::new(&HEADER);
    match cmd {
        LawCmd::List => {
            for spec in LawSpec::builtins() {
                t.push(stats_row(&spec.build()?)?);
            }
            t.emit(out, "law-list")
        }
        LawCmd::Describe { law, support, write } => {
            let law = law.parse::<LawSpec>()?.build()?;
            if support {
                let mut s = Table::new(&["x1", "x2", "mass"]);
                for (p, w) in law.support() {
                    s.push(vec![p.x1.to_string(), p.x2.to_string(), num(*w)]);
                }
                s.emit(out, "law-support")?;
            } else {
                t.push(stats_row(&law)?);
                t.emit(out, "law-describe")?;
            }
            if let Some(path) = write {
                std::fs::write(&path, format_law_file(&law))
                    .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            }
            Ok(())
        }
        LawCmd::Validate { file } => {
            let text =
                std::fs::read_to_string(&file).map_err(|e| CliError::usage(format!("{}: {e}", file.display())))?;
            let law = parse_law_file(&text).map_err(|e| CliError::usage(format!("{}: {e}", file.display())))?;
            t.push(stats_row(&law)?);
            t.emit(out, "law-validate")
        }
    }
}
