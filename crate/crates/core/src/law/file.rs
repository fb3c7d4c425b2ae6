//! Plain-text law files.
//!
//! ```text
//! # comments start with '#'
//! name = my_law
//! beta = 1
//! 1 0 0.25
//! -1 0 0.25
//! 0 1 0.25
//! 0 -1 0.25
//! ```

use thiserror::Error;

use super::{validate, LawError, StepLaw};
use crate::geometry::LatticePoint;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawFileError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("law file has no `name` line")]
    MissingName,
    #[error(transparent)]
    Invalid(#[from] LawError),
}

/// Parse and validate a law file.
pub fn parse_law_file(text: &str) -> Result<StepLaw, LawFileError> {
    let mut name = None;
    let mut beta = 1.0;
    let mut support = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| LawFileError::Syntax { line: i + 1, msg };
        if let Some((key, value)) = line.split_once('=') {
            let value = value.trim();
            match key.trim() {
                "name" => {
                    if value.is_empty() {
                        return Err(err("empty name".into()));
                    }
                    name = Some(value.to_string());
                }
                "beta" => beta = value.parse().map_err(|_| err(format!("bad beta `{value}`")))?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [a, b, w] = fields.as_slice() else {
            return Err(err(format!("expected `x1 x2 mass`, got `{line}`")));
        };
        let x1: i64 = a.parse().map_err(|_| err(format!("bad coordinate `{a}`")))?;
        let x2: i64 = b.parse().map_err(|_| err(format!("bad coordinate `{b}`")))?;
        if x1.unsigned_abs() > 1 << 20 || x2.unsigned_abs() > 1 << 20 {
            return Err(err("coordinate out of range (|x| <= 2^20)".into()));
        }
        let mass: f64 = w.parse().map_err(|_| err(format!("bad mass `{w}`")))?;
        support.push((LatticePoint::new(x1, x2), mass));
    }
    let name = name.ok_or(LawFileError::MissingName)?;
    let law = StepLaw::from_support(name, beta, support);
    validate(&law)?;
    Ok(law)
}

/// Render a law in the file format; `parse_law_file` reads it back exactly.
pub fn format_law_file(law: &StepLaw) -> String {
    let mut out = format!("name = {}\nbeta = {}\n# x1 x2 mass\n", law.name(), law.beta());
    for (x, w) in law.support() {
        out.push_str(&format!("{} {} {}\n", x.x1, x.x2, w));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{lazy_srw, power_law, srw};

    #[test]
    fn round_trip_builtins() {
        for law in [srw(), lazy_srw(0.3).unwrap(), power_law(1.0, 8).unwrap()] {
            let back = parse_law_file(&format_law_file(&law)).unwrap();
            assert_eq!(back, law);
        }
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse_law_file("1 0 0.5\n-1 0 0.5"), Err(LawFileError::MissingName)));
        assert!(matches!(parse_law_file("name = a\n1 0"), Err(LawFileError::Syntax { line: 2, .. })));
        assert!(matches!(parse_law_file("name = a\ncolour = red"), Err(LawFileError::Syntax { .. })));
        assert!(matches!(
            parse_law_file("name = a\n1 0 0.6\n-1 0 0.4"),
            Err(LawFileError::Invalid(LawError::AsymmetricLaw { .. }))
        ));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# a law\nname = plus\n\n1 0 0.25 # east\n-1 0 0.25\n0 1 0.25\n0 -1 0.25\n";
        assert_eq!(parse_law_file(text).unwrap().support(), srw().support());
    }
}
