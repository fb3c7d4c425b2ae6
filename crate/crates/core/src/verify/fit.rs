use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("a fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate design: {0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitModel {
    /// `y = a + b log x`.
    AffineInLog,
    /// `log y = a + b log x`.
    PowerLawSlope,
    /// `c = max y / x`, for data `y` under envelope shapes `x`.
    EnvelopeSup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub model: FitModel,
    /// `intercept, slope` for the regressions, `c` for the envelope.
    pub coefficients: Vec<(String, f64)>,
    /// Coefficient of determination; not defined for the envelope.
    pub r2: Option<f64>,
    /// `y - fitted` in the fitted coordinates.
    pub residuals: Vec<f64>,
}

impl Fit {
    pub fn get(&self, name: &str) -> f64 {
        self.coefficients.iter().find(|(k, _)| k == name).map_or(f64::NAN, |(_, v)| *v)
    }

    pub fn slope(&self) -> f64 {
        self.get("slope")
    }

    pub fn intercept(&self) -> f64 {
        self.get("intercept")
    }
}

/// Ordinary least squares `y = a + b x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, Vec<f64>), FitError> {
    if x.len() != y.len() {
        return Err(FitError::Degenerate(format!("{} abscissae but {} ordinates", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(FitError::TooFewPoints(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(FitError::Degenerate("non-finite data".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) {
        return Err(FitError::Degenerate("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi - (a + b * xi)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((a, b, r2, residuals))
}

fn logs(v: &[f64], what: &str) -> Result<Vec<f64>, FitError> {
    v.iter()
        .map(
            |&t| {
                if t > 0.0 {
                    Ok(t.ln())
                } else {
                    Err(FitError::Degenerate(format!("{what} value {t} is not positive")))
                }
            },
        )
        .collect()
}

pub fn fit_constant(model: FitModel, x: &[f64], y: &[f64]) -> Result<Fit, FitError> {
    match model {
        FitModel::AffineInLog | FitModel::PowerLawSlope => {
            let lx = logs(x, "abscissa")?;
            let ly = if model == FitModel::PowerLawSlope { logs(y, "ordinate")? } else { y.to_vec() };
            let (a, b, r2, residuals) = least_squares(&lx, &ly)?;
            Ok(Fit { model, coefficients: vec![("intercept".into(), a), ("slope".into(), b)], r2: Some(r2), residuals })
        }
        FitModel::EnvelopeSup => {
            if x.len() != y.len() {
                return Err(FitError::Degenerate(format!("{} envelopes but {} values", x.len(), y.len())));
            }
            if x.len() < 3 {
                return Err(FitError::TooFewPoints(x.len()));
            }
            if x.iter().any(|&e| !(e > 0.0 && e.is_finite())) || y.iter().any(|v| !v.is_finite()) {
                return Err(FitError::Degenerate("envelope shapes must be positive and finite".into()));
            }
            let c = x.iter().zip(y).map(|(e, v)| v / e).fold(f64::NEG_INFINITY, f64::max);
            let residuals = x.iter().zip(y).map(|(e, v)| v - c * e).collect();
            Ok(Fit { model, coefficients: vec![("c".into(), c)], r2: None, residuals })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_affine_data() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let (a, b, r2, res) = least_squares(&x, &y).unwrap();
        assert!((a - 3.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        assert!(res.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn log_models_recover_coefficients() {
        let x = [2.0, 4.0, 8.0, 16.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 0.5 + 0.7 * v.ln()).collect();
        let f = fit_constant(FitModel::AffineInLog, &x, &y).unwrap();
        assert!((f.slope() - 0.7).abs() < 1e-12 && (f.intercept() - 0.5).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-4.0)).collect();
        let f = fit_constant(FitModel::PowerLawSlope, &x, &y).unwrap();
        assert!((f.slope() + 4.0).abs() < 1e-12);
        assert!((f.intercept() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn envelope_is_the_max_ratio() {
        let f = fit_constant(FitModel::EnvelopeSup, &[1.0, 2.0, 4.0], &[3.0, 4.0, 4.0]).unwrap();
        assert_eq!(f.get("c"), 3.0);
        assert!(f.residuals.iter().all(|r| *r <= 0.0));
        assert_eq!(f.residuals[0], 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(least_squares(&[1.0, 2.0], &[1.0, 2.0]), Err(FitError::TooFewPoints(2)));
        assert!(matches!(least_squares(&[1.0; 3], &[1.0, 2.0, 3.0]), Err(FitError::Degenerate(_))));
        assert!(matches!(
            fit_constant(FitModel::PowerLawSlope, &[1.0, 2.0, 3.0], &[1.0, 0.0, 1.0]),
            Err(FitError::Degenerate(_))
        ));
        assert!(matches!(
            fit_constant(FitModel::EnvelopeSup, &[1.0, 0.0, 1.0], &[1.0; 3]),
            Err(FitError::Degenerate(_))
        ));
    }
}
