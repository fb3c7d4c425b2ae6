//! The potential kernel `a(x) = lim_t sum_{j<=t} [p_j(0) - p_j(x)]`.
//!
//! The `j`-fold convolution powers live on a zero-padded periodic grid of side
//! `L`, chosen so that walks of `t_max` steps almost never reach the padding.
//! On that grid the powers are diagonal in the Fourier basis, so the partial
//! sum is `L^-2 sum_theta (1 - cos theta.x) (1 - phi^(t+1)) / (1 - phi)` with
//! `phi` the characteristic function; averages of partial sums over a window
//! of `t` are geometric sums of the same kind.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::operator::{smooth_size, GridConv};
use super::ExactError;
use crate::geometry::{BBox, LatticePoint};
use crate::law::{validate, StepLaw};

/// Largest grid side accepted.
pub const MAX_GRID_SIDE: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialKernelTable {
    pub points: Vec<LatticePoint>,
    /// Extrapolated `a(x)`.
    pub values: Vec<f64>,
    /// Partial sums averaged over `t in [3 t_max / 4, t_max]`.
    pub averaged: Vec<f64>,
    /// The same average at `t_max / 2`.
    pub averaged_half: Vec<f64>,
    /// Spread of raw partial sums sampled over the averaging window.
    pub oscillation: Vec<f64>,
    pub t_max: usize,
    pub grid_side: usize,
    /// Tolerance the caller claims; results with oscillation `>= 10 tol` are flagged.
    pub tolerance: f64,
    pub flagged: bool,
}

impl PotentialKernelTable {
    pub fn get(&self, x: LatticePoint) -> Option<f64> {
        self.points.iter().position(|p| *p == x).map(|i| self.values[i])
    }
}

/// `sum_{j=0}^{t} phi^j` for `t >= 0`.
fn geometric(phi: f64, t: u64) -> f64 {
    let d = 1.0 - phi;
    if d.abs() * (t as f64 + 1.0) < 1e-9 {
        // Second-order expansion around phi = 1.
        let t1 = t as f64 + 1.0;
        return t1 - d * t1 * (t1 - 1.0) / 2.0;
    }
    (1.0 - phi.powf(t as f64 + 1.0)) / d
}

/// Mean of `geometric(phi, s)` over `s in [lo, hi]`.
fn averaged_geometric(phi: f64, lo: u64, hi: u64) -> f64 {
    let m = (hi - lo + 1) as f64;
    let d = 1.0 - phi;
    if d.abs() * (hi as f64 + 1.0) < 1e-9 {
        return (geometric(phi, lo) + geometric(phi, hi)) / 2.0;
    }
    // sum_{s=lo}^{hi} phi^(s+1) = phi^(lo+1) (1 - phi^m) / (1 - phi)
    let tail = phi.powf(lo as f64 + 1.0) * (1.0 - phi.powf(m)) / d;
    (1.0 - tail / m) / d
}

/// Estimate `a(x)` at `points` from partial sums up to `t_max`.
pub fn potential_kernel(
    law: &StepLaw,
    points: &[LatticePoint],
    t_max: usize,
    tolerance: f64,
) -> Result<PotentialKernelTable, ExactError> {
    if t_max < 8 {
        return Err(ExactError::BadParameter(format!("t_max must be at least 8, got {t_max}")));
    }
    let stats = validate(law)?;
    let reach = points.iter().map(|p| p.x1.abs().max(p.x2.abs())).max().unwrap_or(0);
    let r = law.max_coord();
    let radius = (3.0 * (stats.gamma_sq * t_max as f64).sqrt()).ceil() as i64 + reach + r;
    let side = smooth_size((2 * radius + 1) as usize);
    if side > MAX_GRID_SIDE {
        return Err(ExactError::GridTooSmall(format!(
            "t_max = {t_max} needs a grid of side {side}, above the limit {MAX_GRID_SIDE}"
        )));
    }
    let half = side as i64 / 2;
    let window = BBox {
        lo: LatticePoint::new(-half, -half),
        hi: LatticePoint::new(side as i64 - 1 - half, side as i64 - 1 - half),
    };

    // phi(theta) = sum_z p(z) e^{i theta.z}, real for symmetric laws. The grid
    // convolution's kernel spectrum is exactly this on the frequency lattice.
    let phi = characteristic(law, window, side);

    let t = t_max as u64;
    let t_half = t / 2;
    let windows = [(3 * t / 4, t), (3 * t_half / 4, t_half)];
    let mid = (3 * t / 4 + t) / 2;
    let samples = [3 * t / 4, 3 * t / 4 + 1, mid, mid + 1, t - 1, t];
    let nq = windows.len() + samples.len();
    let np = points.len();
    let two_pi = 2.0 * std::f64::consts::PI;
    let inv = 1.0 / side as f64;

    // Rows are reduced independently and then added in order.
    let rows: Vec<Vec<f64>> = (0..side)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0.0; np * nq];
            let mut w = vec![0.0; nq];
            for a in 0..side {
                if a == 0 && b == 0 {
                    continue;
                }
                let f = phi[b * side + a];
                for (k, (lo, hi)) in windows.iter().enumerate() {
                    w[k] = averaged_geometric(f, *lo, *hi);
                }
                for (k, s) in samples.iter().enumerate() {
                    w[windows.len() + k] = geometric(f, *s);
                }
                for (i, x) in points.iter().enumerate() {
                    let angle = two_pi * (a as f64 * x.x1 as f64 + b as f64 * x.x2 as f64) * inv;
                    let c = 1.0 - angle.cos();
                    for k in 0..nq {
                        acc[i * nq + k] += c * w[k];
                    }
                }
            }
            acc
        })
        .collect();
    let mut sums = vec![0.0; np * nq];
    for row in &rows {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let norm = 1.0 / (side * side) as f64;
    let get = |i: usize, k: usize| sums[i * nq + k] * norm;

    let averaged: Vec<f64> = (0..np).map(|i| get(i, 0)).collect();
    let averaged_half: Vec<f64> = (0..np).map(|i| get(i, 1)).collect();
    let values: Vec<f64> = (0..np).map(|i| 2.0 * averaged[i] - averaged_half[i]).collect();
    let oscillation: Vec<f64> = (0..np)
        .map(|i| {
            let raw: Vec<f64> = (0..samples.len()).map(|k| get(i, windows.len() + k)).collect();
            let hi = raw.iter().cloned().fold(f64::MIN, f64::max);
            let lo = raw.iter().cloned().fold(f64::MAX, f64::min);
            hi - lo
        })
        .collect();
    let flagged = oscillation.iter().any(|o| *o >= 10.0 * tolerance);
    Ok(PotentialKernelTable {
        points: points.to_vec(),
        values,
        averaged,
        averaged_half,
        oscillation,
        t_max,
        grid_side: side,
        tolerance,
        flagged,
    })
}

/// The characteristic function on the `side x side` frequency lattice,
/// indexed `[b * side + a]` for `theta = 2 pi (a, b) / side`.
fn characteristic(law: &StepLaw, window: BBox, side: usize) -> Vec<f64> {
    let conv = GridConv::new(window, side, side, law.support());
    // Convolving the unit impulse at the origin and transforming back would
    // cost two more transforms; the kernel spectrum is already phi(-theta),
    // which equals phi(theta) for symmetric laws.
    let spectrum: &[Complex<f64>] = conv.kernel_spectrum();
    let mut phi = vec![0.0; side * side];
    // The spectrum is stored transposed, [a * side + b].
    for a in 0..side {
        for b in 0..side {
            phi[b * side + a] = spectrum[a * side + b].re;
        }
    }
    phi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{lazy_srw, srw};

    #[test]
    fn geometric_sums() {
        assert!((geometric(0.5, 3) - 1.875).abs() < 1e-15);
        assert!((geometric(-1.0, 3) - 0.0).abs() < 1e-15);
        assert!((geometric(1.0, 9) - 10.0).abs() < 1e-12);
        let direct: f64 = (4..=9).map(|s| geometric(0.7, s)).sum::<f64>() / 6.0;
        assert!((averaged_geometric(0.7, 4, 9) - direct).abs() < 1e-13);
        let direct: f64 = (4..=9).map(|s| geometric(-0.3, s)).sum::<f64>() / 6.0;
        assert!((averaged_geometric(-0.3, 4, 9) - direct).abs() < 1e-13);
    }

    #[test]
    fn srw_closed_forms() {
        let pts = [LatticePoint::ORIGIN, LatticePoint::new(1, 0), LatticePoint::new(1, 1), LatticePoint::new(2, 0)];
        let table = potential_kernel(&srw(), &pts, 20_000, 1e-3).unwrap();
        assert_eq!(table.values[0], 0.0);
        let pi = std::f64::consts::PI;
        assert!((table.values[1] - 1.0).abs() < 1e-3, "{}", table.values[1]);
        assert!((table.values[2] - 4.0 / pi).abs() < 1e-3, "{}", table.values[2]);
        assert!((table.values[3] - (4.0 - 8.0 / pi)).abs() < 1e-3, "{}", table.values[3]);
        assert!(!table.flagged);
    }

    #[test]
    fn lazy_walk_scales_by_holding() {
        // A lazy walk visits each site 1/(1-eps) times as often.
        let pts = [LatticePoint::new(1, 0)];
        let a = potential_kernel(&lazy_srw(0.5).unwrap(), &pts, 20_000, 1e-3).unwrap();
        assert!((a.values[0] - 2.0).abs() < 2e-3, "{}", a.values[0]);
    }
}
