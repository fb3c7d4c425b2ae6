use serde::{Deserialize, Serialize};

use super::green::{green_column, hit_probabilities};
use super::{Domain, ExactError, Walk};
use crate::geometry::{Ambient, LatticePoint, Region};

/// Local time at the origin before leaving `D(0,n)`.
///
/// `L` is 0 with probability `1 - q` and otherwise geometric:
/// `P(L >= m) = q r^(m-1)` for `m >= 1`, where `q = P^x(T_0 < T_esc)` and `r`
/// is the probability of returning to 0 before escaping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTime {
    pub start: LatticePoint,
    pub n: f64,
    /// `G(x, 0)` from a Green column solve.
    pub g_x0: f64,
    /// `G(0, 0)` from the same solve.
    pub g_00: f64,
    /// `P^x(T_0 < T_esc)` from an absorption solve.
    pub q: f64,
    /// Return probability `sum_y p(0, y) P^y(T_0 < T_esc)`.
    pub r: f64,
    /// `k! G(x,0) G(0,0)^(k-1)`, k = 1..=k_max.
    pub green_moments: Vec<f64>,
    /// `E[L (L+1) ... (L+k-1)]` summed over the law of `L`.
    pub rising_moments: Vec<f64>,
    /// `E[L^k]` summed over the law of `L`.
    pub raw_moments: Vec<f64>,
}

impl LocalTime {
    /// `P(L >= m)`.
    pub fn tail(&self, m: u64) -> f64 {
        if m == 0 {
            1.0
        } else {
            self.q * self.r.powf((m - 1) as f64)
        }
    }

    /// `P(L >= z G(0,0))` for real `z`.
    pub fn tail_at_scale(&self, z: f64) -> f64 {
        self.tail((z * self.g_00).ceil().max(0.0) as u64)
    }

    /// Largest relative gap between the Green-function moments and the
    /// rising factorial moments of the distribution.
    pub fn identity_gap(&self) -> f64 {
        self.green_moments
            .iter()
            .zip(&self.rising_moments)
            .map(|(a, b)| (a - b).abs() / a.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Distribution sums for `P(L = m) = q r^(m-1) (1 - r)`, `m >= 1`.
fn series_moments(q: f64, r: f64, k_max: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rising = vec![0.0; k_max];
    let mut raw = vec![0.0; k_max];
    if q == 0.0 {
        return (rising, raw);
    }
    let mut pm = q * (1.0 - r);
    let mut m = 1u64;
    loop {
        let mf = m as f64;
        let mut rf = 1.0;
        let mut pw = 1.0;
        let mut last = 0.0;
        for k in 0..k_max {
            rf *= mf + k as f64;
            pw *= mf;
            rising[k] += pm * rf;
            raw[k] += pm * pw;
            last = pm * rf;
        }
        if last < 1e-18 * rising[k_max - 1] || m > 50_000_000 {
            break;
        }
        pm *= r;
        m += 1;
    }
    (rising, raw)
}

/// Moments and law of the local time at 0 before leaving `D(0,n)`, from `x`.
pub fn local_time(walk: &Walk, n: f64, x: LatticePoint, k_max: usize) -> Result<LocalTime, ExactError> {
    if k_max == 0 {
        return Err(ExactError::BadParameter("k_max must be at least 1".into()));
    }
    let ambient = walk.ambient();
    let disc = match ambient {
        Ambient::Torus(k) => Region::torus_disc(n, k)?,
        Ambient::Plane => Region::disc(n),
    };
    if ambient.norm(x) >= n {
        return Err(ExactError::BadParameter(format!("start {x} must satisfy |x| < n = {n}")));
    }
    let sys = walk.system(Domain::from_region(ambient, &disc)?)?;
    let col = green_column(&sys, LatticePoint::ORIGIN)?;
    let g_x0 = col[sys.domain().require(x)?];
    let g_00 = col[sys.domain().require(LatticePoint::ORIGIN)?];

    let hits = hit_probabilities(walk, &Region::point(LatticePoint::ORIGIN), &disc.complement())?;
    let q = hits.get(x);
    let r: f64 = walk.steps().iter().map(|(z, w)| w * hits.get(*z)).sum();

    let green_moments =
        (1..=k_max).map(|k| (1..=k).map(|i| i as f64).product::<f64>() * g_x0 * g_00.powi(k as i32 - 1)).collect();
    let (rising_moments, raw_moments) = series_moments(q, r, k_max);
    Ok(LocalTime { start: ambient.canonical(x), n, g_x0, g_00, q, r, green_moments, rising_moments, raw_moments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::srw;

    #[test]
    fn geometric_series_closed_form() {
        let (q, r) = (0.3, 0.8);
        let (rising, raw) = series_moments(q, r, 3);
        // E[L] = q / (1 - r); E[L(L+1)] = 2 q / (1 - r)^2; E[L^2] = q (1 + r) / (1 - r)^2.
        assert!((rising[0] - q / (1.0 - r)).abs() < 1e-12);
        assert!((rising[1] - 2.0 * q / (1.0 - r).powi(2)).abs() < 1e-11);
        assert!((raw[1] - q * (1.0 + r) / (1.0 - r).powi(2)).abs() < 1e-11);
        assert!((rising[2] - 6.0 * q / (1.0 - r).powi(3)).abs() < 1e-9);
    }

    #[test]
    fn first_moment_is_green() {
        let walk = Walk::torus(&srw(), 33).unwrap();
        let lt = local_time(&walk, 7.0, LatticePoint::ORIGIN, 4).unwrap();
        assert_eq!(lt.q, 1.0);
        assert_eq!(lt.green_moments[0], lt.g_00);
        assert!(lt.identity_gap() < 1e-8, "{}", lt.identity_gap());
        // Raw moments differ from the factorial identity beyond k = 1.
        assert!((lt.raw_moments[1] - lt.green_moments[1]).abs() > 0.1);
        let planar = local_time(&Walk::plane(&srw()).unwrap(), 7.0, LatticePoint::ORIGIN, 1).unwrap();
        assert!((planar.g_00 - lt.g_00).abs() < 1e-10);
    }

    #[test]
    fn off_centre_start() {
        let walk = Walk::torus(&srw(), 32).unwrap();
        let lt = local_time(&walk, 7.0, LatticePoint::new(3, 2), 4).unwrap();
        assert!(lt.q > 0.0 && lt.q < 1.0);
        assert!((lt.g_x0 - lt.q * lt.g_00).abs() < 1e-10);
        assert!(lt.identity_gap() < 1e-8);
        assert!((lt.tail(1) - lt.q).abs() < 1e-15);
    }
}
