use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trajectory, trajectory_seed, McError, Sampler, StopReason, StopSpec, DEFAULT_CAP_FRACTION};
use crate::geometry::LatticePoint;
use crate::law::StepLaw;

/// What each trajectory contributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Statistic {
    /// The stopping time (the cap, for capped trajectories).
    Time,
    /// 1 if the condition with this index fired first, else 0.
    Hit(usize),
    /// Visits to the point before stopping.
    LocalTime(LatticePoint),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub ci95: (f64, f64),
    pub master_seed: u64,
    pub cap_hits: usize,
    /// Set when more than the allowed fraction of trajectories hit the cap.
    pub flagged: bool,
}

impl Estimate {
    pub fn from_samples(values: &[f64], master_seed: u64, cap_hits: usize, cap_fraction: f64) -> Self {
        let n = values.len();
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let var = if n > 1 { values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0) } else { 0.0 };
        let stderr = (var / nf).sqrt();
        Self {
            mean,
            stderr,
            n_samples: n,
            ci95: (mean - 1.96 * stderr, mean + 1.96 * stderr),
            master_seed,
            cap_hits,
            flagged: cap_hits as f64 > cap_fraction * nf,
        }
    }

    /// `|mean - exact|` in standard errors; infinite if the errors are zero but the values differ.
    pub fn z_score(&self, exact: f64) -> f64 {
        let d = (self.mean - exact).abs();
        if d == 0.0 {
            0.0
        } else if self.stderr == 0.0 {
            f64::INFINITY
        } else {
            d / self.stderr
        }
    }
}

/// Mean of `statistic` over `n_samples` trajectories from `start`.
pub fn estimate(
    law: &StepLaw,
    start: LatticePoint,
    spec: &StopSpec,
    statistic: Statistic,
    n_samples: usize,
    master_seed: u64,
) -> Result<Estimate, McError> {
    if n_samples < 100 {
        return Err(McError::TooFewSamples(n_samples));
    }
    spec.check()?;
    if let Statistic::Hit(i) = statistic {
        if i >= spec.stops.len() {
            return Err(McError::BadSpec(format!("no stopping condition with index {i}")));
        }
    }
    let sampler = Sampler::new(law)?;
    let watch = match statistic {
        Statistic::LocalTime(p) => Some(p),
        _ => None,
    };
    let runs: Vec<(f64, bool)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let tr = run_trajectory(&sampler, start, spec, trajectory_seed(master_seed, i), watch);
            let v = match statistic {
                Statistic::Time => tr.time as f64,
                Statistic::Hit(j) => f64::from(u8::from(tr.reason == StopReason::Stopped(j))),
                Statistic::LocalTime(_) => tr.local_time.unwrap_or(0) as f64,
            };
            (v, tr.reason == StopReason::CapHit)
        })
        .collect();
    let values: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let cap_hits = runs.iter().filter(|r| r.1).count();
    Ok(Estimate::from_samples(&values, master_seed, cap_hits, DEFAULT_CAP_FRACTION))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Ambient, Region};
    use crate::law::srw;

    #[test]
    fn constant_samples_have_zero_error() {
        let e = Estimate::from_samples(&[1.0; 200], 0, 0, 0.01);
        assert_eq!((e.mean, e.stderr, e.ci95), (1.0, 0.0, (1.0, 1.0)));
        assert_eq!(e.z_score(1.0), 0.0);
    }

    #[test]
    fn certain_absorption_on_the_torus() {
        let spec = StopSpec::new(Ambient::Torus(9)).enter(Region::disc(1.0));
        let e = estimate(&srw(), LatticePoint::new(4, 4), &spec, Statistic::Hit(0), 500, 3).unwrap();
        assert_eq!((e.mean, e.stderr), (1.0, 0.0));
    }

    #[test]
    fn hit_zero_before_leaving_unit_disc() {
        let spec = StopSpec::new(Ambient::Plane).enter(Region::point(LatticePoint::ORIGIN)).exit(Region::disc(1.0));
        let e = estimate(&srw(), LatticePoint::new(1, 0), &spec, Statistic::Hit(0), 20_000, 11).unwrap();
        assert!(e.z_score(0.25) < 3.0, "{e:?}");
    }

    #[test]
    fn too_few_samples() {
        let spec = StopSpec::new(Ambient::Plane).exit(Region::disc(1.0));
        assert_eq!(
            estimate(&srw(), LatticePoint::ORIGIN, &spec, Statistic::Time, 99, 0),
            Err(McError::TooFewSamples(99))
        );
    }

    #[test]
    fn capped_runs_flag_the_estimate() {
        let spec = StopSpec::new(Ambient::Plane).exit(Region::disc(50.0)).cap(20);
        let e = estimate(&srw(), LatticePoint::ORIGIN, &spec, Statistic::Time, 100, 0).unwrap();
        assert!(e.flagged && e.cap_hits == 100);
    }
}
