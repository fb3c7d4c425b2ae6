//! Trajectory simulation and Monte Carlo estimators.
//!
//! Every trajectory draws from its own generator, seeded from the master seed
//! and the trajectory index, so estimates do not depend on how trajectories are
//! spread over threads.

mod estimate;
mod worst_case;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Ambient, GeometryError, LatticePoint, Region};
use crate::law::{validate, LawError, StepLaw};

pub use estimate::{estimate, Estimate, Statistic};
pub use worst_case::{worst_case_walk, WorstCaseRun};

/// Default step cap per trajectory.
pub const DEFAULT_CAP: u64 = 100_000_000;
/// Fraction of capped trajectories above which an estimate is flagged.
pub const DEFAULT_CAP_FRACTION: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("at least 100 samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("invalid stopping rule: {0}")]
    BadSpec(String),
}

/// Alias-table sampler over a law's support.
#[derive(Debug, Clone)]
pub struct Sampler {
    points: Vec<LatticePoint>,
    alias: WeightedAliasIndex<f64>,
}

impl Sampler {
    pub fn new(law: &StepLaw) -> Result<Self, McError> {
        validate(law)?;
        let points = law.support().iter().map(|(p, _)| *p).collect();
        let weights = law.support().iter().map(|(_, w)| *w).collect();
        let alias = WeightedAliasIndex::new(weights)
            .map_err(|e| McError::BadSpec(format!("alias table rejected the law: {e}")))?;
        Ok(Self { points, alias })
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R) -> LatticePoint {
        self.points[self.alias.sample(rng)]
    }
}

/// One absorbing condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stop {
    /// Stop on entering the region.
    Enter(Region),
    /// Stop on leaving the region.
    Exit(Region),
}

impl Stop {
    #[inline]
    fn fires(&self, ambient: Ambient, x: LatticePoint) -> bool {
        match self {
            Stop::Enter(r) => r.contains(ambient, x),
            Stop::Exit(r) => !r.contains(ambient, x),
        }
    }
}

/// Where a walk runs and when it stops. Conditions are checked in order and
/// the first that fires is reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopSpec {
    pub ambient: Ambient,
    pub stops: Vec<Stop>,
    pub cap: u64,
}

impl StopSpec {
    pub fn new(ambient: Ambient) -> Self {
        Self { ambient, stops: Vec::new(), cap: DEFAULT_CAP }
    }

    pub fn enter(mut self, r: Region) -> Self {
        self.stops.push(Stop::Enter(r));
        self
    }

    pub fn exit(mut self, r: Region) -> Self {
        self.stops.push(Stop::Exit(r));
        self
    }

    pub fn cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn check(&self) -> Result<(), McError> {
        if self.cap == 0 {
            return Err(McError::BadSpec("step cap must be at least 1".into()));
        }
        if self.stops.is_empty() {
            return Err(McError::BadSpec("no absorbing condition".into()));
        }
        Ok(())
    }

    /// Index of the first condition met at `x`.
    #[inline]
    pub fn stopped(&self, x: LatticePoint) -> Option<usize> {
        self.stops.iter().position(|s| s.fires(self.ambient, x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// The condition with this index fired.
    Stopped(usize),
    CapHit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub reason: StopReason,
    pub time: u64,
    /// Canonical position at the stopping time.
    pub position: LatticePoint,
    /// Visits to the watched point at times `0..time`.
    pub local_time: Option<u64>,
}

/// Seed of trajectory `index` under `master`.
pub fn trajectory_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x6a09_e667_f3bc_c909)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Run one walk from `start` until a condition fires or the cap is reached.
///
/// Time 0 counts: a start that already meets a condition stops at time 0.
pub fn run_trajectory(
    sampler: &Sampler,
    start: LatticePoint,
    spec: &StopSpec,
    seed: u64,
    watch: Option<LatticePoint>,
) -> Trajectory {
    let ambient = spec.ambient;
    let watch = watch.map(|w| ambient.canonical(w));
    let mut rng = rng_for(seed);
    let mut x = ambient.canonical(start);
    let mut visits = 0u64;
    let mut t = 0u64;
    loop {
        if let Some(i) = spec.stopped(x) {
            return Trajectory {
                reason: StopReason::Stopped(i),
                time: t,
                position: x,
                local_time: watch.map(|_| visits),
            };
        }
        if t == spec.cap {
            return Trajectory { reason: StopReason::CapHit, time: t, position: x, local_time: watch.map(|_| visits) };
        }
        if Some(x) == watch {
            visits += 1;
        }
        x = ambient.canonical(x + sampler.step(&mut rng));
        t += 1;
    }
}

/// Positions `S_0, ..., S_t` of an unstopped walk (planar coordinates).
pub fn path(sampler: &Sampler, start: LatticePoint, steps: usize, seed: u64) -> Vec<LatticePoint> {
    let mut rng = rng_for(seed);
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = start;
    out.push(x);
    for _ in 0..steps {
        x = x + sampler.step(&mut rng);
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::project;
    use crate::law::srw;

    #[test]
    fn escape_from_unit_disc_takes_two_steps() {
        let s = Sampler::new(&srw()).unwrap();
        let spec = StopSpec::new(Ambient::Plane).exit(Region::disc(1.0));
        for seed in 0..200 {
            let tr = run_trajectory(&s, LatticePoint::ORIGIN, &spec, seed, None);
            assert_eq!(tr.reason, StopReason::Stopped(0));
            assert!(tr.time >= 2 && tr.position.norm_sq() > 1);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let s = Sampler::new(&srw()).unwrap();
        let spec = StopSpec::new(Ambient::Plane).exit(Region::disc(6.0));
        let a = run_trajectory(&s, LatticePoint::new(1, 2), &spec, 99, Some(LatticePoint::ORIGIN));
        let b = run_trajectory(&s, LatticePoint::new(1, 2), &spec, 99, Some(LatticePoint::ORIGIN));
        assert_eq!(a, b);
    }

    #[test]
    fn cap_is_reported() {
        let s = Sampler::new(&srw()).unwrap();
        let spec = StopSpec::new(Ambient::Plane).exit(Region::disc(1000.0)).cap(10);
        let tr = run_trajectory(&s, LatticePoint::ORIGIN, &spec, 1, None);
        assert_eq!((tr.reason, tr.time), (StopReason::CapHit, 10));
    }

    #[test]
    fn toral_path_is_projected_planar_path() {
        let s = Sampler::new(&srw()).unwrap();
        let k = 7;
        let planar = path(&s, LatticePoint::ORIGIN, 500, 3);
        // A stopping rule that never fires replays the same draws on the torus.
        let spec = StopSpec::new(Ambient::Torus(k)).enter(Region::Points(Default::default()));
        for t in [0u64, 1, 17, 500] {
            let tr = run_trajectory(&s, LatticePoint::ORIGIN, &spec.clone().cap(t), 3, None);
            assert_eq!(tr.position, project(planar[t as usize], k));
        }
    }

    #[test]
    fn seeds_differ_across_indices() {
        let seeds: std::collections::BTreeSet<u64> = (0..10_000).map(|i| trajectory_seed(7, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(trajectory_seed(7, 0), trajectory_seed(8, 0));
    }
}
