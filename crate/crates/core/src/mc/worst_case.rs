use serde::{Deserialize, Serialize};

use super::{rng_for, McError, Sampler, DEFAULT_CAP};
use crate::geometry::{GeometryError, LatticePoint};
use crate::law::StepLaw;

/// One run of the worst-case walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseRun {
    /// Escape time of the modified walk.
    pub tau: u64,
    /// Number of large escape steps that were sent back to `y_star`.
    pub relocations: u64,
    /// Escape time of the unmodified planar walk on the same draws.
    pub planar_tau: u64,
    /// Largest step length taken.
    pub max_jump: f64,
    /// Planar position after the escape step.
    pub exit_position: LatticePoint,
    pub capped: bool,
}

/// The planar walk from `start` in which every step that leaves `D(0,n)` with
/// length `> K - 2n` is replaced by a jump to `y_star`.
///
/// Up to the first relocation the modified walk and the planar walk coincide,
/// so `tau >= planar_tau` on every path.
pub fn worst_case_walk(
    law: &StepLaw,
    k: i64,
    n: f64,
    y_star: LatticePoint,
    start: LatticePoint,
    seed: u64,
) -> Result<WorstCaseRun, McError> {
    if !(n > 0.0 && n < k as f64 / 4.0) {
        return Err(GeometryError::TorusDiscTooLarge { radius: n, k }.into());
    }
    let r2 = n * n;
    for (p, what) in [(y_star, "y_star"), (start, "start")] {
        if p.norm_sq() as f64 > r2 {
            return Err(McError::BadSpec(format!("{what} = {p} must lie in D(0,{n})")));
        }
    }
    let large = k as f64 - 2.0 * n;
    let sampler = Sampler::new(law)?;
    let mut rng = rng_for(seed);
    let mut x = start;
    let mut run =
        WorstCaseRun { tau: 0, relocations: 0, planar_tau: 0, max_jump: 0.0, exit_position: start, capped: false };
    let mut planar_done = false;
    for t in 1..=DEFAULT_CAP {
        let z = sampler.step(&mut rng);
        let len = z.norm();
        run.max_jump = run.max_jump.max(len);
        let y = x + z;
        if y.norm_sq() as f64 <= r2 {
            x = y;
            continue;
        }
        if !planar_done {
            run.planar_tau = t;
            planar_done = true;
        }
        if len > large {
            run.relocations += 1;
            x = y_star;
            continue;
        }
        run.tau = t;
        run.exit_position = y;
        return Ok(run);
    }
    run.tau = DEFAULT_CAP;
    run.capped = true;
    if !planar_done {
        run.planar_tau = DEFAULT_CAP;
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::srw;

    #[test]
    fn finite_range_never_relocates() {
        for seed in 0..100 {
            let r = worst_case_walk(&srw(), 40, 9.0, LatticePoint::ORIGIN, LatticePoint::new(2, 1), seed).unwrap();
            assert_eq!(r.relocations, 0);
            assert_eq!(r.tau, r.planar_tau);
        }
    }

    #[test]
    fn relocation_only_delays_escape() {
        // Long steps of length 30 > K - 2n = 22 are common under this law.
        let p = LatticePoint::new;
        let mut support = vec![(p(0, 0), 0.1)];
        for (q, w) in [(p(1, 0), 0.175), (p(30, 0), 0.05)] {
            for r in [q, p(-q.x1, 0), p(0, q.x1), p(0, -q.x1)] {
                support.push((r, w));
            }
        }
        let law = StepLaw::from_support("long", 1.0, support);
        let mut relocated = 0;
        for seed in 0..2000 {
            let r = worst_case_walk(&law, 40, 9.0, LatticePoint::new(3, 0), LatticePoint::ORIGIN, seed).unwrap();
            assert!(r.tau >= r.planar_tau);
            assert!(r.exit_position.norm() > 9.0);
            relocated += usize::from(r.relocations > 0);
        }
        assert!(relocated > 0);
    }

    #[test]
    fn rejects_points_outside_the_disc() {
        assert!(worst_case_walk(&srw(), 40, 5.0, LatticePoint::new(6, 0), LatticePoint::ORIGIN, 0).is_err());
        assert!(worst_case_walk(&srw(), 40, 10.0, LatticePoint::ORIGIN, LatticePoint::ORIGIN, 0).is_err());
    }
}
