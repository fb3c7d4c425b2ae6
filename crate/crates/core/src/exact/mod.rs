//! Exact absorbing-chain computations.

mod annulus;
mod domain;
mod green;
mod local_time;
mod operator;
mod potential;
mod solver;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Ambient, GeometryError, LatticePoint};
use crate::law::{project_kernel, validate, LawError, LawStats, StepLaw};

pub use annulus::{
    annulus_psi, annulus_stats, entrance_time, entrance_times, external_green, AnnulusStats, AnnulusTables,
};
pub use domain::Domain;
pub use green::{
    exit_times, expected_exit_time, green, green_column, hit_before, hit_probabilities, hitting_distribution,
    hitting_distribution_by_absorption, GreenTable, HitTable, HittingDist,
};
pub use local_time::{local_time, LocalTime};
pub use potential::{potential_kernel, PotentialKernelTable};
pub use solver::{SolveReport, System};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("domain has {states} states, above the cap of {cap} (raise it with --max-states)")]
    DimensionTooLarge { states: usize, cap: usize },
    #[error("unbounded transient set: {0}")]
    UnboundedDomain(String),
    #[error("target and forbidden sets overlap at {0}")]
    OverlappingAbsorbers(LatticePoint),
    #[error("solver residual {residual:e} exceeds {required:e} after {iterations} iterations")]
    Residual { residual: f64, required: f64, iterations: usize },
    #[error("empty domain")]
    EmptyDomain,
    #[error("point {0} is not in the transient domain")]
    StartOutside(LatticePoint),
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("planar entrance times are infinite; supply an outer cap")]
    MissingOuterCap,
    #[error("{0}")]
    BadParameter(String),
}

/// Solver caps and tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Conjugate-gradient stopping rule on the recursive relative residual.
    pub cg_tol: f64,
    /// Required relative residual of the returned solution, recomputed directly.
    pub residual_check: f64,
    pub max_iterations: usize,
    /// Largest transient set accepted.
    pub max_states: usize,
    /// Systems this small are factorized densely.
    pub dense_threshold: usize,
    /// Sparse storage is used while `states * support` stays below this.
    pub csr_limit: usize,
    /// Tail mass allowed when projecting a law onto the torus.
    pub tail_tol: f64,
    /// Largest domain for which a full Green table is built.
    pub full_table_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            cg_tol: 1e-12,
            residual_check: 1e-10,
            max_iterations: 500_000,
            max_states: 300_000,
            dense_threshold: 600,
            csr_limit: 8_000_000,
            tail_tol: 1e-14,
            full_table_cap: 2500,
        }
    }
}

/// A validated law on a fixed ambient space, ready to build systems.
#[derive(Debug, Clone)]
pub struct Walk {
    law: StepLaw,
    stats: LawStats,
    ambient: Ambient,
    steps: Arc<Vec<(LatticePoint, f64)>>,
    truncation_bias: f64,
    opts: SolveOptions,
}

impl Walk {
    pub fn new(law: &StepLaw, ambient: Ambient, opts: SolveOptions) -> Result<Self, ExactError> {
        let stats = validate(law)?;
        let (steps, truncation_bias) = match ambient {
            Ambient::Plane => (law.support().to_vec(), 0.0),
            Ambient::Torus(k) => {
                let ker = project_kernel(law, k, opts.tail_tol)?;
                (ker.offsets().to_vec(), ker.truncation_bias)
            }
        };
        Ok(Self { law: law.clone(), stats, ambient, steps: Arc::new(steps), truncation_bias, opts })
    }

    pub fn plane(law: &StepLaw) -> Result<Self, ExactError> {
        Self::new(law, Ambient::Plane, SolveOptions::default())
    }

    pub fn torus(law: &StepLaw, k: i64) -> Result<Self, ExactError> {
        Self::new(law, Ambient::Torus(k), SolveOptions::default())
    }

    /// The same law and options on another ambient space.
    pub fn on(&self, ambient: Ambient) -> Result<Self, ExactError> {
        Self::new(&self.law, ambient, self.opts)
    }

    pub fn law(&self) -> &StepLaw {
        &self.law
    }

    pub fn stats(&self) -> &LawStats {
        &self.stats
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn options(&self) -> &SolveOptions {
        &self.opts
    }

    /// Steps of the walk in this ambient space (projected offsets on the torus).
    pub fn steps(&self) -> &[(LatticePoint, f64)] {
        &self.steps
    }

    /// Mass dropped when projecting onto the torus.
    pub fn truncation_bias(&self) -> f64 {
        self.truncation_bias
    }

    pub fn mass(&self, offset: LatticePoint) -> f64 {
        let o = self.ambient.canonical(offset);
        self.steps.binary_search_by(|(p, _)| p.cmp(&o)).map(|i| self.steps[i].1).unwrap_or(0.0)
    }

    pub fn system(&self, domain: Domain) -> Result<System, ExactError> {
        if domain.ambient() != self.ambient {
            return Err(ExactError::BadParameter(format!(
                "domain lives on {} but the walk on {}",
                domain.ambient(),
                self.ambient
            )));
        }
        System::new(domain, self.steps.clone(), self.opts)
    }
}
