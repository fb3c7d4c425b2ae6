//! Solves `(I - P_A) x = b`.
//!
//! `I - P_A` is symmetric positive definite whenever the walk is symmetric and
//! absorption is possible from every state. Small systems are factorized
//! densely; larger ones use conjugate gradients. Every reduction is split into
//! fixed-size chunks whose partial sums are added in order, so results do not
//! depend on the number of worker threads.

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use super::domain::Domain;
use super::operator::Operator;
use super::{ExactError, SolveOptions};
use crate::geometry::LatticePoint;

/// Elements per partial sum in reductions.
const CHUNK: usize = 4096;
/// Below this length reductions run on the calling thread (same chunking).
const PAR_MIN: usize = 8 * CHUNK;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial = |(x, y): (&[f64], &[f64])| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let parts: Vec<f64> = if a.len() < PAR_MIN {
        a.chunks(CHUNK).zip(b.chunks(CHUNK)).map(partial).collect()
    } else {
        a.par_chunks(CHUNK).zip(b.par_chunks(CHUNK)).map(partial).collect()
    };
    parts.iter().sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Deterministic sum of a vector.
pub(crate) fn total(a: &[f64]) -> f64 {
    let parts: Vec<f64> = a.chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect();
    parts.iter().sum()
}

/// `y += alpha x`.
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(y, x)| *y += alpha * x);
}

/// A linear system `(I - P_A)` on a fixed domain.
pub struct System {
    domain: Domain,
    steps: std::sync::Arc<Vec<(LatticePoint, f64)>>,
    op: Operator,
    opts: SolveOptions,
    dense: OnceLock<Result<Cholesky<f64, Dyn>, ExactError>>,
}

impl std::fmt::Debug for System {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "System({} states, {:?})", self.domain.len(), self.op)
    }
}

/// Diagnostics of the last solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

impl System {
    pub(crate) fn new(
        domain: Domain,
        steps: std::sync::Arc<Vec<(LatticePoint, f64)>>,
        opts: SolveOptions,
    ) -> Result<Self, ExactError> {
        if domain.len() > opts.max_states {
            return Err(ExactError::DimensionTooLarge { states: domain.len(), cap: opts.max_states });
        }
        let op = Operator::new(&domain, &steps, opts.csr_limit);
        Ok(Self { domain, steps, op, opts, dense: OnceLock::new() })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn steps(&self) -> &[(LatticePoint, f64)] {
        &self.steps
    }

    /// Whether `P_A` is stored as sparse rows rather than applied by FFT.
    pub fn is_sparse(&self) -> bool {
        self.op.is_sparse()
    }

    pub fn uses_dense(&self) -> bool {
        self.domain.len() <= self.opts.dense_threshold
    }

    /// `out = (I - P_A) x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.op.apply(x, out);
        out.par_iter_mut().zip(x.par_iter()).for_each(|(o, x)| *o = x - *o);
    }

    /// `P_A x`.
    pub fn step(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.op.apply(x, &mut out);
        out
    }

    /// `||b - (I - P_A) x|| / ||b||`.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut r = vec![0.0; b.len()];
        self.apply(x, &mut r);
        r.par_iter_mut().zip(b.par_iter()).for_each(|(r, b)| *r = b - *r);
        let nb = norm(b);
        if nb == 0.0 {
            norm(&r)
        } else {
            norm(&r) / nb
        }
    }

    /// One-step payoff from outside the domain: `sum_z p(z) f(x+z)` over
    /// landing points `x+z` not in the domain.
    pub fn boundary_rhs(&self, f: &(dyn Fn(LatticePoint) -> f64 + Sync)) -> Vec<f64> {
        self.op.boundary_rhs(&self.domain, &self.steps, f)
    }

    /// Exit mass `sum_z g(z) p(y - z)` at points `y` outside the domain.
    pub fn exit_mass(&self, g: &[f64]) -> Vec<(LatticePoint, f64)> {
        self.op.exit_mass(&self.domain, &self.steps, g)
    }

    /// The unit vector at `x`.
    pub fn unit(&self, x: LatticePoint) -> Result<Vec<f64>, ExactError> {
        let i = self.domain.require(x)?;
        let mut e = vec![0.0; self.len()];
        e[i] = 1.0;
        Ok(e)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, ExactError> {
        self.solve_with_report(b).map(|(x, _)| x)
    }

    /// Solve several right-hand sides; results are in input order.
    pub fn solve_many(&self, bs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ExactError> {
        bs.par_iter().map(|b| self.solve(b)).collect()
    }

    pub fn solve_with_report(&self, b: &[f64]) -> Result<(Vec<f64>, SolveReport), ExactError> {
        assert_eq!(b.len(), self.len(), "right-hand side has the wrong length");
        if b.iter().all(|v| *v == 0.0) {
            return Ok((vec![0.0; b.len()], SolveReport { iterations: 0, relative_residual: 0.0 }));
        }
        let (x, iterations) = if self.uses_dense() { (self.solve_dense(b)?, 1) } else { self.cg(b)? };
        let relative_residual = self.relative_residual(&x, b);
        // Negated so that a NaN residual is rejected.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(relative_residual <= self.opts.residual_check) {
            return Err(ExactError::Residual {
                residual: relative_residual,
                required: self.opts.residual_check,
                iterations,
            });
        }
        Ok((x, SolveReport { iterations, relative_residual }))
    }

    fn factor(&self) -> Result<&Cholesky<f64, Dyn>, ExactError> {
        self.dense
            .get_or_init(|| {
                let n = self.len();
                let p = self.op.dense(n);
                let mut a = DMatrix::from_row_slice(n, n, &p);
                a.neg_mut();
                for i in 0..n {
                    a[(i, i)] += 1.0;
                }
                Cholesky::new(a).ok_or_else(|| {
                    ExactError::SingularSystem("I - P_A is not positive definite; absorption is not certain".into())
                })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn solve_dense(&self, b: &[f64]) -> Result<Vec<f64>, ExactError> {
        let chol = self.factor()?;
        Ok(chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
    }

    /// `(I - P_A)^{-1}` as a row-major dense matrix (small domains only).
    pub fn dense_inverse(&self) -> Result<Vec<f64>, ExactError> {
        let chol = self.factor()?;
        let inv = chol.inverse();
        let n = self.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = inv[(i, j)];
            }
        }
        Ok(out)
    }

    fn cg(&self, b: &[f64]) -> Result<(Vec<f64>, usize), ExactError> {
        let n = b.len();
        let nb = norm(b);
        let target = self.opts.cg_tol * nb;
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(&r, &r);
        let max_iter = self.opts.max_iterations;
        for it in 1..=max_iter {
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(pap > 0.0) {
                return Err(ExactError::SingularSystem(format!(
                    "conjugate gradients broke down (p.Ap = {pap:e}); absorption is not certain"
                )));
            }
            let alpha = rr / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            let rr_new = dot(&r, &r);
            if rr_new.sqrt() <= target {
                return Ok((x, it));
            }
            let beta = rr_new / rr;
            rr = rr_new;
            p.par_iter_mut().zip(r.par_iter()).for_each(|(p, r)| *p = r + beta * *p);
        }
        Err(ExactError::Residual { residual: rr.sqrt() / nb, required: self.opts.residual_check, iterations: max_iter })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Walk;
    use crate::geometry::{Ambient, Region};
    use crate::law::{lazy_srw, srw};

    #[test]
    fn hand_solvable_unit_disc() {
        let walk = Walk::plane(&srw()).unwrap();
        let sys = walk.system(Domain::from_region(Ambient::Plane, &Region::disc(1.0)).unwrap()).unwrap();
        assert!(sys.uses_dense());
        let g = sys.solve(&sys.unit(LatticePoint::ORIGIN).unwrap()).unwrap();
        let o = sys.domain().index(LatticePoint::ORIGIN).unwrap();
        assert!((g[o] - 4.0 / 3.0).abs() < 1e-14);
        let t = sys.solve(&[1.0; 5]).unwrap();
        assert!((t[o] - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn cg_agrees_with_dense() {
        let law = lazy_srw(0.2).unwrap();
        let domain = Domain::from_region(Ambient::Plane, &Region::disc(9.0)).unwrap();
        let dense = Walk::plane(&law).unwrap().system(domain.clone()).unwrap();
        let opts = SolveOptions { dense_threshold: 0, ..SolveOptions::default() };
        let iterative = Walk::new(&law, Ambient::Plane, opts).unwrap().system(domain).unwrap();
        assert!(dense.uses_dense() && !iterative.uses_dense());
        let b = vec![1.0; dense.len()];
        let (x, rep) = iterative.solve_with_report(&b).unwrap();
        assert!(rep.iterations > 1 && rep.relative_residual < 1e-10);
        for (u, v) in dense.solve(&b).unwrap().iter().zip(&x) {
            assert!((u - v).abs() < 1e-9 * u.abs());
        }
    }

    #[test]
    fn zero_rhs() {
        let walk = Walk::plane(&srw()).unwrap();
        let sys = walk.system(Domain::from_region(Ambient::Plane, &Region::disc(3.0)).unwrap()).unwrap();
        assert!(sys.solve(&vec![0.0; sys.len()]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn reductions_are_chunk_ordered() {
        let a: Vec<f64> = (0..100_000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let seq = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| dot(&a, &a));
        let par = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap().install(|| dot(&a, &a));
        assert_eq!(seq.to_bits(), par.to_bits());
    }
}
