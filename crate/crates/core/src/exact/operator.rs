//! The restricted one-step operator `P_A`.
//!
//! Small problems store `P_A` as a sparse row list. Long-range laws on large
//! domains apply it as a 2D convolution through the FFT: on the torus the grid
//! is the `K x K` fundamental domain itself (cyclic convolution is exactly the
//! projected walk); on the plane the grid is a zero-padded window large enough
//! that cyclic wraparound never reaches the cells that are read back.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::domain::Domain;
use crate::geometry::{fundamental_box, Ambient, BBox, LatticePoint};

/// Rows per parallel task in sparse products.
const ROW_BLOCK: usize = 512;

#[derive(Debug)]
pub(crate) struct Csr {
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl Csr {
    fn build(domain: &Domain, steps: &[(LatticePoint, f64)]) -> Self {
        let mut row_ptr = Vec::with_capacity(domain.len() + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for &x in domain.states() {
            for &(z, w) in steps {
                if let Some(j) = domain.index(x + z) {
                    col.push(j as u32);
                    val.push(w);
                }
            }
            row_ptr.push(col.len());
        }
        Self { row_ptr, col, val }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().zip(&self.val[r]).map(|(c, v)| (*c as usize, *v))
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.par_chunks_mut(ROW_BLOCK).enumerate().for_each(|(blk, chunk)| {
            for (k, o) in chunk.iter_mut().enumerate() {
                let i = blk * ROW_BLOCK + k;
                let mut acc = 0.0;
                for (j, v) in self.row(i) {
                    acc += v * x[j];
                }
                *o = acc;
            }
        });
    }
}

/// A real 2D cyclic convolution with a fixed kernel.
pub(crate) struct GridConv {
    pub window: BBox,
    pub lx: usize,
    pub ly: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    /// Kernel spectrum in transposed layout `[a * ly + b]`.
    kernel_hat: Vec<Complex<f64>>,
}

impl std::fmt::Debug for GridConv {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GridConv({}x{})", self.lx, self.ly)
    }
}

/// Smallest `m >= n` with no prime factor above 5.
pub(crate) fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

fn transpose(src: &[Complex<f64>], dst: &mut [Complex<f64>], rows: usize, cols: usize) {
    // src is rows x cols, dst is cols x rows.
    dst.par_chunks_mut(rows).enumerate().for_each(|(c, out)| {
        for (r, o) in out.iter_mut().enumerate() {
            *o = src[r * cols + c];
        }
    });
}

fn fft_rows(fft: &Arc<dyn Fft<f64>>, data: &mut [Complex<f64>], len: usize) {
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(len).for_each_init(
        || vec![Complex::new(0.0, 0.0); scratch_len],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

impl GridConv {
    /// A convolution on `window` (`lx x ly` cells) computing
    /// `out(x) = sum_z p(z) f(x + z)` cyclically.
    pub fn new(window: BBox, lx: usize, ly: usize, steps: &[(LatticePoint, f64)]) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(lx);
        let inv_x = planner.plan_fft_inverse(lx);
        let fwd_y = planner.plan_fft_forward(ly);
        let inv_y = planner.plan_fft_inverse(ly);
        let mut grid = vec![Complex::new(0.0, 0.0); lx * ly];
        for &(z, w) in steps {
            // Placing p(z) at -z turns the cyclic convolution into the forward sum.
            let a = (-z.x1).rem_euclid(lx as i64) as usize;
            let b = (-z.x2).rem_euclid(ly as i64) as usize;
            grid[b * lx + a].re += w;
        }
        let mut conv = Self { window, lx, ly, fwd_x, inv_x, fwd_y, inv_y, kernel_hat: Vec::new() };
        conv.kernel_hat = conv.forward(grid);
        conv
    }

    /// Forward transform of a row-major grid; returns the transposed spectrum.
    fn forward(&self, mut grid: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
        fft_rows(&self.fwd_x, &mut grid, self.lx);
        let mut t = vec![Complex::new(0.0, 0.0); self.lx * self.ly];
        transpose(&grid, &mut t, self.ly, self.lx);
        fft_rows(&self.fwd_y, &mut t, self.ly);
        t
    }

    /// Convolve a real row-major grid with the kernel.
    pub fn convolve(&self, input: &[f64]) -> Vec<f64> {
        let grid: Vec<Complex<f64>> = input.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let mut spec = self.forward(grid);
        spec.par_iter_mut().zip(self.kernel_hat.par_iter()).for_each(|(s, k)| *s *= k);
        fft_rows(&self.inv_y, &mut spec, self.ly);
        let mut grid = vec![Complex::new(0.0, 0.0); self.lx * self.ly];
        transpose(&spec, &mut grid, self.lx, self.ly);
        fft_rows(&self.inv_x, &mut grid, self.lx);
        let scale = 1.0 / (self.lx * self.ly) as f64;
        grid.into_par_iter().map(|c| c.re * scale).collect()
    }

    /// Kernel spectrum in transposed layout `[a * ly + b]`.
    pub fn kernel_spectrum(&self) -> &[Complex<f64>] {
        &self.kernel_hat
    }

    pub fn cell(&self, p: LatticePoint) -> usize {
        let a = (p.x1 - self.window.lo.x1) as usize;
        let b = (p.x2 - self.window.lo.x2) as usize;
        b * self.lx + a
    }

    pub fn point(&self, cell: usize) -> LatticePoint {
        let a = (cell % self.lx) as i64;
        let b = (cell / self.lx) as i64;
        LatticePoint::new(self.window.lo.x1 + a, self.window.lo.x2 + b)
    }

    /// Cells of the grid that stand for real lattice positions.
    pub fn in_window(&self, cell: usize) -> bool {
        let p = self.point(cell);
        p.x1 <= self.window.hi.x1 && p.x2 <= self.window.hi.x2
    }
}

#[derive(Debug)]
pub(crate) enum Operator {
    Csr(Csr),
    Fft { conv: GridConv, cells: Vec<usize> },
}

impl Operator {
    pub fn new(domain: &Domain, steps: &[(LatticePoint, f64)], csr_limit: usize) -> Self {
        if domain.len().saturating_mul(steps.len()) <= csr_limit {
            return Operator::Csr(Csr::build(domain, steps));
        }
        let conv = match domain.ambient() {
            Ambient::Torus(k) => GridConv::new(fundamental_box(k), k as usize, k as usize, steps),
            Ambient::Plane => {
                let r = steps.iter().map(|(z, _)| z.x1.abs().max(z.x2.abs())).max().unwrap_or(0);
                // Values are read back on bbox(A) + r, so r more cells of
                // padding keep the cyclic wraparound away from them.
                let window = domain.bbox().expand(r);
                let lx = smooth_size((window.width() + r) as usize);
                let ly = smooth_size((window.height() + r) as usize);
                GridConv::new(window, lx, ly, steps)
            }
        };
        let cells = domain.states().iter().map(|p| conv.cell(*p)).collect();
        Operator::Fft { conv, cells }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Operator::Csr(_))
    }

    /// `out = P_A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Operator::Csr(m) => m.apply(x, out),
            Operator::Fft { conv, cells } => {
                let mut grid = vec![0.0; conv.lx * conv.ly];
                for (c, v) in cells.iter().zip(x) {
                    grid[*c] = *v;
                }
                let y = conv.convolve(&grid);
                for (o, c) in out.iter_mut().zip(cells) {
                    *o = y[*c];
                }
            }
        }
    }

    /// Dense entries of `P_A`, row-major.
    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        match self {
            Operator::Csr(m) => {
                for i in 0..n {
                    for (j, v) in m.row(i) {
                        a[i * n + j] += v;
                    }
                }
            }
            Operator::Fft { .. } => {
                let mut e = vec![0.0; n];
                let mut col = vec![0.0; n];
                for j in 0..n {
                    e[j] = 1.0;
                    self.apply(&e, &mut col);
                    e[j] = 0.0;
                    for i in 0..n {
                        a[i * n + j] = col[i];
                    }
                }
            }
        }
        a
    }

    /// `b(x) = sum_z p(z) f(x + z) 1[x + z not in A]` for every state `x`.
    pub fn boundary_rhs(
        &self,
        domain: &Domain,
        steps: &[(LatticePoint, f64)],
        f: &(dyn Fn(LatticePoint) -> f64 + Sync),
    ) -> Vec<f64> {
        match self {
            Operator::Csr(_) => domain
                .states()
                .par_iter()
                .map(|&x| {
                    let mut acc = 0.0;
                    for &(z, w) in steps {
                        let y = x + z;
                        if !domain.contains(y) {
                            let v = f(domain.ambient().canonical(y));
                            if v != 0.0 {
                                acc += w * v;
                            }
                        }
                    }
                    acc
                })
                .collect(),
            Operator::Fft { conv, cells } => {
                let ambient = domain.ambient();
                let grid: Vec<f64> = (0..conv.lx * conv.ly)
                    .into_par_iter()
                    .map(|c| {
                        if !conv.in_window(c) {
                            return 0.0;
                        }
                        let p = ambient.canonical(conv.point(c));
                        if domain.contains(p) {
                            0.0
                        } else {
                            f(p)
                        }
                    })
                    .collect();
                let y = conv.convolve(&grid);
                cells.iter().map(|c| y[*c]).collect()
            }
        }
    }

    /// `H(y) = sum_z g(z) p(y - z)` for every `y` outside `A` reachable in one
    /// step, in increasing point order.
    pub fn exit_mass(&self, domain: &Domain, steps: &[(LatticePoint, f64)], g: &[f64]) -> Vec<(LatticePoint, f64)> {
        match self {
            Operator::Csr(_) => {
                let mut acc = std::collections::BTreeMap::new();
                for (i, &x) in domain.states().iter().enumerate() {
                    if g[i] == 0.0 {
                        continue;
                    }
                    for &(z, w) in steps {
                        let y = domain.ambient().canonical(x + z);
                        if !domain.contains(y) {
                            *acc.entry(y).or_insert(0.0) += g[i] * w;
                        }
                    }
                }
                acc.into_iter().collect()
            }
            Operator::Fft { conv, cells } => {
                // Scattering g through p is the convolution with p(-z), which
                // equals p(z) for the symmetric laws handled here.
                let mut grid = vec![0.0; conv.lx * conv.ly];
                for (c, v) in cells.iter().zip(g) {
                    grid[*c] = *v;
                }
                let y = conv.convolve(&grid);
                let mut out: Vec<(LatticePoint, f64)> = (0..y.len())
                    .filter(|&c| conv.in_window(c) && y[c].abs() > FFT_NOISE)
                    .map(|c| (domain.ambient().canonical(conv.point(c)), y[c]))
                    .filter(|(p, _)| !domain.contains(*p))
                    .collect();
                out.sort_by_key(|a| a.0);
                out
            }
        }
    }
}

/// Magnitude below which FFT output is treated as round-off.
pub(crate) const FFT_NOISE: f64 = 1e-15;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Region;
    use crate::law::{power_law, srw};

    fn both(domain: &Domain, steps: &[(LatticePoint, f64)]) -> (Operator, Operator) {
        (Operator::new(domain, steps, usize::MAX), Operator::new(domain, steps, 0))
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(321), 324);
        assert_eq!(smooth_size(7), 8);
        assert_eq!(smooth_size(1), 1);
    }

    #[test]
    fn fft_matches_sparse_on_plane() {
        let law = power_law(1.0, 6).unwrap();
        let domain = Domain::from_region(Ambient::Plane, &Region::disc(5.0)).unwrap();
        let (csr, fft) = both(&domain, law.support());
        assert!(csr.is_sparse() && !fft.is_sparse());
        let x: Vec<f64> = (0..domain.len()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let (mut a, mut b) = (vec![0.0; x.len()], vec![0.0; x.len()]);
        csr.apply(&x, &mut a);
        fft.apply(&x, &mut b);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12, "{u} {v}");
        }
        let f = |p: LatticePoint| p.norm();
        let ra = csr.boundary_rhs(&domain, law.support(), &f);
        let rb = fft.boundary_rhs(&domain, law.support(), &f);
        for (u, v) in ra.iter().zip(&rb) {
            assert!((u - v).abs() < 1e-12, "{u} {v}");
        }
        let ea = csr.exit_mass(&domain, law.support(), &x);
        let eb = fft.exit_mass(&domain, law.support(), &x);
        let total = |e: &[(LatticePoint, f64)]| e.iter().map(|(_, v)| v).sum::<f64>();
        assert!((total(&ea) - total(&eb)).abs() < 1e-10);
    }

    #[test]
    fn fft_matches_sparse_on_torus() {
        let ker = crate::law::project_kernel(&power_law(1.0, 12).unwrap(), 12, 0.0).unwrap();
        let domain = Domain::complement_of(Ambient::Torus(12), &Region::disc(2.0)).unwrap();
        let (csr, fft) = both(&domain, ker.offsets());
        let x: Vec<f64> = (0..domain.len()).map(|i| (i % 5) as f64).collect();
        let (mut a, mut b) = (vec![0.0; x.len()], vec![0.0; x.len()]);
        csr.apply(&x, &mut a);
        fft.apply(&x, &mut b);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn srw_rows() {
        let domain = Domain::from_region(Ambient::Plane, &Region::disc(1.0)).unwrap();
        let op = Operator::new(&domain, srw().support(), usize::MAX);
        let p = op.dense(5);
        let centre = domain.index(LatticePoint::ORIGIN).unwrap();
        let row: f64 = p[centre * 5..centre * 5 + 5].iter().sum();
        assert_eq!(row, 1.0);
        let east = domain.index(LatticePoint::new(1, 0)).unwrap();
        let row: f64 = p[east * 5..east * 5 + 5].iter().sum();
        assert_eq!(row, 0.25);
    }
}
