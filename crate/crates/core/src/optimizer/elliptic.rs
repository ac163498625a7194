//! Face-weighted Neumann Laplacian `A phi = -div(W grad phi)` and its PCG solver.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::GridSpec;
use crate::real::Real;

/// Relative tolerance of the compatibility test `sum rhs = 0` per component.
const COMPAT_TOL: f64 = 1e-9;

pub(crate) struct WeightedLaplacian<'a, T> {
    grid: &'a GridSpec<T>,
    /// Face coefficients; zero on boundary faces and on faces leaving the mask.
    weights: [Vec<T>; 3],
    active: Vec<bool>,
    /// Connected component of each active cell.
    component: Vec<usize>,
    components: usize,
    diag: Vec<T>,
}

impl<'a, T: Real> WeightedLaplacian<'a, T> {
    /// `weights[a][f]` for interior faces; `mask` restricts the unknowns to a subset of cells.
    pub fn new(grid: &'a GridSpec<T>, mut weights: [Vec<T>; 3], mask: Option<&[bool]>) -> Self {
        let n = grid.num_cells();
        let active = match mask {
            Some(m) => m.to_vec(),
            None => vec![true; n],
        };
        for a in 0..grid.dim() {
            let s = grid.stride(a);
            let fs = grid.face_stride(a);
            for (f, w) in weights[a].iter_mut().enumerate() {
                if grid.is_boundary_face(a, f) {
                    *w = T::zero();
                }
            }
            for c in 0..n {
                let ijk = grid.unindex(c);
                if ijk[a] + 1 < grid.cells()[a] && !(active[c] && active[c + s]) {
                    weights[a][grid.low_face(a, ijk) + fs] = T::zero();
                }
            }
        }
        let mut lap = WeightedLaplacian {
            grid,
            weights,
            active,
            component: vec![usize::MAX; n],
            components: 0,
            diag: vec![T::zero(); n],
        };
        lap.label_components();
        lap.build_diag();
        lap
    }

    fn neighbors(&self, c: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let g = self.grid;
        let ijk = g.unindex(c);
        (0..g.dim()).flat_map(move |a| {
            let h2 = g.spacing()[a] * g.spacing()[a];
            let lo = g.low_face(a, ijk);
            let hi = lo + g.face_stride(a);
            let s = g.stride(a);
            let down = (ijk[a] > 0).then(|| (c - s, self.weights[a][lo] / h2));
            let up = (ijk[a] + 1 < g.cells()[a]).then(|| (c + s, self.weights[a][hi] / h2));
            down.into_iter().chain(up)
        })
    }

    fn label_components(&mut self) {
        let n = self.grid.num_cells();
        let mut stack = Vec::new();
        for start in 0..n {
            if !self.active[start] || self.component[start] != usize::MAX {
                continue;
            }
            let id = self.components;
            self.components += 1;
            self.component[start] = id;
            stack.push(start);
            while let Some(c) = stack.pop() {
                let next: Vec<usize> = self
                    .neighbors(c)
                    .filter(|&(m, w)| w > T::zero() && self.component[m] == usize::MAX)
                    .map(|(m, _)| m)
                    .collect();
                for m in next {
                    self.component[m] = id;
                    stack.push(m);
                }
            }
        }
    }

    fn build_diag(&mut self) {
        for c in 0..self.grid.num_cells() {
            self.diag[c] = self.neighbors(c).map(|(_, w)| w).sum();
        }
    }

    pub fn apply(&self, x: &[T], out: &mut [T]) {
        out.par_iter_mut().enumerate().for_each(|(c, o)| {
            *o = if self.active[c] {
                self.neighbors(c).map(|(m, w)| w * (x[c] - x[m])).sum()
            } else {
                T::zero()
            };
        });
    }

    pub fn face_weights(&self) -> &[Vec<T>; 3] {
        &self.weights
    }

    /// Removes the per-component mean of `x` on active cells and zeroes inactive cells.
    fn project(&self, x: &mut [T]) {
        let mut sum = vec![T::zero(); self.components];
        let mut count = vec![0usize; self.components];
        for (c, &v) in x.iter().enumerate() {
            if self.active[c] {
                sum[self.component[c]] += v;
                count[self.component[c]] += 1;
            }
        }
        for (c, v) in x.iter_mut().enumerate() {
            if self.active[c] {
                let k = self.component[c];
                *v -= sum[k] / T::lit(count[k] as f64);
            } else {
                *v = T::zero();
            }
        }
    }

    /// Checks that `rhs` sums to zero on every component.
    pub fn check_compatible(&self, rhs: &[T]) -> Result<()> {
        let mut sum = vec![T::zero(); self.components];
        let mut scale = vec![T::zero(); self.components];
        for (c, &v) in rhs.iter().enumerate() {
            if self.active[c] {
                sum[self.component[c]] += v;
                scale[self.component[c]] += v.abs();
            } else if v != T::zero() {
                return Err(Error::IncompatibleRhs(v.as_f64()));
            }
        }
        for (s, a) in sum.iter().zip(&scale) {
            if s.abs() > T::lit(COMPAT_TOL) * *a {
                return Err(Error::IncompatibleRhs(s.as_f64()));
            }
        }
        Ok(())
    }

    /// Jacobi-preconditioned CG for `A x = rhs` from the initial guess in `x`.
    ///
    /// Stops once `||r|| <= tol ||rhs||`. Returns the iteration count.
    pub fn solve(&self, rhs: &[T], x: &mut [T], tol: T, max_iter: usize) -> Result<usize> {
        self.check_compatible(rhs)?;
        let n = rhs.len();
        let mut b = rhs.to_vec();
        self.project(&mut b);
        let bnorm = dot(&b, &b).sqrt();
        if bnorm == T::zero() {
            x.iter_mut().for_each(|v| *v = T::zero());
            return Ok(0);
        }
        self.project(x);
        let mut r = vec![T::zero(); n];
        self.apply(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let precond = |r: &[T], z: &mut [T]| {
            for i in 0..n {
                z[i] = if self.diag[i] > T::zero() { r[i] / self.diag[i] } else { T::zero() };
            }
        };
        let mut z = vec![T::zero(); n];
        precond(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![T::zero(); n];
        let target = tol * bnorm;
        for it in 0..max_iter {
            if dot(&r, &r).sqrt() <= target {
                self.project(x);
                return Ok(it);
            }
            self.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            precond(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if dot(&r, &r).sqrt() <= target {
            self.project(x);
            return Ok(max_iter);
        }
        Err(Error::NonConvergence {
            what: "conjugate gradient",
            iterations: max_iter,
        })
    }
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
