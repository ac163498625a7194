//! One-dimensional radial minimization on piecewise-linear elements.
//!
//! Minimizes
//! `sum_e W_e |v'|^p + int t^{d-1} (1 - v)^2 dt + sum_i c_i v_i`
//! subject to per-node box bounds, where `W_e = int_e t^{d-1} dt`. The
//! integrand is jointly convex in `(v, v')`, so the projected Newton
//! iteration below converges to the global minimizer.

use crate::error::{Error, Result};
use crate::real::{Real, GAUSS3};

const MAX_NEWTON: usize = 500;
const REL_TOL: f64 = 1e-10;

/// Geometrically graded mesh on `[r1, r2]` with `intervals` cells, finest at `r1`.
///
/// The ratio between the last and the first cell is fixed, so doubling
/// `intervals` halves every cell.
pub(crate) fn graded_mesh<T: Real>(r1: T, r2: T, intervals: usize) -> Vec<T> {
    let stretch = T::lit(100.0);
    let n = intervals.max(1);
    let q = stretch.powf(T::one() / T::lit((n.max(2) - 1) as f64));
    let span = r2 - r1;
    let h0 = span * (q - T::one()) / (q.powi(n as i32) - T::one());
    let mut nodes = Vec::with_capacity(n + 1);
    let mut t = r1;
    let mut h = h0;
    nodes.push(r1);
    for _ in 1..n {
        t += h;
        h *= q;
        nodes.push(t);
    }
    nodes.push(r2);
    nodes
}

/// Nodes `r1 + h0 (q^k - 1)/(q - 1)` up to and including the first node at or beyond `reach`.
pub(crate) fn geometric_mesh<T: Real>(r1: T, h0: T, q: T, reach: T) -> Vec<T> {
    let mut nodes = vec![r1];
    let mut t = r1;
    let mut h = h0;
    while t < reach {
        t += h;
        h *= q;
        nodes.push(t);
    }
    nodes
}

pub(crate) fn uniform_mesh<T: Real>(a: T, b: T, intervals: usize) -> Vec<T> {
    let n = intervals.max(1);
    let h = (b - a) / T::lit(n as f64);
    (0..=n)
        .map(|i| if i == n { b } else { a + h * T::lit(i as f64) })
        .collect()
}

/// Discretized radial functional with box constraints.
pub(crate) struct RadialProblem<T> {
    pub nodes: Vec<T>,
    p: T,
    h: Vec<T>,
    weight: Vec<T>,
    mass: Vec<[T; 3]>,
    pub linear: Option<Vec<T>>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub fixed: Vec<bool>,
}

impl<T: Real> RadialProblem<T> {
    /// Problem on `nodes` for codimension `d` and exponent `p` with bounds `[0, 1]`.
    pub fn new(nodes: Vec<T>, d: usize, p: T) -> Self {
        let n = nodes.len();
        let dm1 = d as i32 - 1;
        let df = T::lit(d as f64);
        let mut h = Vec::with_capacity(n - 1);
        let mut weight = Vec::with_capacity(n - 1);
        let mut mass = Vec::with_capacity(n - 1);
        for e in 0..n - 1 {
            let (t0, t1) = (nodes[e], nodes[e + 1]);
            let he = t1 - t0;
            h.push(he);
            weight.push((t1.powi(d as i32) - t0.powi(d as i32)) / df);
            let mut m = [T::zero(); 3];
            for &(x, w) in GAUSS3.iter() {
                let s = T::lit(0.5) * (T::one() + T::lit(x));
                let t = t0 + he * s;
                let wt = T::lit(w) * T::lit(0.5) * he * t.powi(dm1);
                let (phi0, phi1) = (T::one() - s, s);
                m[0] += wt * phi0 * phi0;
                m[1] += wt * phi0 * phi1;
                m[2] += wt * phi1 * phi1;
            }
            mass.push(m);
        }
        RadialProblem {
            nodes,
            p,
            h,
            weight,
            mass,
            linear: None,
            lower: vec![T::zero(); n],
            upper: vec![T::one(); n],
            fixed: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Pins node `i` to `value`.
    pub fn fix(&mut self, i: usize, value: T) {
        self.fixed[i] = true;
        self.lower[i] = value;
        self.upper[i] = value;
    }

    pub fn energy(&self, v: &[T]) -> T {
        let mut e = self.linear_free_energy(v);
        if let Some(c) = &self.linear {
            e += c.iter().zip(v).map(|(&c, &x)| c * x).sum::<T>();
        }
        e
    }

    /// Energy without the linear term.
    pub fn linear_free_energy(&self, v: &[T]) -> T {
        let mut e = T::zero();
        for k in 0..self.h.len() {
            let g = (v[k + 1] - v[k]) / self.h[k];
            e += self.weight[k] * g.abs().powf(self.p);
            let (y0, y1) = (T::one() - v[k], T::one() - v[k + 1]);
            let m = &self.mass[k];
            e += m[0] * y0 * y0 + T::lit(2.0) * m[1] * y0 * y1 + m[2] * y1 * y1;
        }
        e
    }

    /// Gradient and tridiagonal Hessian `(diag, off)`.
    fn derivatives(&self, v: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
        let n = v.len();
        let two = T::lit(2.0);
        let mut grad = match &self.linear {
            Some(c) => c.clone(),
            None => vec![T::zero(); n],
        };
        let mut diag = vec![T::zero(); n];
        let mut off = vec![T::zero(); n - 1];
        let p = self.p;
        for k in 0..n - 1 {
            let he = self.h[k];
            let g = (v[k + 1] - v[k]) / he;
            let ag = g.abs();
            let dg = self.weight[k] * p * ag.powf(p - T::one()) * g.signum() / he;
            let curv = if p >= two {
                ag.powf(p - two)
            } else {
                (g * g + T::lit(1e-24)).powf((p - two) / two)
            };
            let c = self.weight[k] * p * (p - T::one()) * curv / (he * he);
            grad[k] -= dg;
            grad[k + 1] += dg;
            diag[k] += c;
            diag[k + 1] += c;
            off[k] -= c;

            let (y0, y1) = (T::one() - v[k], T::one() - v[k + 1]);
            let m = &self.mass[k];
            grad[k] -= two * (m[0] * y0 + m[1] * y1);
            grad[k + 1] -= two * (m[1] * y0 + m[2] * y1);
            diag[k] += two * m[0];
            diag[k + 1] += two * m[2];
            off[k] += two * m[1];
        }
        (grad, diag, off)
    }

    fn project(&self, v: &mut [T]) {
        for i in 0..v.len() {
            v[i] = v[i].max(self.lower[i]).min(self.upper[i]);
        }
    }

    /// Projected Newton iteration from `start`.
    pub fn solve(&self, start: &[T]) -> Result<Vec<T>> {
        let n = self.len();
        let mut v = start.to_vec();
        self.project(&mut v);
        let mut e = self.energy(&v);
        let tiny = T::min_positive_value().sqrt();
        for _ in 0..MAX_NEWTON {
            let (grad, mut diag, mut off) = self.derivatives(&v);
            let mut width = T::zero();
            for i in 0..n {
                let target = (v[i] - grad[i]).max(self.lower[i]).min(self.upper[i]);
                width = width.max((v[i] - target).abs());
            }
            if width <= tiny {
                return Ok(v);
            }
            let band = width.min(T::lit(1e-6));
            let mut rhs: Vec<T> = grad.iter().map(|&g| -g).collect();
            for i in 0..n {
                let active = self.fixed[i]
                    || (v[i] <= self.lower[i] + band && grad[i] > T::zero())
                    || (v[i] >= self.upper[i] - band && grad[i] < T::zero());
                if active {
                    // decoupled diagonally scaled gradient step
                    if self.fixed[i] || !(diag[i] > T::zero()) {
                        diag[i] = T::one();
                        rhs[i] = T::zero();
                    }
                    if i > 0 {
                        off[i - 1] = T::zero();
                    }
                    if i + 1 < n {
                        off[i] = T::zero();
                    }
                }
            }
            let dir = thomas(&diag, &off, &rhs);

            let mut alpha = T::one();
            let mut accepted = None;
            for _ in 0..60 {
                let mut trial: Vec<T> = v.iter().zip(&dir).map(|(&x, &d)| x + alpha * d).collect();
                self.project(&mut trial);
                let slope: T = grad
                    .iter()
                    .zip(trial.iter().zip(&v))
                    .map(|(&g, (&t, &x))| g * (t - x))
                    .sum();
                let et = self.energy(&trial);
                if et <= e + T::lit(1e-4) * slope {
                    accepted = Some((trial, et));
                    break;
                }
                alpha *= T::lit(0.5);
            }
            let Some((trial, et)) = accepted else {
                // no descent is representable: v is optimal to rounding
                return Ok(v);
            };
            let decrease = e - et;
            v = trial;
            e = et;
            let stalled = decrease <= T::lit(4.0) * T::epsilon() * e.abs();
            if stalled || (alpha == T::one() && decrease <= T::lit(REL_TOL) * e.abs()) {
                return Ok(v);
            }
        }
        Err(Error::NonConvergence {
            what: "radial Newton iteration",
            iterations: MAX_NEWTON,
        })
    }
}

/// Solves a symmetric tridiagonal system; `off[i]` couples rows `i` and `i + 1`.
pub(crate) fn thomas<T: Real>(diag: &[T], off: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut denom = diag[0];
    if n > 1 {
        c[0] = off[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i] - c[i] * d[i + 1];
    }
    d
}

/// Linear interpolation of nodal values at `t`, clamped to the end values.
pub(crate) fn interpolate<T: Real>(nodes: &[T], values: &[T], t: T) -> T {
    let n = nodes.len();
    if t <= nodes[0] {
        return values[0];
    }
    if t >= nodes[n - 1] {
        return values[n - 1];
    }
    let k = nodes.partition_point(|&x| x <= t).saturating_sub(1).min(n - 2);
    let s = (t - nodes[k]) / (nodes[k + 1] - nodes[k]);
    values[k] + (values[k + 1] - values[k]) * s
}
