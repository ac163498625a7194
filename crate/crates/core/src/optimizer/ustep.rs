use super::config::OptimizerConfig;
use super::elliptic::dot;
use crate::error::{Error, Result};
use crate::field::{divergence_into, face_average_sq, gradient_into, Functional, GridSpec, ScalarField, VectorField};
use crate::real::Real;

/// `sigma`-frozen part of the functional per unit cell volume:
/// `gs sum psi(q_c) + ps sum (1 - u)^2 + sum s_c u_c` with `psi(q) = q^{p/2}`.
struct UObjective<'a, T> {
    grid: &'a GridSpec<T>,
    gs: T,
    ps: T,
    half_p: T,
    linear: Vec<T>,
    fixed: Vec<bool>,
    lower: T,
}

fn face_buffers<T: Real>(grid: &GridSpec<T>) -> [Vec<T>; 3] {
    let mut f: [Vec<T>; 3] = Default::default();
    for (a, v) in f.iter_mut().enumerate().take(grid.dim()) {
        *v = vec![T::zero(); grid.num_faces(a)];
    }
    f
}

impl<'a, T: Real> UObjective<'a, T> {
    fn psi(&self, q: T) -> T {
        if self.half_p == T::one() {
            q
        } else {
            q.powf(self.half_p)
        }
    }

    fn dpsi(&self, q: T) -> T {
        if self.half_p == T::one() {
            T::one()
        } else if self.half_p < T::one() {
            self.half_p * (q + T::lit(1e-20)).powf(self.half_p - T::one())
        } else {
            self.half_p * q.powf(self.half_p - T::one())
        }
    }

    fn ddpsi(&self, q: T) -> T {
        if self.half_p <= T::one() || q == T::zero() {
            T::zero()
        } else {
            self.half_p * (self.half_p - T::one()) * q.powf(self.half_p - T::lit(2.0))
        }
    }

    /// Per-cell `q_c` from face values.
    fn cell_q(&self, g: &[Vec<T>; 3]) -> Vec<T> {
        face_average_sq(self.grid, g)
    }

    fn value(&self, u: &[T], g: &mut [Vec<T>; 3]) -> T {
        let mut e = T::zero();
        if self.gs > T::zero() {
            gradient_into(self.grid, u, g);
            e += self.gs * self.cell_q(g).iter().map(|&q| self.psi(q)).sum::<T>();
        }
        for (c, &x) in u.iter().enumerate() {
            e += self.ps * (T::one() - x) * (T::one() - x) + self.linear[c] * x;
        }
        e
    }

    /// Gradient, per-cell `psi'(q)` and the face gradients of `u`.
    fn gradient(&self, u: &[T]) -> (Vec<T>, Vec<T>, [Vec<T>; 3]) {
        let n = u.len();
        let mut g = face_buffers(self.grid);
        let mut out = vec![T::zero(); n];
        let mut dp = vec![T::zero(); n];
        if self.gs > T::zero() {
            gradient_into(self.grid, u, &mut g);
            let q = self.cell_q(&g);
            for c in 0..n {
                dp[c] = self.dpsi(q[c]);
            }
            let mut flux = face_buffers(self.grid);
            self.face_sum(&dp, &g, &mut flux);
            divergence_into(self.grid, &flux, &mut out);
            for o in out.iter_mut() {
                *o = -self.gs * *o;
            }
        }
        for c in 0..n {
            out[c] += T::lit(2.0) * self.ps * (u[c] - T::one()) + self.linear[c];
        }
        (out, dp, g)
    }

    /// `flux_f = (sum over cells c adjacent to f of w_c) * v_f`.
    fn face_sum(&self, w: &[T], v: &[Vec<T>; 3], flux: &mut [Vec<T>; 3]) {
        let g = self.grid;
        for a in 0..g.dim() {
            let s = g.stride(a);
            let fs = g.face_stride(a);
            flux[a].iter_mut().for_each(|x| *x = T::zero());
            for c in 0..g.num_cells() {
                let ijk = g.unindex(c);
                if ijk[a] + 1 < g.cells()[a] {
                    let f = g.low_face(a, ijk) + fs;
                    flux[a][f] = (w[c] + w[c + s]) * v[a][f];
                }
            }
        }
    }

    /// Hessian-vector product restricted to the cells with `free[c]`.
    fn hess_vec(&self, v: &[T], free: &[bool], dp: &[T], g: &[Vec<T>; 3], out: &mut [T]) {
        let n = v.len();
        let vm: Vec<T> = (0..n).map(|c| if free[c] { v[c] } else { T::zero() }).collect();
        out.iter_mut().for_each(|x| *x = T::zero());
        if self.gs > T::zero() {
            let grid = self.grid;
            let mut dg = face_buffers(grid);
            gradient_into(grid, &vm, &mut dg);
            let mut flux = face_buffers(grid);
            self.face_sum(dp, &dg, &mut flux);
            if self.half_p > T::one() {
                // second-order part: sum_c psi''(q_c) t_c g_f with t_c = sum_{f in c} g_f dg_f
                let q = self.cell_q(g);
                let mut t = vec![T::zero(); n];
                for c in 0..n {
                    let ijk = grid.unindex(c);
                    let mut s = T::zero();
                    for a in 0..grid.dim() {
                        let lo = grid.low_face(a, ijk);
                        let hi = lo + grid.face_stride(a);
                        s += g[a][lo] * dg[a][lo] + g[a][hi] * dg[a][hi];
                    }
                    t[c] = self.ddpsi(q[c]) * s;
                }
                let mut extra = face_buffers(grid);
                self.face_sum(&t, g, &mut extra);
                for a in 0..grid.dim() {
                    for (x, &y) in flux[a].iter_mut().zip(&extra[a]) {
                        *x += y;
                    }
                }
            }
            divergence_into(grid, &flux, out);
            for o in out.iter_mut() {
                *o = -self.gs * *o;
            }
        }
        for c in 0..n {
            out[c] = if free[c] {
                out[c] + T::lit(2.0) * self.ps * vm[c]
            } else {
                T::zero()
            };
        }
    }

    /// Diagonal of the first-order Hessian, used as preconditioner.
    fn diag(&self, dp: &[T]) -> Vec<T> {
        let g = self.grid;
        let n = g.num_cells();
        let mut d = vec![T::lit(2.0) * self.ps; n];
        if self.gs > T::zero() {
            for c in 0..n {
                let ijk = g.unindex(c);
                for a in 0..g.dim() {
                    let h2 = g.spacing()[a] * g.spacing()[a];
                    let s = g.stride(a);
                    if ijk[a] > 0 {
                        d[c] += self.gs * (dp[c] + dp[c - s]) / h2;
                    }
                    if ijk[a] + 1 < g.cells()[a] {
                        d[c] += self.gs * (dp[c] + dp[c + s]) / h2;
                    }
                }
            }
        }
        d
    }

    fn project(&self, u: &mut [T]) {
        for (c, x) in u.iter_mut().enumerate() {
            *x = if self.fixed[c] { T::one() } else { x.max(self.lower).min(T::one()) };
        }
    }
}

/// Largest step `|P(u - g) - u|` over the free cells.
fn projected_width<T: Real>(u: &[T], g: &[T], fixed: &[bool], lower: T) -> T {
    let mut w = T::zero();
    for c in 0..u.len() {
        if !fixed[c] {
            let t = (u[c] - g[c]).max(lower).min(T::one());
            w = w.max((t - u[c]).abs());
        }
    }
    w
}

/// Preconditioned CG for `H x = b` on the free cells.
fn cg_free<T: Real>(
    obj: &UObjective<T>,
    free: &[bool],
    dp: &[T],
    g: &[Vec<T>; 3],
    diag: &[T],
    b: &[T],
    rel_tol: T,
    max_iter: usize,
) -> Vec<T> {
    let n = b.len();
    let mut x = vec![T::zero(); n];
    let mut r: Vec<T> = (0..n).map(|c| if free[c] { b[c] } else { T::zero() }).collect();
    let target = rel_tol * dot(&r, &r).sqrt();
    let mut z: Vec<T> = (0..n).map(|c| r[c] / diag[c]).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut hp = vec![T::zero(); n];
    for _ in 0..max_iter {
        if dot(&r, &r).sqrt() <= target {
            break;
        }
        obj.hess_vec(&p, free, dp, g, &mut hp);
        let php = dot(&p, &hp);
        if !(php > T::zero()) {
            break;
        }
        let alpha = rz / php;
        for c in 0..n {
            x[c] += alpha * p[c];
            r[c] -= alpha * hp[c];
        }
        for c in 0..n {
            z[c] = r[c] / diag[c];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for c in 0..n {
            p[c] = z[c] + beta * p[c];
        }
    }
    x
}

/// Primal-dual active set iteration for the quadratic case.
///
/// Returns `None` if the active sets keep changing within the budget.
fn active_set_qp<T: Real>(obj: &UObjective<T>, u0: &[T], u_tol: T, max_iter: usize) -> Option<Vec<T>> {
    let n = u0.len();
    let mut u = u0.to_vec();
    let mut sets: Vec<i8> = vec![2; n];
    let (_, dp, g) = obj.gradient(&u);
    let diag = obj.diag(&dp);
    for _ in 0..max_iter {
        let (grad, _, _) = obj.gradient(&u);
        if projected_width(&u, &grad, &obj.fixed, obj.lower) <= u_tol {
            return Some(u);
        }
        let next: Vec<i8> = (0..n)
            .map(|c| {
                let t = u[c] - grad[c] / diag[c];
                if obj.fixed[c] {
                    1
                } else if t < obj.lower {
                    -1
                } else if t > T::one() {
                    1
                } else {
                    0
                }
            })
            .collect();
        if next == sets {
            // same partition as before: the inner solve did not reach u_tol
            return None;
        }
        sets = next;
        for c in 0..n {
            match sets[c] {
                -1 => u[c] = obj.lower,
                1 => u[c] = T::one(),
                _ => {}
            }
        }
        let (grad, _, _) = obj.gradient(&u);
        let free: Vec<bool> = sets.iter().map(|&s| s == 0).collect();
        let neg: Vec<T> = grad.iter().map(|&x| -x).collect();
        let step = cg_free(obj, &free, &dp, &g, &diag, &neg, T::lit(1e-12), 5000);
        for c in 0..n {
            if free[c] {
                u[c] += step[c];
            }
        }
    }
    None
}

pub(crate) fn u_step_impl<T: Real>(
    sigma: &VectorField<T>,
    u0: &ScalarField<T>,
    fun: &Functional<T>,
    u_tol: T,
    max_iter: usize,
    with_gradient: bool,
) -> Result<ScalarField<T>> {
    let grid = &u0.grid;
    sigma.grid.same_as(grid)?;
    let n_dim = grid.dim();
    let lower = fun.eta(n_dim);
    let linear: Vec<T> = sigma.cell_norm_sq().into_iter().map(|q| q / fun.eps).collect();
    let obj = UObjective {
        grid,
        gs: if with_gradient { fun.gradient_scale(n_dim) } else { T::zero() },
        ps: fun.potential_scale(n_dim),
        half_p: fun.p * T::lit(0.5),
        linear,
        fixed: (0..grid.num_cells()).map(|c| grid.is_boundary_cell(c)).collect(),
        lower,
    };
    let quadratic = obj.half_p == T::one() || obj.gs == T::zero();
    let mut u = u0.data.clone();
    obj.project(&mut u);
    let mut buf = face_buffers(grid);
    let mut e = obj.value(&u, &mut buf);
    if quadratic {
        let pd = active_set_qp(&obj, &u, u_tol, 100);
        if let Some(mut w) = pd {
            obj.project(&mut w);
            let ew = obj.value(&w, &mut buf);
            if ew <= e {
                return ScalarField::from_data(grid, w);
            }
        }
    }
    for _ in 0..max_iter {
        let (grad, dp, g) = obj.gradient(&u);
        let width = projected_width(&u, &grad, &obj.fixed, lower);
        if width <= u_tol {
            return ScalarField::from_data(grid, u);
        }
        let band = width.min(T::lit(1e-3));
        let free: Vec<bool> = (0..u.len())
            .map(|c| {
                !(obj.fixed[c]
                    || (u[c] <= lower + band && grad[c] > T::zero())
                    || (u[c] >= T::one() - band && grad[c] < T::zero()))
            })
            .collect();
        let diag = obj.diag(&dp);
        let neg: Vec<T> = grad.iter().map(|&x| -x).collect();
        let gnorm = dot(&neg, &neg).sqrt();
        let rel = if quadratic {
            T::lit(1e-10)
        } else {
            T::lit(0.1).min(gnorm.sqrt())
        };
        let mut dir = cg_free(&obj, &free, &dp, &g, &diag, &neg, rel, 2000);
        for c in 0..u.len() {
            if !free[c] && !obj.fixed[c] {
                dir[c] = neg[c] / diag[c];
            }
        }
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<T> = u.iter().zip(&dir).map(|(&x, &d)| x + alpha * d).collect();
            obj.project(&mut trial);
            let slope: T = grad.iter().zip(trial.iter().zip(&u)).map(|(&gr, (&t, &x))| gr * (t - x)).sum();
            let et = obj.value(&trial, &mut buf);
            if et <= e + T::lit(1e-4) * slope && et <= e {
                accepted = Some((trial, et));
                break;
            }
            alpha *= T::lit(0.5);
        }
        let Some((trial, et)) = accepted else {
            return ScalarField::from_data(grid, u);
        };
        let stalled = e - et <= T::lit(4.0) * T::epsilon() * e.abs();
        u = trial;
        e = et;
        if stalled {
            return ScalarField::from_data(grid, u);
        }
    }
    Err(Error::NonConvergence {
        what: "u-step projected Newton",
        iterations: max_iter,
    })
}

/// Minimizes the `sigma`-frozen functional over `u in [eta, 1]` with boundary cells at 1.
///
/// Projected Newton iteration with conjugate-gradient inner solves; every
/// accepted step decreases the energy.
pub fn u_step<T: Real>(sigma: &VectorField<T>, u0: &ScalarField<T>, config: &OptimizerConfig<T>) -> Result<ScalarField<T>> {
    u_step_impl(sigma, u0, &config.functional, config.u_tol, config.u_max_iter, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::energy;

    fn config(eps: f64, a: f64) -> OptimizerConfig<f64> {
        OptimizerConfig::new(Functional::new(eps, a))
    }

    #[test]
    fn no_flux_and_no_barrier_gives_ones() {
        let g = GridSpec::<f64>::unit(2, 16).unwrap();
        let c = config(0.2, 0.0);
        let mut u0 = ScalarField::constant(&g, 0.3);
        u0.pin_boundary();
        let u = u_step(&VectorField::zeros(&g), &u0, &c).unwrap();
        assert!(u.data.iter().all(|&x| (x - 1.0).abs() < 1e-6));
    }

    #[test]
    fn huge_flux_pins_cell_to_eta_like_scalar_oracle() {
        let g = GridSpec::<f64>::unit(2, 16).unwrap();
        let c = config(0.2, 1.0);
        let fun = c.functional;
        let eta = fun.eta(2);
        let mut s = VectorField::zeros(&g);
        let cell = g.index([7, 7, 0]);
        let f = g.low_face(0, [7, 7, 0]);
        s.faces[0][f] = 1e3;
        s.faces[1][g.low_face(1, [5, 5, 0]) + g.face_stride(1)] = 0.3;
        let u = u_step_impl(&s, &ScalarField::ones(&g), &fun, 1e-12, 500, false).unwrap();
        assert_eq!(u.data[cell], eta);
        // scalar oracle: minimize ps (1 - x)^2 + s x over [eta, 1] by dense sampling
        let q = s.cell_norm_sq();
        let ps = fun.potential_scale(2);
        for cl in 0..g.num_cells() {
            if g.is_boundary_cell(cl) {
                continue;
            }
            let lin = q[cl] / fun.eps;
            let best = (0..=100_000)
                .map(|i| eta + (1.0 - eta) * i as f64 / 100_000.0)
                .min_by(|&x, &y| {
                    let fx = ps * (1.0 - x) * (1.0 - x) + lin * x;
                    let fy = ps * (1.0 - y) * (1.0 - y) + lin * y;
                    fx.partial_cmp(&fy).unwrap()
                })
                .unwrap();
            assert!((u.data[cl] - best).abs() < 1e-4, "cell {cl}: {} vs {best}", u.data[cl]);
        }
        let full = u_step(&s, &ScalarField::ones(&g), &c).unwrap();
        assert_eq!(full.data[cell], eta);
    }

    #[test]
    fn optimal_input_is_a_fixed_point_and_energy_decreases() {
        let g = GridSpec::<f64>::unit(2, 16).unwrap();
        let c = config(0.2, 1.0);
        let s = VectorField::from_fn(&g, |a, x: [f64; 3]| if a == 0 { 20.0 * (-(x[1] - 0.5).powi(2) * 50.0).exp() } else { 0.0 });
        let u0 = ScalarField::ones(&g);
        let u1 = u_step(&s, &u0, &c).unwrap();
        let e0 = energy(&s, &u0, &c.functional).unwrap().total;
        let e1 = energy(&s, &u1, &c.functional).unwrap().total;
        assert!(e1 < e0);
        u1.check_phase(c.functional.eta(2)).unwrap();
        let u2 = u_step(&s, &u1, &c).unwrap();
        let drift = u1.data.iter().zip(&u2.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-6, "{drift}");
    }

    #[test]
    fn p_three_decreases_energy() {
        let g = GridSpec::<f64>::unit(2, 16).unwrap();
        let c = OptimizerConfig::new(Functional::new(0.2, 1.0).with_p(3.0));
        let s = VectorField::from_fn(&g, |a, x: [f64; 3]| if a == 0 { 20.0 * (-(x[1] - 0.5).powi(2) * 50.0).exp() } else { 0.0 });
        let u0 = ScalarField::ones(&g);
        let u1 = u_step(&s, &u0, &c).unwrap();
        let e0 = energy(&s, &u0, &c.functional).unwrap().total;
        let e1 = energy(&s, &u1, &c.functional).unwrap().total;
        assert!(e1 < e0);
    }
}
