use super::params::CostParams;
use super::radial::{uniform_mesh, RadialProblem};
use crate::error::{Error, Result};
use crate::real::Real;

const MAX_OUTER: usize = 5000;
const OUTER_TOL: f64 = 1e-11;

/// Radial cost at finite `eps` of carrying mass `m` through a ball of radius `r`.
///
/// The flux density is eliminated in closed form, leaving the phase
/// functional
///
/// `S int_0^R s^{d-1} (|u'|^p + (1-u)^2) ds + m^2 / (eps^{d+1} S int_0^R s^{d-1}/u ds)`
///
/// in the rescaled variable `s = t/eps`, `R = r/eps`, `S = d w_d`, over
/// `u in [eta, 1]` with `u(R) = 1` and `eta = a eps^{d+1}`. The last term is
/// concave in `u`; each outer step replaces it by its tangent and solves the
/// resulting convex problem, so the energy decreases monotonically.
pub fn finite_eps_cost<T: Real>(m: T, r: T, eps: T, params: &CostParams<T>, resolution: usize) -> Result<T> {
    Ok(finite_eps_profile(m, r, eps, params, resolution)?.2)
}

/// Nodes (in units of `eps`), phase values and energy of [`finite_eps_cost`].
pub fn finite_eps_profile<T: Real>(
    m: T,
    r: T,
    eps: T,
    params: &CostParams<T>,
    resolution: usize,
) -> Result<(Vec<T>, Vec<T>, T)> {
    params.validate()?;
    if !(m > T::zero()) || !m.is_finite() {
        return Err(Error::invalid("m", "multiplicity must be positive"));
    }
    if !(eps > T::zero() && eps < r) {
        return Err(Error::invalid("eps", "requires 0 < eps < r"));
    }
    if resolution < 16 {
        return Err(Error::invalid("resolution", "needs at least 16 cells"));
    }
    let d = params.d;
    let eta = params.a * eps.powi(d as i32 + 1);
    if eta >= T::one() {
        return Err(Error::EpsTooLarge {
            eps: eps.as_f64(),
            eta: eta.as_f64(),
        });
    }
    let eta = eta.max(T::weight_floor());
    let big_r = r / eps;
    let nodes = uniform_mesh(T::zero(), big_r, resolution);
    let n = nodes.len();

    // lumped weights of int s^{d-1} phi_i ds
    let mut w = vec![T::zero(); n];
    let dm1 = d as i32 - 1;
    for e in 0..n - 1 {
        let (t0, t1) = (nodes[e], nodes[e + 1]);
        let half = (t1 - t0) * T::lit(0.5);
        let mid = (t0 + t1) * T::lit(0.5);
        // Simpson on each half cell
        w[e] += half / T::lit(6.0) * (t0.powi(dm1) + T::lit(4.0) * ((t0 + mid) * T::lit(0.5)).powi(dm1) + mid.powi(dm1));
        w[e + 1] += half / T::lit(6.0) * (mid.powi(dm1) + T::lit(4.0) * ((mid + t1) * T::lit(0.5)).powi(dm1) + t1.powi(dm1));
    }

    let sphere = params.sphere_measure();
    let k = m * m / (eps.powi(d as i32 + 1) * sphere * sphere);
    let mut prob = RadialProblem::new(nodes, d, params.p);
    for i in 0..n {
        prob.lower[i] = eta;
    }
    prob.fix(n - 1, T::one());

    let core = (params.a.sqrt() * m / params.omega_d()).powf(T::one() / T::lit(d as f64));
    let mut u: Vec<T> = prob
        .nodes
        .iter()
        .map(|&s| {
            if s <= core {
                eta
            } else {
                (eta + (s - core)).min(T::one())
            }
        })
        .collect();

    let harmonic = |u: &[T]| w.iter().zip(u).map(|(&w, &x)| w / x).sum::<T>();
    let total = |prob: &RadialProblem<T>, u: &[T]| {
        prob.linear_free_energy(u) + k / harmonic(u)
    };
    let mut e = total(&prob, &u);
    for _ in 0..MAX_OUTER {
        let j = harmonic(&u);
        let lin: Vec<T> = w
            .iter()
            .zip(&u)
            .map(|(&w, &x)| k * w / (j * j * x * x))
            .collect();
        prob.linear = Some(lin);
        let next = prob.solve(&u)?;
        let e_next = total(&prob, &next);
        let change = e - e_next;
        if e_next <= e {
            u = next;
            e = e_next;
        }
        if change <= T::lit(OUTER_TOL) * e.abs() {
            return Ok((prob.nodes.clone(), u, sphere * e));
        }
    }
    Err(Error::NonConvergence {
        what: "finite-eps alternating minimization",
        iterations: MAX_OUTER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduced::cost::cost_f;

    #[test]
    fn eta_above_one_is_rejected() {
        let p = CostParams::<f64>::new(1, 2.0, 1e4).unwrap();
        assert!(matches!(
            finite_eps_cost(1.0, 1.0, 0.1, &p, 64),
            Err(Error::EpsTooLarge { .. })
        ));
    }

    #[test]
    fn approaches_reduced_cost() {
        let p = CostParams::<f64>::new(1, 2.0, 1.0).unwrap();
        let f = cost_f(1.0, &p, 1e-10).unwrap().f_value;
        let v = finite_eps_cost(1.0, 1.0, 0.05, &p, 2000).unwrap();
        assert!((v - f).abs() < 0.1 * f, "{v} vs {f}");
    }
}
