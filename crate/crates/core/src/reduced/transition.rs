use serde::Serialize;

use super::params::CostParams;
use super::radial::{geometric_mesh, graded_mesh, interpolate, RadialProblem};
use crate::error::{Error, Result};
use crate::real::Real;

/// Discrete minimizer of the weighted transition functional on `[r1, r2]`.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionProfile<T> {
    pub radii: Vec<T>,
    pub values: Vec<T>,
    pub energy: T,
}

impl<T: Real> TransitionProfile<T> {
    /// Piecewise-linear value at `t`, clamped to the end values outside the grid.
    pub fn value_at(&self, t: T) -> T {
        interpolate(&self.radii, &self.values, t)
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }
}

fn check_xi<T: Real>(xi: T) -> Result<()> {
    if !(xi >= T::zero() && xi <= T::one()) {
        return Err(Error::InvalidXi(xi.as_f64()));
    }
    Ok(())
}

fn initial_guess<T: Real>(nodes: &[T], xi: T) -> Vec<T> {
    let r1 = nodes[0];
    nodes
        .iter()
        .map(|&t| T::one() - (T::one() - xi) * (r1 - t).exp())
        .collect()
}

fn solve_on<T: Real>(nodes: Vec<T>, xi: T, params: &CostParams<T>, start: Option<&[T]>) -> Result<TransitionProfile<T>> {
    let mut prob = RadialProblem::new(nodes, params.d, params.p);
    let last = prob.len() - 1;
    for i in 0..=last {
        prob.lower[i] = xi;
    }
    prob.fix(0, xi);
    prob.fix(last, T::one());
    let guess = match start {
        Some(s) => s.to_vec(),
        None => initial_guess(&prob.nodes, xi),
    };
    let mut values = prob.solve(&guess)?;
    // the running maximum never increases the energy and removes rounding dips
    for i in 1..values.len() {
        values[i] = values[i].max(values[i - 1]);
    }
    let energy = prob.energy(&values);
    Ok(TransitionProfile {
        radii: prob.nodes,
        values,
        energy,
    })
}

/// Minimizes `int_{r1}^{r2} t^{d-1} (|v'|^p + (1 - v)^2) dt` with `v(r1) = xi`, `v(r2) = 1`.
///
/// `resolution` is the number of cells of a graded mesh refined towards `r1`.
pub fn transition_energy<T: Real>(
    xi: T,
    r1: T,
    r2: T,
    params: &CostParams<T>,
    resolution: usize,
) -> Result<TransitionProfile<T>> {
    params.validate()?;
    check_xi(xi)?;
    if !(r1 > T::zero() && r1 < r2) {
        return Err(Error::InvalidInterval {
            r1: r1.as_f64(),
            r2: r2.as_f64(),
        });
    }
    if resolution < 16 {
        return Err(Error::invalid("resolution", "needs at least 16 cells"));
    }
    transition_on_graded(xi, r1, r2, params, resolution)
}

/// Same as [`transition_energy`] but admits `r1 = 0`.
pub(crate) fn transition_on_graded<T: Real>(
    xi: T,
    r1: T,
    r2: T,
    params: &CostParams<T>,
    resolution: usize,
) -> Result<TransitionProfile<T>> {
    solve_on(graded_mesh(r1, r2, resolution), xi, params, None)
}

/// Spacing of the first cell of the truncation mesh.
const QINF_H0: f64 = 1e-6;
/// Cell growth factor of the truncation mesh.
const QINF_RATIO: f64 = 1.02;
/// Truncations are attempted up to `2^14 max(r_hat, 1)`.
const QINF_MAX_DOUBLINGS: u32 = 14;

/// Transition energy from `xi` at `r_hat` to `1` at infinity.
///
/// Solves on truncated intervals `[r_hat, R]`, starting at
/// `R = 8 max(r_hat, 1)` and doubling until two successive values differ by
/// less than `tol`. The truncation mesh is a prefix of one fixed geometric
/// mesh, so successive values are nonincreasing.
pub fn q_infinity<T: Real>(xi: T, r_hat: T, params: &CostParams<T>, tol: T) -> Result<T> {
    Ok(q_infinity_profile(xi, r_hat, params, tol)?.energy)
}

pub(crate) fn q_infinity_profile<T: Real>(
    xi: T,
    r_hat: T,
    params: &CostParams<T>,
    tol: T,
) -> Result<TransitionProfile<T>> {
    params.validate()?;
    check_xi(xi)?;
    if !(tol > T::zero()) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    if !(r_hat >= T::zero()) {
        return Err(Error::invalid("r_hat", "must be nonnegative"));
    }
    let base = r_hat.max(T::one());
    let cap = base * T::lit(2f64.powi(QINF_MAX_DOUBLINGS as i32));
    if xi == T::one() {
        return Ok(TransitionProfile {
            radii: vec![r_hat, base * T::lit(8.0)],
            values: vec![T::one(), T::one()],
            energy: T::zero(),
        });
    }
    let mesh = geometric_mesh(r_hat, T::lit(QINF_H0), T::lit(QINF_RATIO), cap);
    let prefix = |reach: T| mesh.partition_point(|&t| t < reach) + 1;

    let mut reach = base * T::lit(8.0);
    let mut prev = solve_on(mesh[..prefix(reach).min(mesh.len())].to_vec(), xi, params, None)?;
    while reach < cap {
        reach = reach * T::lit(2.0);
        let len = prefix(reach).min(mesh.len());
        let mut start = prev.values.clone();
        start.resize(len, T::one());
        let next = solve_on(mesh[..len].to_vec(), xi, params, Some(&start))?;
        let change = (prev.energy - next.energy).abs();
        prev = next;
        if change < tol {
            return Ok(prev);
        }
    }
    Err(Error::NonConvergence {
        what: "q_infinity truncation",
        iterations: QINF_MAX_DOUBLINGS as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize, p: f64) -> CostParams<f64> {
        CostParams::<f64>::new(d, p, 1.0).unwrap()
    }

    #[test]
    fn xi_one_is_free() {
        let prof = transition_energy(1.0, 2.0, 40.0, &params(2, 3.0), 256).unwrap();
        assert_eq!(prof.energy, 0.0);
        assert!(prof.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn d1_p2_matches_exponential_closed_form() {
        // v = 1 - (1 - xi) sinh(r2 - t)/sinh(r2 - r1); energy (1 - xi)^2 coth(r2 - r1)
        let prof = transition_energy(0.5, 1.0, 30.0, &params(1, 2.0), 1000).unwrap();
        assert!((prof.energy - 0.25).abs() < 1e-3, "{}", prof.energy);
        for (&t, &v) in prof.radii.iter().zip(&prof.values) {
            let exact = 1.0 - 0.5 * (-(t - 1.0f64)).exp();
            assert!((v - exact).abs() < 1e-3);
        }
    }

    #[test]
    fn wide_annulus_profile_is_monotone() {
        let prof = transition_energy(0.0, 2.0, 40.0, &params(2, 3.0), 1000).unwrap();
        assert!(prof.is_monotone());
        assert_eq!(prof.values[0], 0.0);
        assert_eq!(*prof.values.last().unwrap(), 1.0);
        assert!(prof.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(prof.energy > 0.0);
    }

    #[test]
    fn argument_errors() {
        let p = params(1, 2.0);
        assert!(matches!(transition_energy(0.0, 3.0, 2.0, &p, 64), Err(Error::InvalidInterval { .. })));
        assert!(matches!(transition_energy(0.0, 0.0, 2.0, &p, 64), Err(Error::InvalidInterval { .. })));
        assert!(matches!(transition_energy(1.5, 1.0, 2.0, &p, 64), Err(Error::InvalidXi(_))));
        assert!(transition_energy(0.0, 1.0, 2.0, &p, 8).is_err());
        assert!(q_infinity(0.0, 1.0, &p, 0.0).is_err());
    }

    #[test]
    fn q_infinity_closed_forms() {
        let p = params(1, 2.0);
        let q = q_infinity(0.0, 1.0, &p, 1e-10).unwrap();
        assert!((q - 1.0).abs() < 1e-3, "{q}");
        assert_eq!(q_infinity(1.0, 3.0, &p, 1e-10).unwrap(), 0.0);
        let q0 = q_infinity(0.0, 0.0, &params(2, 3.0), 1e-10).unwrap();
        assert!(q0 > 0.0);
    }

    #[test]
    fn refinement_is_cauchy() {
        let p = params(2, 3.0);
        let e: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&n| transition_energy(0.0, 2.0, 40.0, &p, n).unwrap().energy)
            .collect();
        let d1 = (e[1] - e[0]).abs();
        let d2 = (e[2] - e[1]).abs();
        let d3 = (e[3] - e[2]).abs();
        assert!(d2 < d1 && d3 < d2, "{e:?}");
    }
}
