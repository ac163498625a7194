use serde::Serialize;

use super::minimize::{distance_to_segment, MinimizeResult};
use crate::field::VectorField;
use crate::real::Real;

/// `sum_c |sigma|_c h^n` with `|sigma|_c` from averaged squared face values.
pub fn total_mass<T: Real>(sigma: &VectorField<T>) -> T {
    sigma.cell_norm_sq().iter().map(|q| q.sqrt()).sum::<T>() * sigma.grid.cell_volume()
}

/// Fraction of [`total_mass`] carried by cells whose centers lie within `radius` of some segment.
pub fn mass_fraction_near<T: Real>(sigma: &VectorField<T>, segments: &[(Vec<T>, Vec<T>)], radius: T) -> T {
    let g = &sigma.grid;
    let n = g.dim();
    let q = sigma.cell_norm_sq();
    let (mut near, mut total) = (T::zero(), T::zero());
    for (c, &qc) in q.iter().enumerate() {
        let m = qc.sqrt();
        total += m;
        let x = &g.center(c)[..n];
        if segments.iter().any(|(p, e)| distance_to_segment(x, p, e) <= radius) {
            near += m;
        }
    }
    if total == T::zero() {
        T::one()
    } else {
        near / total
    }
}

/// Outcome of [`mass_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassBound<T> {
    pub mass: T,
    pub bound: T,
    pub passed: bool,
}

/// Tests `sum |sigma| h^n <= F0/2 + F0/(2 a (1 - lambda)^2) + sqrt(|Omega| eps F0 / lambda)`.
pub fn mass_bound_check<T: Real>(result: &MinimizeResult<T>, f0: T, a: T, lambda: T) -> MassBound<T> {
    let eps = result.functional.eps;
    let vol = result.sigma.grid.volume();
    let one_minus = T::one() - lambda;
    let half = T::lit(0.5);
    let bound = half * f0 + f0 / (T::lit(2.0) * a * one_minus * one_minus) + (vol * eps * f0 / lambda).sqrt();
    let mass = total_mass(&result.sigma);
    MassBound {
        mass,
        bound,
        passed: mass <= bound,
    }
}
