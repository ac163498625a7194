use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::reduced::{cost_f, q_infinity, CostParams, DEFAULT_TOL};
use crate::reduced::transition_on_graded;

/// Cells of the graded mesh carrying the transition part of the profile.
const PROFILE_CELLS: usize = 2000;

/// Radial phase profile `u(t)` of a tube around a segment, `t` the distance in length units.
#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile<T> {
    pub eps: T,
    /// Outer radius; the profile is 1 from here on.
    pub r: T,
    pub eta: T,
    /// Core radius in eps-rescaled units.
    pub r_star: T,
    pub f_value: T,
    /// Transition energy of the profile, `q(eta; (r_star, r/eps))`.
    pub transition: T,
    /// `q_inf(0, r_star)`.
    pub transition_limit: T,
    /// Transition nodes in rescaled units `t / eps`.
    pub nodes: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Real> RadialProfile<T> {
    pub fn value_at(&self, t: T) -> T {
        let s = t / self.eps;
        if s <= self.r_star {
            self.eta
        } else if t >= self.r {
            T::one()
        } else {
            crate::reduced::radial::interpolate(&self.nodes, &self.values, s)
        }
    }

    /// Radius of the flux tube and of the endpoint cutoff, `max(r_star, 1) eps`.
    pub fn core_radius(&self) -> T {
        self.r_star.max(T::one()) * self.eps
    }

    /// Linear endpoint cap used when `r_star < 1`: `eta` up to `sqrt(3) eps`,
    /// then a ramp reaching 1 at `2 sqrt(3) eps`.
    pub fn endpoint_cap(&self, t: T) -> T {
        let s = t / self.eps;
        let s0 = T::lit(3f64.sqrt());
        if s <= s0 {
            self.eta
        } else if s >= s0 + s0 {
            T::one()
        } else {
            self.eta + (T::one() - self.eta) * (s - s0) / s0
        }
    }

    pub fn needs_endpoint_cap(&self) -> bool {
        self.r_star < T::one()
    }
}

/// Optimal tube profile for multiplicity `m`.
///
/// `eta` on `[0, r_star eps]`, the minimizer of the transition energy from
/// `eta` at `r_star` to `1` at `r / eps` in rescaled units, and `1` beyond `r`.
/// Fails with `ProfileSlack` when that transition energy exceeds
/// `q_inf(0, r_star) + delta`, i.e. when `eps` is too large for `r`.
pub fn optimal_profile<T: Real>(m: T, eps: T, r: T, delta: T, params: &CostParams<T>) -> Result<RadialProfile<T>> {
    params.validate()?;
    if !(m > T::zero()) {
        return Err(Error::invalid("m", "multiplicity must be positive"));
    }
    if !(eps > T::zero()) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    if !(delta > T::zero()) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    if !(params.a > T::zero()) {
        return Err(Error::invalid("a", "the tube profile needs a > 0"));
    }
    let eta = params.a * eps.powi(params.d as i32 + 1);
    if eta >= T::one() {
        return Err(Error::EpsTooLarge {
            eps: eps.as_f64(),
            eta: eta.as_f64(),
        });
    }
    let tol = T::lit(DEFAULT_TOL);
    let cost = cost_f(m, params, tol)?;
    let r_star = cost.r_star;
    if !(r > eps * r_star) {
        return Err(Error::invalid("r", "must exceed the core radius r_star eps"));
    }
    let outer = r / eps;
    let profile = transition_on_graded(eta, r_star, outer, params, PROFILE_CELLS)?;
    let limit = q_infinity(T::zero(), r_star, params, tol)?;
    if profile.energy > limit + delta {
        return Err(Error::ProfileSlack {
            energy: profile.energy.as_f64(),
            limit: (limit + delta).as_f64(),
        });
    }
    Ok(RadialProfile {
        eps,
        r,
        eta,
        r_star,
        f_value: cost.f_value,
        transition: profile.energy,
        transition_limit: limit,
        nodes: profile.radii,
        values: profile.values,
    })
}
