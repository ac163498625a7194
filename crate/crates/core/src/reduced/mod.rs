//! Reduced radial problems: transition energies, the limit cost and its finite-`eps` version.

mod cost;
mod finite_eps;
mod params;
pub(crate) mod radial;
mod transition;

pub use cost::{
    competitor_bound, cost_f, cost_table, growth_constant, kappa, kappa_with_tol, radius_objective,
    write_cost_table, CostEvaluation, DEFAULT_TOL,
};
pub use finite_eps::{finite_eps_cost, finite_eps_profile};
pub use params::{CostParams, Prefactor};
pub use transition::{q_infinity, transition_energy, TransitionProfile};
pub(crate) use transition::transition_on_graded;
