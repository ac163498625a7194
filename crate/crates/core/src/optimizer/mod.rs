//! Alternating minimization of the phase-field functional under the divergence constraint.

mod config;
mod diagnostics;
pub(crate) mod elliptic;
mod minimize;
mod sigma;
mod ustep;

pub use config::{halving_schedule, Continuation, InitMode, OptimizerConfig, Stage};
pub use diagnostics::{mass_bound_check, mass_fraction_near, total_mass, MassBound};
pub use minimize::{distance_to_segment, minimize, minimize_from, MinimizeResult, TraceEntry};
pub use sigma::sigma_step;
pub(crate) use sigma::{face_conductance, weighted_projection};
pub use ustep::u_step;
