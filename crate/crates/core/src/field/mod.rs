//! Grid fields on a box and the discrete phase-field functional.

mod energy;
mod fields;
mod grid;
mod ops;
mod source;

pub use energy::{energy, eta, EnergyBreakdown, Functional};
pub(crate) use energy::mass_energy;
pub(crate) use fields::face_average_sq;
pub use fields::{ScalarField, VectorField};
pub use grid::{GridSpec, MIN_CELLS};
pub(crate) use ops::{divergence_into, gradient_into, residual_against};
pub use ops::{divergence, divergence_residual, face_gradient};
pub use source::{bump, mollified_source, SourceSpec};
