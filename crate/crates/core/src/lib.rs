//! Phase-field approximation of branched transport energies.
//!
//! * [`reduced`]: the reduced radial cost `f(m)`, transition energies and the finite-eps cost.
//! * [`field`]: box grids, staggered fields, mollified sources and the discrete functional.
//! * [`optimizer`]: alternating minimization in `sigma` and `u`.
//! * [`recovery`]: explicit recovery pairs, Kirchhoff checks and the limit energy.
//!
//! Everything is generic over [`Real`]; the aliases below fix `f64`.

pub mod error;
pub mod export;
pub mod field;
pub mod optimizer;
pub mod real;
pub mod recovery;
pub mod reduced;
pub mod scenario;

pub use error::{Error, ErrorKind, Result};
pub use real::Real;

pub type CostParamsF64 = reduced::CostParams<f64>;
pub type GridSpecF64 = field::GridSpec<f64>;
pub type ScalarFieldF64 = field::ScalarField<f64>;
pub type VectorFieldF64 = field::VectorField<f64>;
pub type SourceSpecF64 = field::SourceSpec<f64>;
pub type FunctionalF64 = field::Functional<f64>;
pub type OptimizerConfigF64 = optimizer::OptimizerConfig<f64>;
pub type MinimizeResultF64 = optimizer::MinimizeResult<f64>;
pub type SegmentF64 = recovery::Segment<f64>;
pub type PolyhedralMeasureF64 = recovery::PolyhedralMeasure<f64>;
pub type RecoveryResultF64 = recovery::RecoveryResult<f64>;
