//! Explicit recovery pairs for segments and polyhedral measures.

mod build;
mod kernel;
mod measure;
mod profile;

pub use build::{build_polyhedral_recovery, build_segment_recovery, RecoveryResult, RecoverySummary};
pub use measure::{limit_energy, validate_kirchhoff, KirchhoffViolation, PolyhedralMeasure, Segment};
pub use profile::{optimal_profile, RadialProfile};
