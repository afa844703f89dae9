//! Pseudomode models of Brownian baths, their Lindblad dynamics with complex
//! parameters, physically regularized ensembles, and Chebyshev extrapolation
//! back to the unphysical point.

pub mod bath;
pub mod error;
pub mod expfit;
pub mod extrapolation;
pub mod field;
pub mod io;
pub mod lindblad;
pub mod params;
pub mod protocols;
pub mod quadrature;

pub use num_complex::Complex64 as C64;

pub use bath::{BathSpec, Beta, CorrelationSplit};
pub use error::{Error, ErrorKind, Result};
pub use extrapolation::{ExtrapolationResult, SweepTable};
pub use field::{FieldSpec, FieldTrajectory, StreamId};
pub use lindblad::{DensityMatrix, IntegratorConfig, LindbladGenerator, SystemSpec, Truncation};
pub use params::{Mode, PseudomodeSet, LAMBDA_C};
pub use protocols::ExperimentPreset;
