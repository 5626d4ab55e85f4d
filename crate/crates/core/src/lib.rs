//! Normalized binary iterative hard thresholding (BIHT) for 1-bit compressed
//! sensing, with the restricted approximate invertibility machinery behind
//! its convergence guarantee, closed-form rate calculators and Monte Carlo
//! validators for the underlying probabilistic statements.

pub mod biht;
pub mod error;
pub mod io;
pub mod measure;
pub mod montecarlo;
pub mod raic;
pub mod rng;
pub mod theory;
pub mod thresholding;
pub mod vector;

pub use biht::{biht_step, run_biht, BihtConfig, Init, IterationRecord, Trajectory};
pub use error::{Error, Result};
pub use measure::{sgn, sign_measure, ternary_diff, MeasurementMatrix, SignPattern, TernaryDiff};
pub use raic::{raic_certify, RaicCertifyConfig, RaicReport};
pub use rng::{derive_seed, sample_standard_normal, SeedSpec};
pub use theory::{constants, UniversalConstants};
pub use vector::{angular_distance, random_sparse_unit, sphere_distance, SparseUnitVector};
