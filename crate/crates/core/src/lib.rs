//! Spectral analysis of cavity-based multimode Gaussian quantum optics.
//!
//! A system is described by its quadratic-Hamiltonian interaction matrices
//! (mode hopping `G`, pair production `F`) and per-mode damping rates. From
//! those the crate builds the linearized drift, evaluates the input-output
//! transfer function and the output spectral covariance matrix, decides
//! whether the covariance is real or complex (hidden squeezing), and compares
//! the optimal squeezing with what a homodyne detector can reach.
//!
//! Rates are dimensionless multiples of a reference damping rate.
//! Every 2N-dimensional object uses the quadrature ordering
//! `(x_1, ..., x_N | y_1, ..., y_N)`.

pub mod criteria;
pub mod error;
pub mod linalg;
pub mod model;
pub mod sampling;
pub mod scenarios;
pub mod spectral;
pub mod squeezing;

pub use criteria::{classify, verify_propositions, Classification, PropositionReport, Verdict};
pub use error::{Error, Result};
pub use model::{DriftMatrix, InteractionModel, ModelFile, RateUnit};
pub use spectral::{
    CovarianceSample, FrequencyGrid, LinearizedSystem, Normalization, Stability, TransferSample,
};
pub use squeezing::{BlochMessiahSample, HdBest, HiddenReport, LoConfig, LoPhase, SqueezingSpectrum};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

/// Complex dense matrix.
pub type CMatrix = DMatrix<C64>;
/// Real dense matrix.
pub type RMatrix = DMatrix<f64>;

/// Library version, echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
