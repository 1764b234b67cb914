//! Covariance-matrix criteria for quantum network states.
//!
//! Density operators for triangle and NCDS networks, local observable sets,
//! block-structured covariance matrices, the criteria built on them (trace
//! norm, block decompositions, the Ξ test) and an alternating-projection
//! feasibility solver for the block decomposition.

pub mod cli;
pub mod covariance;
pub mod criteria;
pub mod error;
pub mod feasibility;
pub mod observables;
pub mod random;
pub mod spec;
pub mod states;
pub mod tensor;

pub use covariance::{covariance_matrix, BlockCovarianceMatrix};
pub use error::{Error, Result};
pub use observables::{Observable, ObservableSet, OrthogonalBasis};
pub use states::{DensityOperator, KrausChannel};
pub use tensor::ComplexMatrix;
