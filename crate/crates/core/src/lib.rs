//! Structured random measurement matrices built from randomly signed partial
//! Hadamard-Walsh blocks, with restricted-isometry diagnostics, sparse
//! recovery solvers, a Johnson-Lindenstrauss style embedding and baseline
//! ensembles for comparison.

pub mod baselines;
pub mod embedding;
pub mod error;
pub mod linalg;
pub mod manifest;
pub mod operator;
pub mod recovery;
pub mod report;
pub mod rip;
pub mod rng;
pub mod sparse_city;
pub mod walsh;

pub use error::{Error, Result};
pub use operator::{CountingOperator, DenseOperator, LinearOperator};
pub use sparse_city::{DistName, MatrixManifest, RankOneIndex, SparseCityMatrix, ThetaDistribution};
pub use walsh::{HadamardOrder, PartialWalsh};
