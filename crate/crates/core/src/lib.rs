//! Topology inference for product graphs from two-dimensional graph-stationary
//! signals.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: graph shift operators, Erdős–Rényi sampling, product graphs
//!   and symmetric eigendecomposition.
//! * [`signal`]: polynomial graph filters, synthetic two-dimensional signals
//!   and analytic/sample covariances.
//! * [`solver`]: the ℓ1-under-commutativity core and the ST, K-ST and SepK-ST
//!   estimators built on it, plus an interior-point reference solve.
//! * [`eval`]: binarization, F-score and commutativity metrics.
//! * [`io`]: CSV/JSON persistence shared by the command-line tools.
//!
//! All matrices are dense [`nalgebra::DMatrix<f64>`]. Two-dimensional signals
//! `Y` (P×Q) are vectorized column-major, so `vec(A·Y·Bᵀ) = (B ⊗ A)·vec(Y)`.

pub mod eval;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod signal;
pub mod solver;

pub use eval::{Adjacency, EvalError, EvalResult, ProductEval};
pub use graph::{EigPair, Gso, GsoError, NormMode, ProductKind};
pub use signal::{CovarianceSet, Generator, PolyFilter, Provenance, SignalError, SignalTensor};
pub use solver::{SolveError, SolveReport, SolveStatus, SolverOptions};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
