//! Graph shift operators, random graphs, product graphs and symmetric
//! eigendecomposition.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, kron};
use crate::{rng, Matrix};

/// Tolerance for the structural checks in [`validate_gso`].
pub const GSO_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GsoError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({i}, {j})")]
    AsymmetricMatrix { i: usize, j: usize },
    #[error("nonzero diagonal entry at ({i}, {i})")]
    NonzeroDiagonal { i: usize },
    #[error("negative entry at ({i}, {j})")]
    NegativeEntry { i: usize, j: usize },
    #[error("row {row} violates the {mode} normalization (sum {sum})")]
    NormalizationViolated { row: usize, mode: NormMode, sum: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("symmetric eigendecomposition did not converge")]
    ConvergenceFailure,
}

/// Normalization carried by a [`Gso`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    /// Every row sums to one.
    RowStochastic,
    /// Only the first row sums to one.
    FirstRowUnit,
    /// No normalization constraint (plain adjacency).
    BinaryUnnormalized,
}

impl NormMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormMode::RowStochastic => "row-stochastic",
            NormMode::FirstRowUnit => "first-row-unit",
            NormMode::BinaryUnnormalized => "binary-unnormalized",
        }
    }
}

impl fmt::Display for NormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormMode {
    type Err = GsoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "row-stochastic" => Ok(NormMode::RowStochastic),
            "first-row-unit" => Ok(NormMode::FirstRowUnit),
            "binary-unnormalized" => Ok(NormMode::BinaryUnnormalized),
            other => Err(GsoError::InvalidArgument(format!("unknown norm mode `{other}`"))),
        }
    }
}

/// Symmetric, nonnegative, hollow graph shift operator.
///
/// Instances only come out of [`validate_gso`] (or constructors that call it),
/// so every `Gso` satisfies its invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct Gso {
    weights: Matrix,
    norm_mode: NormMode,
}

impl Gso {
    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn into_weights(self) -> Matrix {
        self.weights
    }

    pub fn norm_mode(&self) -> NormMode {
        self.norm_mode
    }

    /// Number of undirected edges (nonzero upper-triangular entries).
    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.weights[(i, j)] != 0.0)
            .count()
    }

    /// Entrywise ℓ1 norm.
    pub fn l1(&self) -> f64 {
        self.weights.iter().map(|v| v.abs()).sum()
    }

    /// Rescales an unnormalized operator so its first row sums to one.
    /// Fails if the first row is empty.
    pub fn to_first_row_unit(&self) -> Result<Gso, GsoError> {
        let sum: f64 = self.weights.row(0).sum();
        if sum <= 0.0 {
            return Err(GsoError::NormalizationViolated { row: 0, mode: NormMode::FirstRowUnit, sum });
        }
        validate_gso(&self.weights / sum, NormMode::FirstRowUnit)
    }
}

/// Checks the operator invariants in the fixed order symmetry → diagonal →
/// sign → normalization and wraps the matrix. Never rescales.
pub fn validate_gso(m: Matrix, norm_mode: NormMode) -> Result<Gso, GsoError> {
    validate_gso_tol(m, norm_mode, GSO_TOL)
}

/// [`validate_gso`] with an explicit absolute tolerance.
pub fn validate_gso_tol(m: Matrix, norm_mode: NormMode, tol: f64) -> Result<Gso, GsoError> {
    if !m.is_square() {
        return Err(GsoError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol || m[(i, j)].is_nan() {
                return Err(GsoError::AsymmetricMatrix { i, j });
            }
        }
    }
    if let Some(i) = (0..n).find(|&i| m[(i, i)].abs() > tol) {
        return Err(GsoError::NonzeroDiagonal { i });
    }
    for i in 0..n {
        for j in 0..n {
            if m[(i, j)] < -tol {
                return Err(GsoError::NegativeEntry { i, j });
            }
        }
    }
    let rows_to_check = match norm_mode {
        NormMode::RowStochastic => n,
        NormMode::FirstRowUnit => 1.min(n),
        NormMode::BinaryUnnormalized => 0,
    };
    for row in 0..rows_to_check {
        let sum: f64 = m.row(row).sum();
        if (sum - 1.0).abs() > tol {
            return Err(GsoError::NormalizationViolated { row, mode: norm_mode, sum });
        }
    }
    Ok(Gso { weights: m, norm_mode })
}

/// Erdős–Rényi graph: each pair `i < j` (row-major order) is an edge with
/// probability `p`. Pure function of `(n, p, seed)`; no connectivity is
/// enforced.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Gso, GsoError> {
    if n < 2 {
        return Err(GsoError::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(GsoError::InvalidArgument(format!("p must lie in [0, 1], got {p}")));
    }
    let mut rng = rng::stream(seed, 0);
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    validate_gso(a, NormMode::BinaryUnnormalized)
}

/// Product graph construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductKind {
    Kronecker,
    Cartesian,
    Strong,
}

impl ProductKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProductKind::Kronecker => "kronecker",
            ProductKind::Cartesian => "cartesian",
            ProductKind::Strong => "strong",
        }
    }
}

impl fmt::Display for ProductKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProductKind {
    type Err = GsoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kronecker" => Ok(ProductKind::Kronecker),
            "cartesian" => Ok(ProductKind::Cartesian),
            "strong" => Ok(ProductKind::Strong),
            other => Err(GsoError::InvalidArgument(format!("unknown product kind `{other}`"))),
        }
    }
}

/// Product of raw factor matrices, ordered for column-major vectorization of
/// P×Q signals:
///
/// * kronecker: `Sq ⊗ Sp`
/// * cartesian: `Sq ⊗ I_P + I_Q ⊗ Sp`
/// * strong: kronecker + cartesian
pub fn product_matrix(sp: &Matrix, sq: &Matrix, kind: ProductKind) -> Matrix {
    let (p, q) = (sp.nrows(), sq.nrows());
    let cartesian = || kron(sq, &Matrix::identity(p, p)) + kron(&Matrix::identity(q, q), sp);
    match kind {
        ProductKind::Kronecker => kron(sq, sp),
        ProductKind::Cartesian => cartesian(),
        ProductKind::Strong => kron(sq, sp) + cartesian(),
    }
}

/// Product graph of two operators. The result carries no normalization.
pub fn product(sp: &Gso, sq: &Gso, kind: ProductKind) -> Gso {
    let m = product_matrix(sp.weights(), sq.weights(), kind);
    // Hollow, symmetric and nonnegative by construction.
    Gso { weights: m, norm_mode: NormMode::BinaryUnnormalized }
}

/// Orthonormal eigenvectors (columns) with ascending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigPair {
    pub vectors: Matrix,
    pub values: DVector<f64>,
}

impl EigPair {
    /// `V·diag(Λ)·Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let v = &self.vectors;
        let scaled = Matrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * self.values[j]);
        scaled * v.transpose()
    }
}

/// Entries below this magnitude are skipped when fixing eigenvector signs.
const SIGN_EPS: f64 = 1e-10;

/// Symmetric eigendecomposition with ascending eigenvalues and each
/// eigenvector's first nonzero entry made positive.
pub fn eig_sym(m: &Matrix) -> Result<EigPair, GsoError> {
    let asym = linalg::asymmetry(m)
        .ok_or(GsoError::NotSquare { rows: m.nrows(), cols: m.ncols() })?;
    if asym > 1e-9 * linalg::max_abs(m).max(1.0) {
        return Err(GsoError::InvalidArgument(format!("matrix is not symmetric (max |M - Mᵀ| = {asym:e})")));
    }
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(linalg::symmetrize(m), f64::EPSILON, 100 * n.max(10))
        .ok_or(GsoError::ConvergenceFailure)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut vectors = Matrix::zeros(n, n);
    let mut values = DVector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        if let Some(first) = col.iter().find(|v| v.abs() > SIGN_EPS) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(dst, &col);
        values[dst] = eig.eigenvalues[src];
    }
    Ok(EigPair { vectors, values })
}
