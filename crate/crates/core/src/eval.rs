//! Edge-recovery scores and the stationarity residual.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{product_matrix, ProductKind};
use crate::linalg::{commutator, kron};
use crate::Matrix;

pub const DEFAULT_TAU: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a binary adjacency matrix: {0}")]
    NotAdjacency(String),
}

/// Symmetric, hollow 0/1 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency(Matrix);

impl Adjacency {
    pub fn new(m: Matrix) -> Result<Self, EvalError> {
        if !m.is_square() {
            return Err(EvalError::NotAdjacency(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(EvalError::NotAdjacency(format!("diagonal entry {i} is nonzero")));
            }
            for j in 0..n {
                let v = m[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(EvalError::NotAdjacency(format!("entry ({i},{j}) = {v}")));
                }
                if v != m[(j, i)] {
                    return Err(EvalError::NotAdjacency(format!("entry ({i},{j}) breaks symmetry")));
                }
            }
        }
        Ok(Self(m))
    }

    /// Support of a weighted symmetric matrix, ignoring the diagonal.
    pub fn support(m: &Matrix) -> Self {
        let n = m.nrows();
        Self(Matrix::from_fn(n, n, |i, j| {
            if i != j && (m[(i, j)] != 0.0 || m[(j, i)] != 0.0) {
                1.0
            } else {
                0.0
            }
        }))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).filter(|&(i, j)| self.0[(i, j)] == 1.0).count()
    }
}

/// Keeps entries at or above `tau` times the largest entry. The zero matrix
/// maps to the empty graph.
pub fn binarize(s: &Matrix, tau: f64) -> Adjacency {
    let n = s.nrows();
    let top = s.iter().fold(0.0_f64, |a, v| a.max(*v));
    if top <= 0.0 {
        return Adjacency(Matrix::zeros(n, n));
    }
    let thr = tau * top;
    Adjacency(Matrix::from_fn(n, n, |i, j| {
        if i != j && (s[(i, j)] >= thr || s[(j, i)] >= thr) {
            1.0
        } else {
            0.0
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub commutativity: Option<f64>,
}

/// Precision, recall and F-score over unordered pairs. No predicted edges
/// gives precision 0; no true edges gives recall 0.
pub fn fscore(pred: &Adjacency, truth: &Adjacency) -> Result<EvalResult, EvalError> {
    if pred.n() != truth.n() {
        return Err(EvalError::DimensionMismatch(format!("prediction is {}, truth is {}", pred.n(), truth.n())));
    }
    let n = pred.n();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for i in 0..n {
        for j in (i + 1)..n {
            match (pred.0[(i, j)] == 1.0, truth.0[(i, j)] == 1.0) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let fscore = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    Ok(EvalResult { precision, recall, fscore, tp, fp, fn_, commutativity: None })
}

/// `‖C·S − S·C‖_F²`.
pub fn commutativity(c: &Matrix, s: &Matrix) -> Result<f64, EvalError> {
    if c.shape() != s.shape() || !c.is_square() {
        return Err(EvalError::DimensionMismatch(format!("C is {:?}, S is {:?}", c.shape(), s.shape())));
    }
    Ok(commutator(c, s).norm_squared())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductEval {
    /// Factor scores; absent for unstructured estimates.
    pub p: Option<EvalResult>,
    pub q: Option<EvalResult>,
    pub product: EvalResult,
}

/// Scores factor estimates and the product graph they induce. The product
/// graph is built from the binarized factors with `kind`; commutativity, when
/// `c_y` is given, uses the Kronecker product of the raw estimates.
pub fn eval_product(
    s_p: &Matrix,
    s_q: &Matrix,
    truth_p: &Adjacency,
    truth_q: &Adjacency,
    kind: ProductKind,
    c_y: Option<&Matrix>,
    tau: f64,
) -> Result<ProductEval, EvalError> {
    let bp = binarize(s_p, tau);
    let bq = binarize(s_q, tau);
    let p = fscore(&bp, truth_p)?;
    let q = fscore(&bq, truth_q)?;
    let pred = Adjacency::support(&product_matrix(bp.matrix(), bq.matrix(), kind));
    let truth = Adjacency::support(&product_matrix(truth_p.matrix(), truth_q.matrix(), kind));
    let mut product = fscore(&pred, &truth)?;
    if let Some(c) = c_y {
        product.commutativity = Some(commutativity(c, &kron(s_q, s_p))?);
    }
    Ok(ProductEval { p: Some(p), q: Some(q), product })
}

/// Scores an unstructured estimate of the full operator.
pub fn eval_full(s: &Matrix, truth: &Adjacency, c_y: Option<&Matrix>, tau: f64) -> Result<ProductEval, EvalError> {
    let mut product = fscore(&binarize(s, tau), truth)?;
    if let Some(c) = c_y {
        product.commutativity = Some(commutativity(c, s)?);
    }
    Ok(ProductEval { p: None, q: None, product })
}
