//! Independent oracles shared by the integration tests. Nothing here calls
//! the crate's own linear-algebra helpers.
#![allow(dead_code)]

use prodgraph::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(A ⊗ B)[(i·rb + k), (j·cb + l)] = a_ij·b_kl`, written out entry by entry.
pub fn naive_kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = Matrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Column-major stacking.
pub fn naive_vec(m: &Matrix) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// `Σ_l c_l·S^l` by accumulating explicit powers.
pub fn naive_poly(s: &Matrix, coeffs: &[f64]) -> Matrix {
    let n = s.nrows();
    let mut power = Matrix::identity(n, n);
    let mut out = Matrix::zeros(n, n);
    for (l, c) in coeffs.iter().enumerate() {
        if l > 0 {
            power = &power * s;
        }
        out += &power * *c;
    }
    out
}

pub fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_symmetric(n: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    let m = Matrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

/// Entry-wise comparison of supports, `i ≠ j`.
pub fn same_support(a: &Matrix, b: &Matrix) -> bool {
    a.shape() == b.shape()
        && (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| i == j || (a[(i, j)] != 0.0) == (b[(i, j)] != 0.0)))
}

pub fn max_offdiag(m: &Matrix) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                best = best.max(m[(i, j)].abs());
            }
        }
    }
    best
}
