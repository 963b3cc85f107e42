//! Small dense linear-algebra helpers shared by the other modules.

use nalgebra::DVector;

use crate::Matrix;

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Column-major vectorization.
pub fn vec_col(m: &Matrix) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_col`]: reshapes a length `rows·cols` vector column-major.
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Matrix {
    assert_eq!(v.len(), rows * cols, "unvec: length mismatch");
    Matrix::from_column_slice(rows, cols, v)
}

/// `C·S − S·C`.
pub fn commutator(c: &Matrix, s: &Matrix) -> Matrix {
    c * s - s * c
}

/// `(M + Mᵀ)/2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest `|m[i][j] − m[j][i]|`, or `None` if `m` is not square.
pub fn asymmetry(m: &Matrix) -> Option<f64> {
    if !m.is_square() {
        return None;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    Some(worst)
}

/// Sum of the P×P diagonal blocks of a (PQ)×(PQ) matrix: the covariance along
/// the first dimension implied by a covariance of column-major vectorized
/// P×Q signals.
pub fn partial_trace_q(c_y: &Matrix, p: usize, q: usize) -> Matrix {
    assert_eq!(c_y.nrows(), p * q);
    let mut out = Matrix::zeros(p, p);
    for k in 0..q {
        out += c_y.view((k * p, k * p), (p, p));
    }
    out
}

/// Trace over the first dimension: `out[c][d] = Σ_p C_y[p + P·c][p + P·d]`.
pub fn partial_trace_p(c_y: &Matrix, p: usize, q: usize) -> Matrix {
    assert_eq!(c_y.nrows(), p * q);
    Matrix::from_fn(q, q, |c, d| (0..p).map(|i| c_y[(i + p * c, i + p * d)]).sum())
}

/// Evaluates `Σ_l coeffs[l]·S^l` with `S^0 = I`.
pub fn matrix_polynomial(s: &Matrix, coeffs: &[f64]) -> Matrix {
    let n = s.nrows();
    let mut power = Matrix::identity(n, n);
    let mut acc = Matrix::zeros(n, n);
    for (l, &h) in coeffs.iter().enumerate() {
        if l > 0 {
            power = &power * s;
        }
        acc += &power * h;
    }
    acc
}

/// Applies a scalar function to the spectrum of a symmetric matrix.
pub fn spectral_map(m: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let eig = nalgebra::SymmetricEigen::new(symmetrize(m));
    let d = eig.eigenvalues.map(f);
    let v = &eig.eigenvectors;
    let scaled = Matrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * d[j]);
    symmetrize(&(scaled * v.transpose()))
}

/// Square root of a symmetric PSD matrix; negative eigenvalues (rounding
/// artefacts) are clamped to zero.
pub fn psd_sqrt(m: &Matrix) -> Matrix {
    spectral_map(m, |x| x.max(0.0).sqrt())
}
