//! Commutator balls `{X = Xᵀ : ‖L(X)‖_F ≤ ε}` and their Euclidean
//! projections.
//!
//! Both implementations diagonalize the quadratic form `‖L(X)‖²` in an
//! orthonormal basis of symmetric matrices, which turns the projection into a
//! projection onto an axis-aligned ellipsoid.

use nalgebra::DVector;

use crate::graph::{eig_sym, GsoError};
use crate::linalg::symmetrize;
use crate::Matrix;

/// Normalized weights at or below this value are treated as exact kernel
/// directions of `L` (eigenvalue gaps below 1e−9 of the spectral spread).
const EIGEN_KERNEL_TOL: f64 = 1e-18;
/// Same for the Gram route, whose eigenvalues carry `O(ε_mach·‖G‖)` error.
const GRAM_KERNEL_TOL: f64 = 1e-13;
/// Directions whose image norm is below this fraction of the residual
/// tolerance are also kernel directions. The black-box maps are built from
/// iterates that commute only to solver accuracy, so their exact kernel is
/// perturbed at that level.
const GRAM_KERNEL_ABS: f64 = 0.1;

pub(crate) trait CommuteSet {
    fn n(&self) -> usize;
    /// Frobenius projection of a symmetric matrix onto the ball.
    fn project(&self, m: &Matrix) -> Matrix;
    /// `‖L(X)‖_F` in the caller's units.
    fn residual(&self, x: &Matrix) -> f64;
    /// Orthonormal basis of `ker L` (symmetric matrices).
    fn kernel_basis(&self) -> Vec<Matrix>;
    /// Whether the radius is zero, i.e. the set is `ker L`.
    fn is_exact(&self) -> bool;
}

/// Projects `v` onto `{t : Σ w_k t_k² ≤ r²}` in place. With `r == 0` the
/// components with `w_k > kernel_tol` are zeroed.
pub(crate) fn project_ellipsoid(v: &mut [f64], w: &[f64], r: f64, kernel_tol: f64) {
    if r == 0.0 {
        for (t, &wk) in v.iter_mut().zip(w) {
            if wk > kernel_tol {
                *t = 0.0;
            }
        }
        return;
    }
    let phi = |mu: f64| -> (f64, f64) {
        let mut val = 0.0;
        let mut der = 0.0;
        for (&t, &wk) in v.iter().zip(w) {
            let d = 1.0 + mu * wk;
            val += wk * t * t / (d * d);
            der -= 2.0 * wk * wk * t * t / (d * d * d);
        }
        (val, der)
    };
    let target = r * r;
    let (mut val, mut der) = phi(0.0);
    if val <= target {
        return;
    }
    // φ is convex and decreasing, so Newton from the left increases
    // monotonically toward the root.
    let mut mu = 0.0_f64;
    for _ in 0..200 {
        if der >= 0.0 {
            break;
        }
        let step = (val - target) / -der;
        mu += step;
        (val, der) = phi(mu);
        if step <= 1e-15 * mu.max(1e-300) || (val - target).abs() <= 1e-15 * target {
            break;
        }
    }
    for (t, &wk) in v.iter_mut().zip(w) {
        *t /= 1.0 + mu * wk;
    }
}

/// `{X : ‖C·X − X·C‖_F ≤ ε}` handled in the eigenbasis of `C`, where the
/// quadratic form is `Σ_ij (c_i − c_j)²·X̂_ij²`.
pub(crate) struct EigenCommutator {
    c: Matrix,
    vectors: Matrix,
    weights: Matrix,
    radius: f64,
}

impl EigenCommutator {
    pub fn new(c: &Matrix, epsilon: f64) -> Result<Self, GsoError> {
        let n = c.nrows();
        let scale = c.norm();
        let (vectors, weights, radius) = if scale == 0.0 {
            (Matrix::identity(n, n), Matrix::zeros(n, n), f64::INFINITY)
        } else {
            let eig = eig_sym(&(c / scale))?;
            let spread = eig.values[n - 1] - eig.values[0];
            if spread <= 1e-14 {
                (eig.vectors, Matrix::zeros(n, n), f64::INFINITY)
            } else {
                let w = Matrix::from_fn(n, n, |i, j| ((eig.values[i] - eig.values[j]) / spread).powi(2));
                (eig.vectors, w, epsilon / (scale * spread))
            }
        };
        Ok(Self { c: c.clone(), vectors, weights, radius })
    }
}

impl CommuteSet for EigenCommutator {
    fn n(&self) -> usize {
        self.c.nrows()
    }

    fn project(&self, m: &Matrix) -> Matrix {
        if self.radius.is_infinite() {
            return symmetrize(m);
        }
        let v = &self.vectors;
        let mut hat = v.transpose() * symmetrize(m) * v;
        project_ellipsoid(hat.as_mut_slice(), self.weights.as_slice(), self.radius, EIGEN_KERNEL_TOL);
        symmetrize(&(v * hat * v.transpose()))
    }

    fn residual(&self, x: &Matrix) -> f64 {
        (&self.c * x - x * &self.c).norm()
    }

    fn kernel_basis(&self) -> Vec<Matrix> {
        let n = self.n();
        let v = &self.vectors;
        let mut basis = Vec::new();
        for i in 0..n {
            for j in i..n {
                if self.weights[(i, j)] > EIGEN_KERNEL_TOL {
                    continue;
                }
                let (vi, vj) = (v.column(i), v.column(j));
                let b = if i == j {
                    vi * vi.transpose()
                } else {
                    (vi * vj.transpose() + vj * vi.transpose()) * std::f64::consts::FRAC_1_SQRT_2
                };
                basis.push(b);
            }
        }
        basis
    }

    fn is_exact(&self) -> bool {
        self.radius == 0.0
    }
}

/// Coordinates of a symmetric matrix in the orthonormal basis
/// `{E_ii} ∪ {(E_ij + E_ji)/√2 : i < j}`.
pub(crate) fn svec(m: &Matrix) -> DVector<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        out.push(m[(i, i)]);
        for j in (i + 1)..n {
            out.push((m[(i, j)] + m[(j, i)]) * std::f64::consts::FRAC_1_SQRT_2);
        }
    }
    DVector::from_vec(out)
}

pub(crate) fn smat(t: &[f64], n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        m[(i, i)] = t[k];
        k += 1;
        for j in (i + 1)..n {
            let v = t[k] * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = v;
            m[(j, i)] = v;
            k += 1;
        }
    }
    m
}

/// `{X : ‖L(X)‖_F ≤ ε}` for a linear map only available as a black box. The
/// images of the basis are computed once; their Gram matrix is diagonalized.
pub(crate) struct GramCommutator {
    n: usize,
    images: Vec<Matrix>,
    basis: Matrix,
    weights: Vec<f64>,
    kernel_tol: f64,
    radius: f64,
}

impl GramCommutator {
    pub fn new(n: usize, epsilon: f64, tol: f64, map: impl Fn(&Matrix) -> Matrix) -> Result<Self, GsoError> {
        let d = n * (n + 1) / 2;
        let images: Vec<Matrix> = (0..d)
            .map(|k| {
                let mut e = vec![0.0; d];
                e[k] = 1.0;
                map(&smat(&e, n))
            })
            .collect();
        let gram = Matrix::from_fn(d, d, |a, b| images[a].dot(&images[b]));
        let gmax = gram.diagonal().max();
        if gmax <= 0.0 {
            return Ok(Self {
                n,
                images,
                basis: Matrix::identity(d, d),
                weights: vec![0.0; d],
                kernel_tol: 0.0,
                radius: f64::INFINITY,
            });
        }
        let eig = eig_sym(&gram)?;
        let top = eig.values[d - 1];
        let weights = eig.values.iter().map(|g| (g / top).max(0.0)).collect();
        let kernel_tol = GRAM_KERNEL_TOL.max((GRAM_KERNEL_ABS * tol).powi(2) / top);
        Ok(Self { n, images, basis: eig.vectors, weights, kernel_tol, radius: epsilon / top.sqrt() })
    }
}

impl CommuteSet for GramCommutator {
    fn n(&self) -> usize {
        self.n
    }

    fn project(&self, m: &Matrix) -> Matrix {
        if self.radius.is_infinite() {
            return symmetrize(m);
        }
        let mut u = self.basis.transpose() * svec(m);
        project_ellipsoid(u.as_mut_slice(), &self.weights, self.radius, self.kernel_tol);
        let t = &self.basis * u;
        smat(t.as_slice(), self.n)
    }

    fn residual(&self, x: &Matrix) -> f64 {
        let t = svec(x);
        let mut acc = Matrix::zeros(self.images[0].nrows(), self.images[0].ncols());
        for (tk, img) in t.iter().zip(&self.images) {
            if *tk != 0.0 {
                acc += img * *tk;
            }
        }
        acc.norm()
    }

    fn kernel_basis(&self) -> Vec<Matrix> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w <= self.kernel_tol)
            .map(|(k, _)| smat(self.basis.column(k).as_slice(), self.n))
            .collect()
    }

    fn is_exact(&self) -> bool {
        self.radius == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::commutator;

    fn sample_c() -> Matrix {
        Matrix::from_row_slice(3, 3, &[2.0, 0.5, 0.1, 0.5, 1.0, 0.3, 0.1, 0.3, 0.5])
    }

    #[test]
    fn ellipsoid_projection_hits_boundary() {
        let mut v = vec![3.0, -2.0, 1.0];
        let w = [1.0, 0.5, 0.0];
        project_ellipsoid(&mut v, &w, 1.0, 0.0);
        let q: f64 = v.iter().zip(&w).map(|(t, wk)| wk * t * t).sum();
        assert!((q - 1.0).abs() < 1e-12);
        // Zero-weight components are untouched.
        assert_eq!(v[2], 1.0);
    }

    #[test]
    fn svec_roundtrip_is_isometric() {
        let m = sample_c();
        let t = svec(&m);
        assert!((t.norm() - m.norm()).abs() < 1e-14);
        assert!((smat(t.as_slice(), 3) - m).norm() < 1e-15);
    }

    #[test]
    fn eigen_projection_respects_radius() {
        let c = sample_c();
        let set = EigenCommutator::new(&c, 0.2).unwrap();
        let x = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]);
        let p = set.project(&x);
        assert!((commutator(&c, &p).norm() - 0.2).abs() < 1e-10);
        // Projection is idempotent.
        assert!((set.project(&p) - &p).norm() < 1e-10);
    }

    #[test]
    fn gram_and_eigen_agree() {
        let c = sample_c();
        let eig = EigenCommutator::new(&c, 0.3).unwrap();
        let gram = GramCommutator::new(3, 0.3, 1e-6, |x| commutator(&c, x)).unwrap();
        let x = Matrix::from_row_slice(3, 3, &[0.0, 1.0, -2.0, 1.0, 0.5, 1.0, -2.0, 1.0, 0.0]);
        assert!((eig.project(&x) - gram.project(&x)).norm() < 1e-9);
        assert!((eig.residual(&x) - gram.residual(&x)).abs() < 1e-12);
        assert_eq!(eig.kernel_basis().len(), 3);
    }

    #[test]
    fn exact_projection_lands_in_commutant() {
        let c = sample_c();
        let set = EigenCommutator::new(&c, 0.0).unwrap();
        let x = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]);
        assert!(commutator(&c, &set.project(&x)).norm() < 1e-12);
    }
}
