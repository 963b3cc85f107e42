//! Proximal map of `t·‖Z‖₁ + ι_𝒮(Z)` where `𝒮` holds symmetric, hollow,
//! nonnegative matrices with a normalization constraint.
//!
//! On `𝒮` the ℓ1 norm is linear (`2·Σ_{i<j} z_ij`), so the prox reduces to a
//! Euclidean projection of the shifted pair values `m̄_ij − t` onto the
//! normalization polytope.

use nalgebra::DVector;

use crate::graph::NormMode;
use crate::Matrix;

/// Projects `v` onto the probability simplex `{z ≥ 0, Σz = 1}`.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

/// Projects pair values onto `{z ≥ 0 : Σ_{j} z_{ij} = 1 ∀ i}` (every node
/// has unit weighted degree) by semismooth Newton on the dual.
pub(crate) fn project_row_stochastic(n: usize, v: &[f64]) -> Vec<f64> {
    let pr = pairs(n);
    let z_of = |lam: &DVector<f64>| -> Vec<f64> {
        pr.iter().zip(v).map(|(&(i, j), &vk)| (vk + lam[i] + lam[j]).max(0.0)).collect()
    };
    // Dual objective (to maximize): Σλ − ½‖max(0, v + Bᵀλ)‖².
    let dual = |lam: &DVector<f64>| -> f64 {
        let z = z_of(lam);
        lam.sum() - 0.5 * z.iter().map(|x| x * x).sum::<f64>()
    };
    let mut lam = DVector::zeros(n);
    let mut z = z_of(&lam);
    let mut f = dual(&lam);
    for _ in 0..200 {
        let mut grad = DVector::from_element(n, 1.0);
        let mut hess = Matrix::zeros(n, n);
        for (k, &(i, j)) in pr.iter().enumerate() {
            grad[i] -= z[k];
            grad[j] -= z[k];
            if v[k] + lam[i] + lam[j] > 0.0 {
                hess[(i, i)] += 1.0;
                hess[(j, j)] += 1.0;
                hess[(i, j)] += 1.0;
                hess[(j, i)] += 1.0;
            }
        }
        if grad.amax() <= 1e-13 {
            break;
        }
        let reg = 1e-10 * (1.0 + hess.diagonal().amax());
        for i in 0..n {
            hess[(i, i)] += reg;
        }
        let dir = hess.cholesky().map(|c| c.solve(&grad)).unwrap_or_else(|| grad.clone());
        let slope = grad.dot(&dir);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &lam + &dir * step;
            let fc = dual(&cand);
            if fc >= f + 1e-4 * step * slope {
                lam = cand;
                f = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        z = z_of(&lam);
        if !accepted {
            break;
        }
    }
    z
}

/// Evaluates the prox at `m` with ℓ1 weight `shrink`. The result is exactly
/// symmetric and hollow.
pub(crate) fn prox_l1_gso(m: &Matrix, shrink: f64, mode: NormMode) -> Matrix {
    let n = m.nrows();
    let pr = pairs(n);
    let shifted: Vec<f64> = pr.iter().map(|&(i, j)| 0.5 * (m[(i, j)] + m[(j, i)]) - shrink).collect();
    let z = match mode {
        NormMode::FirstRowUnit => {
            let mut z: Vec<f64> = shifted.iter().map(|x| x.max(0.0)).collect();
            // Row-0 pairs come first in row-major order.
            let head = project_simplex(&shifted[..n - 1]);
            z[..n - 1].copy_from_slice(&head);
            z
        }
        NormMode::RowStochastic => project_row_stochastic(n, &shifted),
        NormMode::BinaryUnnormalized => shifted.iter().map(|x| x.max(0.0)).collect(),
    };
    let mut out = Matrix::zeros(n, n);
    for (&(i, j), &zk) in pr.iter().zip(&z) {
        out[(i, j)] = zk;
        out[(j, i)] = zk;
    }
    out
}

/// Uniform member of `𝒮`: the complete graph scaled to unit degree.
pub(crate) fn uniform_gso(n: usize) -> Matrix {
    let w = 1.0 / (n - 1) as f64;
    Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { w })
}
