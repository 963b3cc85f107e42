//! Interior-point re-solve of the ℓ1 commutativity program for small `n`.
//!
//! Variables are the upper-triangular weights `x_ij`, `i < j`. With a positive
//! radius the program is an SOCP; with radius zero the commutator equality is
//! eliminated through a null-space basis and an LP remains, which is better
//! conditioned than imposing the equality directly.

use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT::{NonnegativeConeT, SecondOrderConeT, ZeroConeT},
};

use crate::graph::{validate_gso_tol, NormMode};
use crate::linalg::commutator;
use crate::Matrix;

use super::estimators::check_covariance;
use super::{SolveError, SolveReport, SolveStatus, SolverOptions};

pub const MAX_REFERENCE_N: usize = 6;

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

/// Dense `m×m` matrix mapping pair weights to `√2·[C, S]_ab`, `a < b`. The
/// commutator of symmetric matrices is antisymmetric, so these rows carry its
/// whole Frobenius norm.
fn commutator_rows(c: &Matrix) -> Matrix {
    let n = c.nrows();
    let pr = pairs(n);
    let m = pr.len();
    let mut out = Matrix::zeros(m, m);
    for (col, &(i, j)) in pr.iter().enumerate() {
        let mut s = Matrix::zeros(n, n);
        s[(i, j)] = 1.0;
        s[(j, i)] = 1.0;
        let k = commutator(c, &s);
        for (row, &(a, b)) in pr.iter().enumerate() {
            out[(row, col)] = std::f64::consts::SQRT_2 * k[(a, b)];
        }
    }
    out
}

/// Normalization rows `E·x = 1`.
fn normalization_rows(n: usize, mode: NormMode) -> Matrix {
    let pr = pairs(n);
    let rows = if mode == NormMode::RowStochastic { n } else { 1 };
    Matrix::from_fn(rows, pr.len(), |r, k| {
        let (i, j) = pr[k];
        if i == r || j == r {
            1.0
        } else {
            0.0
        }
    })
}

fn csc(m: &Matrix) -> CscMatrix<f64> {
    let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                rows.push(i);
                cols.push(j);
                vals.push(v);
            }
        }
    }
    CscMatrix::new_from_triplets(m.nrows(), m.ncols(), rows, cols, vals)
}

fn settings() -> DefaultSettings<f64> {
    DefaultSettings {
        verbose: false,
        max_iter: 500,
        tol_gap_abs: 1e-11,
        tol_gap_rel: 1e-11,
        tol_feas: 1e-11,
        tol_ktratio: 1e-9,
        ..DefaultSettings::default()
    }
}

enum Outcome {
    Solved(Vec<f64>, u32),
    Infeasible(u32),
    MaxIter(Vec<f64>, u32),
}

/// Runs `min qᵀx s.t. A·x + s = b, s ∈ cones`.
fn run(q: &[f64], a: &Matrix, b: &[f64], cones: &[clarabel::solver::SupportedConeT<f64>]) -> Result<Outcome, SolveError> {
    let nvar = q.len();
    let p = CscMatrix::zeros((nvar, nvar));
    let mut solver = DefaultSolver::new(&p, q, &csc(a), b, cones, settings())
        .map_err(|e| SolveError::Reference(format!("setup failed: {e}")))?;
    solver.solve();
    let it = solver.solution.iterations;
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Ok(Outcome::Solved(solver.solution.x.clone(), it)),
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Ok(Outcome::Infeasible(it)),
        SolverStatus::MaxIterations => Ok(Outcome::MaxIter(solver.solution.x.clone(), it)),
        other => Err(SolveError::Reference(format!("terminated with {other:?}"))),
    }
}

/// Solves the same program as [`super::solve_l1_commute`] with Clarabel.
/// Intended as an independent check; limited to `n ≤ 6`.
pub fn reference_solve_small(c: &Matrix, opts: &SolverOptions) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    opts.validate()?;
    let c = check_covariance(c, "covariance")?;
    let n = c.nrows();
    if n > MAX_REFERENCE_N {
        return Err(SolveError::InvalidInput(format!("reference solve supports n ≤ {MAX_REFERENCE_N}, got {n}")));
    }
    let scale = c.norm();
    let radius = opts.radius_for(scale);
    let (c_hat, r_hat) = if scale > 0.0 { (&c / scale, radius / scale) } else { (c.clone(), f64::INFINITY) };
    let pr = pairs(n);
    let m = pr.len();
    let k_rows = commutator_rows(&c_hat);
    let e_rows = normalization_rows(n, opts.norm_mode);
    let ne = e_rows.nrows();

    let outcome = if r_hat > 0.0 {
        // Rows: normalization (zero cone), −x ≤ 0, (r̂, −K·x) ∈ SOC.
        let mut a = Matrix::zeros(ne + m + 1 + m, m);
        a.view_mut((0, 0), (ne, m)).copy_from(&e_rows);
        a.view_mut((ne, 0), (m, m)).copy_from(&(-Matrix::identity(m, m)));
        a.view_mut((ne + m + 1, 0), (m, m)).copy_from(&(-&k_rows));
        let mut b = vec![0.0; a.nrows()];
        b[..ne].fill(1.0);
        let socp = r_hat.is_finite();
        b[ne + m] = if socp { r_hat } else { 0.0 };
        let q = vec![2.0; m];
        if socp {
            run(&q, &a, &b, &[ZeroConeT(ne), NonnegativeConeT(m), SecondOrderConeT(m + 1)])?
        } else {
            run(&q, &a.rows(0, ne + m).into_owned(), &b[..ne + m], &[ZeroConeT(ne), NonnegativeConeT(m)])?
        }
    } else {
        // x = N·y with N spanning ker K.
        let svd = k_rows.clone().svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let top = svd.singular_values.max();
        let null: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| top == 0.0 || svd.singular_values[k] <= 1e-9 * top)
            .collect();
        if null.is_empty() {
            Outcome::Infeasible(0)
        } else {
            let basis = Matrix::from_fn(m, null.len(), |r, k| v_t[(null[k], r)]);
            let d = basis.ncols();
            let mut a = Matrix::zeros(ne + m, d);
            a.view_mut((0, 0), (ne, d)).copy_from(&(&e_rows * &basis));
            a.view_mut((ne, 0), (m, d)).copy_from(&(-&basis));
            let mut b = vec![0.0; ne + m];
            b[..ne].fill(1.0);
            let q: Vec<f64> = (0..d).map(|k| 2.0 * basis.column(k).sum()).collect();
            match run(&q, &a, &b, &[ZeroConeT(ne), NonnegativeConeT(m)])? {
                Outcome::Solved(y, it) => Outcome::Solved((&basis * nalgebra::DVector::from_vec(y)).as_slice().to_vec(), it),
                Outcome::MaxIter(y, it) => Outcome::MaxIter((&basis * nalgebra::DVector::from_vec(y)).as_slice().to_vec(), it),
                Outcome::Infeasible(it) => Outcome::Infeasible(it),
            }
        }
    };

    let (x, status, iterations) = match outcome {
        Outcome::Solved(x, it) => (Some(x), SolveStatus::Optimal, it),
        Outcome::MaxIter(x, it) => (Some(x), SolveStatus::MaxIter, it),
        Outcome::Infeasible(it) => (None, SolveStatus::Infeasible, it),
    };
    let mut rep = SolveReport::empty(status, opts);
    rep.iterations = iterations as usize;
    rep.epsilon_used = vec![radius];
    if let Some(x) = x {
        let mut s = Matrix::zeros(n, n);
        for (&(i, j), &v) in pr.iter().zip(&x) {
            let v = v.max(0.0);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
        rep.commut_residual = Some(commutator(&c, &s).norm());
        let g = validate_gso_tol(s, opts.norm_mode, 1e-7)?;
        rep.objective = Some(g.l1());
        rep.s_full = Some(g);
    }
    rep.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rep)
}
