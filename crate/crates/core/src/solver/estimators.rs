//! ST, K-ST and SepK-ST on top of the shared ADMM core.

use std::time::Instant;

use crate::graph::{validate_gso_tol, Gso};
use crate::linalg::{asymmetry, kron, max_abs, partial_trace_p, symmetrize, unvec, vec_col};
use crate::Matrix;

use super::admm::{self, EngineOutput};
use super::constraint::{EigenCommutator, GramCommutator};
use super::feasible::uniform_gso;
use super::{SolveError, SolveReport, SolveStatus, SolverOptions};

/// Estimates returned by the engine satisfy the invariants to rounding; this
/// is the slack allowed when wrapping them.
const WRAP_TOL: f64 = 1e-8;

pub(crate) fn check_covariance(c: &Matrix, what: &str) -> Result<Matrix, SolveError> {
    if !c.is_square() {
        return Err(SolveError::InvalidInput(format!("{what} is {}x{}, expected square", c.nrows(), c.ncols())));
    }
    if c.nrows() < 2 {
        return Err(SolveError::InvalidInput(format!("{what} must be at least 2x2")));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::InvalidInput(format!("{what} has non-finite entries")));
    }
    let asym = asymmetry(c).unwrap_or(f64::INFINITY);
    if asym > 1e-8 * max_abs(c).max(1.0) {
        return Err(SolveError::InvalidInput(format!("{what} is not symmetric (max deviation {asym:e})")));
    }
    Ok(symmetrize(c))
}

fn wrap(m: Matrix, opts: &SolverOptions) -> Result<Gso, SolveError> {
    Ok(validate_gso_tol(m, opts.norm_mode, WRAP_TOL.max(opts.tol))?)
}

fn single_report(out: EngineOutput, radius: f64, opts: &SolverOptions, start: Instant) -> Result<SolveReport, SolveError> {
    let mut rep = SolveReport::empty(out.status, opts);
    rep.iterations = out.iterations;
    rep.commut_residual = out.residual;
    rep.epsilon_used = vec![radius];
    if let Some(z) = out.estimate {
        let g = wrap(z, opts)?;
        rep.objective = Some(g.l1());
        rep.s_full = Some(g);
    }
    rep.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Minimizes `‖S‖₁` subject to `‖C·S − S·C‖_F ≤ ε` and `S ∈ 𝒮`. The estimate
/// is returned in `s_full`.
pub fn solve_l1_commute(c: &Matrix, opts: &SolverOptions) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    opts.validate()?;
    let c = check_covariance(c, "covariance")?;
    let radius = opts.radius_for(c.norm());
    let set = EigenCommutator::new(&c, radius)?;
    let out = admm::run(&set, opts.norm_mode, radius, opts.tol, opts.max_iter, None);
    single_report(out, radius, opts, start)
}

/// Unstructured estimate of the full `PQ×PQ` shift operator.
pub fn solve_st(c_y: &Matrix, opts: &SolverOptions) -> Result<SolveReport, SolveError> {
    solve_l1_commute(c_y, opts)
}

/// Which factor of the Kronecker pair is optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KstFactor {
    P,
    Q,
}

/// The linear map `X ↦ C·T − T·C` for `T = S_Q⊗X` (free P) or `T = X⊗S_P`
/// (free Q), applied through `(A⊗B)·vec(M) = vec(B·M·Aᵀ)` column by column.
struct KronCommutator<'a> {
    slabs: Vec<Matrix>,
    fixed: &'a Matrix,
    free: KstFactor,
    p: usize,
    q: usize,
}

impl<'a> KronCommutator<'a> {
    fn new(c_y: &Matrix, p: usize, q: usize, free: KstFactor, fixed: &'a Matrix) -> Self {
        let slabs = (0..p * q).map(|k| unvec(c_y.column(k).as_slice(), p, q)).collect();
        Self { slabs, fixed, free, p, q }
    }

    fn apply(&self, x: &Matrix) -> Matrix {
        let n = self.p * self.q;
        let mut tc = Matrix::zeros(n, n);
        for (k, m) in self.slabs.iter().enumerate() {
            let col = match self.free {
                KstFactor::P => x * m * self.fixed,
                KstFactor::Q => self.fixed * m * x,
            };
            tc.set_column(k, &vec_col(&col));
        }
        tc.transpose() - tc
    }
}

fn kst_subproblem(
    c_y: &Matrix,
    p: usize,
    q: usize,
    free: KstFactor,
    fixed: &Matrix,
    radius: f64,
    opts: &SolverOptions,
    warm: Option<&Matrix>,
) -> Result<EngineOutput, SolveError> {
    let map = KronCommutator::new(c_y, p, q, free, fixed);
    let n = match free {
        KstFactor::P => p,
        KstFactor::Q => q,
    };
    let set = GramCommutator::new(n, radius, opts.tol, |x| map.apply(x))?;
    Ok(admm::run(&set, opts.norm_mode, radius, opts.tol, opts.max_iter, warm))
}

fn check_kst_input(c_y: &Matrix, p: usize, q: usize) -> Result<Matrix, SolveError> {
    if p < 2 || q < 2 {
        return Err(SolveError::InvalidInput(format!("factor sizes must be at least 2, got P={p}, Q={q}")));
    }
    if c_y.nrows() != p * q {
        return Err(SolveError::InvalidInput(format!(
            "full covariance is {}x{}, expected {}x{} for P={p}, Q={q}",
            c_y.nrows(),
            c_y.ncols(),
            p * q,
            p * q
        )));
    }
    check_covariance(c_y, "full covariance")
}

fn check_factor(m: &Matrix, n: usize, what: &str) -> Result<(), SolveError> {
    if m.nrows() != n || m.ncols() != n {
        return Err(SolveError::InvalidInput(format!("{what} must be {n}x{n}")));
    }
    Ok(())
}

/// One K-ST subproblem: optimizes the `free` factor with the other held at
/// `fixed`. The estimate is returned in `s_p` or `s_q`.
pub fn solve_kst_factor(
    c_y: &Matrix,
    p: usize,
    q: usize,
    free: KstFactor,
    fixed: &Matrix,
    opts: &SolverOptions,
) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    opts.validate()?;
    let c_y = check_kst_input(c_y, p, q)?;
    let fixed_n = if free == KstFactor::P { q } else { p };
    check_factor(fixed, fixed_n, "fixed factor")?;
    let radius = opts.radius_for(c_y.norm());
    let out = kst_subproblem(&c_y, p, q, free, fixed, radius, opts, None)?;
    let mut rep = SolveReport::empty(out.status, opts);
    rep.iterations = out.iterations;
    rep.commut_residual = out.residual;
    rep.epsilon_used = vec![radius];
    rep.alt_rounds = Some(1);
    if let Some(z) = out.estimate {
        let g = wrap(z, opts)?;
        rep.objective = Some(g.l1());
        match free {
            KstFactor::P => rep.s_p = Some(g),
            KstFactor::Q => rep.s_q = Some(g),
        }
    }
    rep.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

fn relative_change(new: &Matrix, old: &Matrix) -> f64 {
    (new - old).norm() / old.norm().max(f64::MIN_POSITIVE)
}

/// Alternating estimate of a Kronecker pair `S_Q⊗S_P` from the full
/// covariance. `S_Q` is initialized from an ℓ1 solve on the second-dimension
/// covariance (the partial trace of `c_y` over the first dimension).
pub fn solve_kst(c_y: &Matrix, p: usize, q: usize, opts: &SolverOptions) -> Result<SolveReport, SolveError> {
    solve_kst_with_init(c_y, p, q, None, opts)
}

/// [`solve_kst`] with an explicit starting `S_Q`.
pub fn solve_kst_with_init(
    c_y: &Matrix,
    p: usize,
    q: usize,
    init_q: Option<&Matrix>,
    opts: &SolverOptions,
) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    opts.validate()?;
    let c_y = check_kst_input(c_y, p, q)?;
    let cy_norm = c_y.norm();
    let radius = opts.radius_for(cy_norm);
    let mut iterations = 0;
    let mut epsilon_used = Vec::new();

    let mut s_q = match init_q {
        Some(m) => {
            check_factor(m, q, "initial second factor")?;
            m.clone()
        }
        None => {
            let c_q = partial_trace_p(&c_y, p, q);
            let cq_norm = c_q.norm();
            let scale = if cy_norm > 0.0 { cq_norm / cy_norm } else { 0.0 };
            let init_opts = SolverOptions { epsilon: opts.epsilon * scale, ..*opts };
            epsilon_used.push(init_opts.radius_for(cq_norm));
            let rep = solve_l1_commute(&c_q, &init_opts)?;
            iterations += rep.iterations;
            match rep.s_full {
                Some(g) => g.into_weights(),
                None => uniform_gso(q),
            }
        }
    };
    epsilon_used.push(radius);

    let mut status = SolveStatus::Optimal;
    let mut s_p: Option<Matrix> = None;
    let mut rounds = 0;
    for round in 1..=opts.alt_max_rounds {
        rounds = round;
        let out_p = kst_subproblem(&c_y, p, q, KstFactor::P, &s_q, radius, opts, s_p.as_ref())?;
        iterations += out_p.iterations;
        status = status.worst(out_p.status);
        let Some(new_p) = out_p.estimate else {
            return Ok(kst_infeasible(opts, iterations, rounds, epsilon_used, start));
        };
        let out_q = kst_subproblem(&c_y, p, q, KstFactor::Q, &new_p, radius, opts, Some(&s_q))?;
        iterations += out_q.iterations;
        status = status.worst(out_q.status);
        let Some(new_q) = out_q.estimate else {
            return Ok(kst_infeasible(opts, iterations, rounds, epsilon_used, start));
        };
        let dq = relative_change(&new_q, &s_q);
        let dp = s_p.as_ref().map(|old| relative_change(&new_p, old));
        s_q = new_q;
        s_p = Some(new_p);
        if dq < opts.alt_rel_change && dp.is_none_or(|d| d < opts.alt_rel_change) {
            break;
        }
    }

    let s_p = s_p.expect("at least one round ran");
    let residual = {
        let t = kron(&s_q, &s_p);
        (&c_y * &t - &t * &c_y).norm()
    };
    let gp = wrap(s_p, opts)?;
    let gq = wrap(s_q, opts)?;
    let mut rep = SolveReport::empty(status, opts);
    rep.objective = Some(gp.l1() + opts.beta * gq.l1());
    rep.commut_residual = Some(residual);
    rep.iterations = iterations;
    rep.alt_rounds = Some(rounds);
    rep.epsilon_used = epsilon_used;
    rep.s_p = Some(gp);
    rep.s_q = Some(gq);
    rep.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rep)
}

fn kst_infeasible(
    opts: &SolverOptions,
    iterations: usize,
    rounds: usize,
    epsilon_used: Vec<f64>,
    start: Instant,
) -> SolveReport {
    let mut rep = SolveReport::empty(SolveStatus::Infeasible, opts);
    rep.iterations = iterations;
    rep.alt_rounds = Some(rounds);
    rep.epsilon_used = epsilon_used;
    rep.wall_time_s = start.elapsed().as_secs_f64();
    rep
}

/// Two independent ℓ1 solves, one per dimension-wise covariance. A failed
/// factor leaves its estimate empty without affecting the other.
pub fn solve_sepkst(c_p: &Matrix, c_q: &Matrix, opts: &SolverOptions) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let rp = solve_l1_commute(c_p, opts)?;
    let rq = solve_l1_commute(c_q, opts)?;
    let mut rep = SolveReport::empty(rp.status.worst(rq.status), opts);
    rep.factor_status = Some([rp.status, rq.status]);
    rep.iterations = rp.iterations + rq.iterations;
    rep.epsilon_used = vec![rp.epsilon_used[0], rq.epsilon_used[0]];
    rep.objective = match (rp.objective, rq.objective) {
        (Some(a), Some(b)) => Some(a + opts.beta * b),
        _ => None,
    };
    rep.commut_residual = match (rp.commut_residual, rq.commut_residual) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    rep.s_p = rp.s_full;
    rep.s_q = rq.s_full;
    rep.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rep)
}
