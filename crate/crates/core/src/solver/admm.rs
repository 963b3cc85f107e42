//! Two-block ADMM for `min ‖Z‖₁ + ι_𝒮(Z) s.t. X = Z, X ∈ F`.
//!
//! `F` is a commutator ball ([`CommuteSet`]); `𝒮` is the normalized GSO set.
//! The returned estimate is the `Z` iterate, which lies in `𝒮` exactly; the
//! commutator residual is checked directly in the caller's units before a
//! solve is declared optimal.

use crate::graph::NormMode;
use crate::Matrix;

use super::constraint::CommuteSet;
use super::feasible::{prox_l1_gso, uniform_gso};
use super::SolveStatus;

const RHO_INIT: f64 = 1.0;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const CHECK_EVERY: usize = 10;
/// Residual-balancing ratio for penalty updates. The wait after each update
/// doubles, so the penalty eventually settles and the fixed-penalty
/// convergence guarantee applies.
const BALANCE: f64 = 10.0;
/// Checkpoint spacing for stagnation detection.
const STALL_WINDOW: usize = 500;
/// Primal and dual residuals must fall this far below `tol` before the
/// commutator residual is checked; the objective error tracks them linearly.
const INNER_TOL: f64 = 1e-2;
/// A distance between the two sets above this (relative to `1 + ‖Z‖`)
/// certifies infeasibility.
const INFEASIBLE_GAP: f64 = 1e-4;

pub(crate) struct EngineOutput {
    pub estimate: Option<Matrix>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub residual: Option<f64>,
}

impl EngineOutput {
    fn infeasible(iterations: usize) -> Self {
        Self { estimate: None, status: SolveStatus::Infeasible, iterations, residual: None }
    }
}

/// Dimension of `ker L ∩ {hollow}`. Zero means the only exactly commuting
/// hollow matrix is `0`, which no normalization admits.
pub(crate) fn hollow_kernel_dim(set: &dyn CommuteSet) -> usize {
    let basis = set.kernel_basis();
    let k = basis.len();
    if k == 0 {
        return 0;
    }
    let n = set.n();
    let diag = Matrix::from_fn(n, k, |i, l| basis[l][(i, i)]);
    let sv = diag.singular_values();
    let top = sv.max().max(1.0);
    let rank = sv.iter().filter(|s| **s > 1e-9 * top).count();
    k - rank
}

/// Distance reached by alternating projections between `F` and `𝒮`,
/// started from `z`. Positive limits mean the sets do not intersect.
fn separation(set: &dyn CommuteSet, mode: NormMode, z: &Matrix) -> f64 {
    let mut z = z.clone();
    let mut best = f64::INFINITY;
    let mut anchor = f64::INFINITY;
    for it in 1..=20_000 {
        let x = set.project(&z);
        z = prox_l1_gso(&x, 0.0, mode);
        let d = (&x - &z).norm();
        best = best.min(d);
        if best <= 1e-12 {
            break;
        }
        if it % 200 == 0 {
            if anchor.is_finite() && anchor - best <= 1e-6 * anchor {
                break;
            }
            anchor = best;
        }
    }
    best
}

pub(crate) fn run(
    set: &dyn CommuteSet,
    mode: NormMode,
    radius: f64,
    tol: f64,
    max_iter: usize,
    warm: Option<&Matrix>,
) -> EngineOutput {
    let n = set.n();
    if set.is_exact() && hollow_kernel_dim(set) == 0 {
        return EngineOutput::infeasible(0);
    }
    let mut z = warm.cloned().unwrap_or_else(|| uniform_gso(n));
    let mut u = Matrix::zeros(n, n);
    let mut rho = RHO_INIT;
    let mut stall_ref = f64::INFINITY;
    let mut next_certificate = 2 * STALL_WINDOW;
    let mut next_adapt = 0;
    let mut adapt_gap = CHECK_EVERY;

    for k in 1..=max_iter {
        let x = set.project(&(&z - &u));
        let z_old = std::mem::replace(&mut z, prox_l1_gso(&(&x + &u), 1.0 / rho, mode));
        let gap = &x - &z;
        u += &gap;

        if k % CHECK_EVERY != 0 && k != max_iter {
            continue;
        }
        let r = gap.norm();
        let s = rho * (&z - &z_old).norm();
        let scale = 1.0 + x.norm().max(z.norm());
        let inner = INNER_TOL * tol;
        if r <= inner * scale && s <= inner * (1.0 + rho * u.norm()) {
            let res = set.residual(&z);
            if res <= radius + tol {
                return EngineOutput { estimate: Some(z), status: SolveStatus::Optimal, iterations: k, residual: Some(res) };
            }
        }
        if k >= next_adapt {
            let before = rho;
            if r > BALANCE * s && rho < RHO_MAX {
                rho *= 2.0;
                u /= 2.0;
            } else if s > BALANCE * r && rho > RHO_MIN {
                rho /= 2.0;
                u *= 2.0;
            }
            if rho != before {
                next_adapt = k + adapt_gap;
                adapt_gap *= 2;
            }
        }
        if k % STALL_WINDOW == 0 {
            let stalled = r > 100.0 * tol * scale && r > 0.9 * stall_ref;
            stall_ref = r;
            if stalled && k >= next_certificate {
                if separation(set, mode, &z) > INFEASIBLE_GAP * scale {
                    return EngineOutput::infeasible(k);
                }
                next_certificate = k + 4 * STALL_WINDOW;
            }
        }
    }
    let scale = 1.0 + z.norm();
    if separation(set, mode, &z) > INFEASIBLE_GAP * scale {
        return EngineOutput::infeasible(max_iter);
    }
    let res = set.residual(&z);
    EngineOutput { estimate: Some(z), status: SolveStatus::MaxIter, iterations: max_iter, residual: Some(res) }
}
