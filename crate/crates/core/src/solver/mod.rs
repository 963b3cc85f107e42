//! ℓ1-minimal graph shift operators under a commutativity constraint.
//!
//! Every estimator reduces to instances of
//!
//! ```text
//! minimize ‖S‖₁  subject to  ‖L(S)‖_F ≤ ε,  S ∈ 𝒮
//! ```
//!
//! where `L` is linear (`S ↦ C·S − S·C` for a single covariance, or the
//! Kronecker-lifted commutator for one factor of K-ST) and `𝒮` is the set of
//! symmetric, hollow, nonnegative matrices with the configured normalization.
//! The main path is a two-block ADMM ([`admm`]); [`reference`] re-solves the
//! same program with an interior-point method for cross-checking.

mod admm;
mod constraint;
mod estimators;
mod feasible;
pub mod reference;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Gso, GsoError, NormMode};

pub use estimators::{
    solve_kst, solve_kst_factor, solve_kst_with_init, solve_l1_commute, solve_sepkst, solve_st, KstFactor,
};
pub use reference::reference_solve_small;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Graph(#[from] GsoError),
    #[error("reference solver failed: {0}")]
    Reference(String),
}

/// Termination state of a solve. Infeasibility and iteration limits are
/// reported here rather than as errors so a report is always available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::Infeasible => "infeasible",
        }
    }

    /// The less successful of two statuses.
    pub fn worst(self, other: SolveStatus) -> SolveStatus {
        use SolveStatus::*;
        match (self, other) {
            (Infeasible, _) | (_, Infeasible) => Infeasible,
            (MaxIter, _) | (_, MaxIter) => MaxIter,
            _ => Optimal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Absolute commutator radius; `0` requires exact commutativity.
    pub epsilon: f64,
    /// Radius relative to the Frobenius norm of the covariance. The radius
    /// actually used is `epsilon + epsilon_rel·‖C‖_F`.
    pub epsilon_rel: f64,
    pub norm_mode: NormMode,
    /// Weight of the second factor's ℓ1 norm in the K-ST/SepK-ST objective.
    pub beta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub alt_max_rounds: usize,
    pub alt_rel_change: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            epsilon_rel: 0.0,
            norm_mode: NormMode::FirstRowUnit,
            beta: 1.0,
            tol: 1e-6,
            max_iter: 5000,
            alt_max_rounds: 20,
            alt_rel_change: 1e-4,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: &str| Err(SolveError::InvalidOptions(msg.to_string()));
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return bad("epsilon must be a finite nonnegative number");
        }
        if !(self.epsilon_rel >= 0.0) || !self.epsilon_rel.is_finite() {
            return bad("epsilon_rel must be a finite nonnegative number");
        }
        if !(self.beta > 0.0) {
            return bad("beta must be positive");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iter == 0 || self.alt_max_rounds == 0 {
            return bad("iteration limits must be positive");
        }
        if !(self.alt_rel_change > 0.0) {
            return bad("alt_rel_change must be positive");
        }
        if self.norm_mode == NormMode::BinaryUnnormalized {
            return bad("norm_mode must be first-row-unit or row-stochastic");
        }
        Ok(())
    }

    /// Radius used against a covariance of Frobenius norm `c_norm`.
    pub fn radius_for(&self, c_norm: f64) -> f64 {
        self.epsilon + self.epsilon_rel * c_norm
    }
}

/// Outcome of one estimator run. Estimates are omitted from the JSON form;
/// they are persisted separately as matrices.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub s_p: Option<Gso>,
    #[serde(skip)]
    pub s_q: Option<Gso>,
    #[serde(skip)]
    pub s_full: Option<Gso>,
    pub status: SolveStatus,
    /// `None` serializes as `null` when no estimate exists.
    pub objective: Option<f64>,
    /// Frobenius norm of the commutator at the solution; for SepK-ST the
    /// larger of the two factor residuals.
    pub commut_residual: Option<f64>,
    pub iterations: usize,
    pub alt_rounds: Option<usize>,
    pub wall_time_s: f64,
    /// Per-factor status for SepK-ST, `[P, Q]`.
    pub factor_status: Option<[SolveStatus; 2]>,
    /// Absolute radius of every commutativity constraint that was solved.
    pub epsilon_used: Vec<f64>,
    pub norm_mode: NormMode,
    pub options: SolverOptions,
}

impl SolveReport {
    pub(crate) fn empty(status: SolveStatus, opts: &SolverOptions) -> Self {
        Self {
            s_p: None,
            s_q: None,
            s_full: None,
            status,
            objective: None,
            commut_residual: None,
            iterations: 0,
            alt_rounds: None,
            wall_time_s: 0.0,
            factor_status: None,
            epsilon_used: Vec::new(),
            norm_mode: opts.norm_mode,
            options: *opts,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
