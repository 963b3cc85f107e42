//! Polynomial graph filters, synthetic two-dimensional signals and their
//! covariances.
//!
//! A two-dimensional signal is a P×Q matrix `Y = H_P·W·H_Q` with white
//! Gaussian `W`. Its column-major vectorization has covariance
//! `C_y = H_Q² ⊗ H_P²`, and the dimension-wise covariances are
//! `C_P = E[Y·Yᵀ] = tr(H_Q²)·H_P²` and `C_Q = E[Yᵀ·Y] = tr(H_P²)·H_Q²`.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{eig_sym, Gso, GsoError};
use crate::linalg::{self, kron, matrix_polynomial, symmetrize, unvec};
use crate::{rng, Matrix};

/// Filters with a larger 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e6;
/// Redraw budget of [`random_filter`].
pub const MAX_FILTER_DRAWS: u64 = 100;
/// Relative singular-value floor of [`generate_polycov`].
pub const SINGULAR_RATIO: f64 = 1e-8;
/// Margin added to `|λ_min(S)|` when building the MRF covariance.
pub const MRF_MARGIN: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("filter needs at least one coefficient")]
    EmptyCoefficients,
    #[error("filter condition number {cond:e} exceeds {MAX_CONDITION:e}")]
    IllConditioned { cond: f64 },
    #[error("no well-conditioned filter after {MAX_FILTER_DRAWS} draws")]
    ExhaustedRetries,
    #[error("filter is numerically singular (σ_min/σ_max = {ratio:e})")]
    SingularFilter { ratio: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Graph(#[from] GsoError),
}

/// `H = Σ_l h_l·S^l` over a bound shift operator.
#[derive(Debug, Clone)]
pub struct PolyFilter {
    shift: Gso,
    coeffs: Vec<f64>,
    matrix: Matrix,
}

impl PolyFilter {
    pub fn shift(&self) -> &Gso {
        &self.shift
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// `H²` (equal to `H·Hᵀ` since `H` is symmetric).
    pub fn squared(&self) -> Matrix {
        symmetrize(&(&self.matrix * &self.matrix))
    }
}

/// 2-norm condition number of a symmetric matrix; infinite when singular.
fn condition_number(m: &Matrix) -> Result<f64, GsoError> {
    let eig = eig_sym(m)?;
    let (lo, hi) = eig
        .values
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
    Ok(if lo == 0.0 { f64::INFINITY } else { hi / lo })
}

/// Builds `Σ_l coeffs[l]·S^l`, refusing ill-conditioned results.
pub fn make_filter(shift: &Gso, coeffs: &[f64]) -> Result<PolyFilter, SignalError> {
    if coeffs.is_empty() {
        return Err(SignalError::EmptyCoefficients);
    }
    let matrix = symmetrize(&matrix_polynomial(shift.weights(), coeffs));
    let cond = condition_number(&matrix)?;
    if !(cond <= MAX_CONDITION) {
        return Err(SignalError::IllConditioned { cond });
    }
    Ok(PolyFilter { shift: shift.clone(), coeffs: coeffs.to_vec(), matrix })
}

/// Random filter of `len` taps: coefficients i.i.d. uniform on [−1, 1],
/// redrawn from fresh substreams until well conditioned, then rescaled so
/// that `‖H‖_F = √n`.
pub fn random_filter(shift: &Gso, len: usize, seed: u64) -> Result<PolyFilter, SignalError> {
    if len == 0 {
        return Err(SignalError::EmptyCoefficients);
    }
    let dist = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
    for attempt in 0..MAX_FILTER_DRAWS {
        let mut rng = rng::stream(seed, attempt);
        let coeffs: Vec<f64> = (0..len).map(|_| rng.sample(dist)).collect();
        match make_filter(shift, &coeffs) {
            Ok(f) => {
                let scale = (shift.n() as f64).sqrt() / f.matrix.norm();
                return Ok(PolyFilter {
                    shift: f.shift,
                    coeffs: f.coeffs.iter().map(|c| c * scale).collect(),
                    matrix: f.matrix * scale,
                });
            }
            Err(SignalError::IllConditioned { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(SignalError::ExhaustedRetries)
}

/// Where a tensor came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Assumption1,
    Mrf,
    Poly,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorMeta {
    pub generator: Generator,
    pub seed: u64,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "R")]
    pub r: usize,
}

/// R observations of a P×Q signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTensor {
    slabs: Vec<Matrix>,
    meta: TensorMeta,
}

impl SignalTensor {
    /// Wraps slabs after checking they are nonempty and share a shape.
    pub fn new(slabs: Vec<Matrix>, generator: Generator, seed: u64) -> Result<Self, SignalError> {
        let first = slabs
            .first()
            .ok_or_else(|| SignalError::InvalidArgument("tensor needs at least one slab".into()))?;
        let (p, q) = first.shape();
        if let Some(k) = slabs.iter().position(|s| s.shape() != (p, q)) {
            return Err(SignalError::DimensionMismatch(format!(
                "slab {k} is {:?}, expected {:?}",
                slabs[k].shape(),
                (p, q)
            )));
        }
        let r = slabs.len();
        Ok(Self { slabs, meta: TensorMeta { generator, seed, p, q, r } })
    }

    pub fn slabs(&self) -> &[Matrix] {
        &self.slabs
    }

    pub fn meta(&self) -> &TensorMeta {
        &self.meta
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.meta.p, self.meta.q, self.meta.r)
    }
}

/// White Gaussian P×Q matrix for slab `index` of `seed`, filled column-major.
pub fn noise_slab(p: usize, q: usize, seed: u64, index: u64) -> Matrix {
    let mut rng = rng::stream(seed, index);
    let data: Vec<f64> = (0..p * q).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_vec(p, q, data)
}

fn white_vector(n: usize, seed: u64, index: u64) -> DVector<f64> {
    let mut rng = rng::stream(seed, index);
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Draws `Y_r = H_P·W_r·H_Q` for `r = 0..R`.
pub fn generate_2d(hp: &PolyFilter, hq: &PolyFilter, r: usize, seed: u64) -> Result<SignalTensor, SignalError> {
    if r == 0 {
        return Err(SignalError::InvalidArgument("R must be at least 1".into()));
    }
    let (p, q) = (hp.n(), hq.n());
    let slabs = (0..r as u64)
        .map(|k| hp.matrix() * noise_slab(p, q, seed, k) * hq.matrix())
        .collect();
    SignalTensor::new(slabs, Generator::Assumption1, seed)
}

/// Whether a covariance is exact or estimated from samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Sample(usize),
}

/// Dimension-wise covariances plus the optional full covariance of `vec(Y)`.
#[derive(Debug, Clone)]
pub struct CovarianceSet {
    pub c_p: Matrix,
    pub c_q: Matrix,
    pub c_y: Option<Matrix>,
    pub provenance: Provenance,
}

/// Closed-form covariances of filtered white noise.
pub fn analytic_cov(hp: &PolyFilter, hq: &PolyFilter, include_full: bool) -> CovarianceSet {
    let hp2 = hp.squared();
    let hq2 = hq.squared();
    CovarianceSet {
        c_p: &hp2 * hq2.trace(),
        c_q: &hq2 * hp2.trace(),
        c_y: include_full.then(|| kron(&hq2, &hp2)),
        provenance: Provenance::Analytic,
    }
}

/// Dimension-wise covariances derived from a full covariance by partial
/// traces; identical to what [`sample_cov`] returns on the underlying data.
pub fn covariances_from_full(c_y: Matrix, p: usize, q: usize, provenance: Provenance) -> CovarianceSet {
    CovarianceSet {
        c_p: linalg::partial_trace_q(&c_y, p, q),
        c_q: linalg::partial_trace_p(&c_y, p, q),
        c_y: Some(c_y),
        provenance,
    }
}

/// Sample covariances normalized by `1/R`.
pub fn sample_cov(t: &SignalTensor, include_full: bool) -> CovarianceSet {
    let (p, q, r) = t.dims();
    let mut c_p = Matrix::zeros(p, p);
    let mut c_q = Matrix::zeros(q, q);
    let mut c_y = include_full.then(|| Matrix::zeros(p * q, p * q));
    for y in t.slabs() {
        c_p.gemm(1.0, y, &y.transpose(), 1.0);
        c_q.gemm(1.0, &y.transpose(), y, 1.0);
        if let Some(c) = c_y.as_mut() {
            let v = linalg::vec_col(y);
            c.ger(1.0, &v, &v, 1.0);
        }
    }
    let inv = 1.0 / r as f64;
    CovarianceSet {
        c_p: symmetrize(&c_p) * inv,
        c_q: symmetrize(&c_q) * inv,
        c_y: c_y.map(|c| symmetrize(&c) * inv),
        provenance: Provenance::Sample(r),
    }
}

fn check_product_dims(s: &Gso, p: usize, q: usize) -> Result<(), SignalError> {
    if s.n() != p * q || p == 0 || q == 0 {
        return Err(SignalError::DimensionMismatch(format!(
            "shift is {n}x{n}, expected {pq}x{pq} for P={p}, Q={q}",
            n = s.n(),
            pq = p * q
        )));
    }
    Ok(())
}

/// `α` used by the MRF model: `|λ_min(S)| + 0.1`.
pub fn mrf_alpha(s: &Gso) -> Result<f64, SignalError> {
    let eig = eig_sym(s.weights())?;
    Ok(eig.values[0].abs() + MRF_MARGIN)
}

/// `C_MRF = (α·I + S)⁻¹`.
pub fn mrf_covariance(s: &Gso) -> Result<Matrix, SignalError> {
    let alpha = mrf_alpha(s)?;
    Ok(linalg::spectral_map(s.weights(), |l| 1.0 / (alpha + l)))
}

/// Samples `y_r = C_MRF^{1/2}·w_r` and devectorizes each into a P×Q slab.
pub fn generate_mrf(s: &Gso, p: usize, q: usize, r: usize, seed: u64) -> Result<SignalTensor, SignalError> {
    check_product_dims(s, p, q)?;
    if r == 0 {
        return Err(SignalError::InvalidArgument("R must be at least 1".into()));
    }
    let alpha = mrf_alpha(s)?;
    let root = linalg::spectral_map(s.weights(), |l| (1.0 / (alpha + l)).max(0.0).sqrt());
    let slabs = (0..r as u64)
        .map(|k| {
            let y = &root * white_vector(p * q, seed, k);
            unvec(y.as_slice(), p, q)
        })
        .collect();
    SignalTensor::new(slabs, Generator::Mrf, seed)
}

/// `F = Σ_{l=1}^{L} h_l·S^l` (no identity term); `coeffs[0]` is `h_1`.
pub fn polycov_filter(s: &Gso, coeffs: &[f64]) -> Result<Matrix, SignalError> {
    if coeffs.is_empty() {
        return Err(SignalError::EmptyCoefficients);
    }
    let mut full = Vec::with_capacity(coeffs.len() + 1);
    full.push(0.0);
    full.extend_from_slice(coeffs);
    Ok(symmetrize(&matrix_polynomial(s.weights(), &full)))
}

/// [`polycov_filter`], failing with [`SignalError::SingularFilter`] when the
/// smallest singular value is below `1e−8` of the largest.
pub fn nonsingular_polycov_filter(s: &Gso, coeffs: &[f64]) -> Result<Matrix, SignalError> {
    let f = polycov_filter(s, coeffs)?;
    let eig = eig_sym(&f)?;
    let (lo, hi) = eig
        .values
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
    let ratio = if hi == 0.0 { 0.0 } else { lo / hi };
    if ratio < SINGULAR_RATIO {
        return Err(SignalError::SingularFilter { ratio });
    }
    Ok(f)
}

/// `C_Poly = F²`.
pub fn polycov_covariance(s: &Gso, coeffs: &[f64]) -> Result<Matrix, SignalError> {
    let f = polycov_filter(s, coeffs)?;
    Ok(symmetrize(&(&f * &f)))
}

/// Samples `y_r = F·w_r` so that `cov(y) = C_Poly`. A numerically singular
/// `F` is reported as [`SignalError::SingularFilter`] unless `allow_singular`.
pub fn generate_polycov(
    s: &Gso,
    coeffs: &[f64],
    p: usize,
    q: usize,
    r: usize,
    seed: u64,
    allow_singular: bool,
) -> Result<SignalTensor, SignalError> {
    check_product_dims(s, p, q)?;
    if r == 0 {
        return Err(SignalError::InvalidArgument("R must be at least 1".into()));
    }
    let f = if allow_singular { polycov_filter(s, coeffs)? } else { nonsingular_polycov_filter(s, coeffs)? };
    let slabs = (0..r as u64)
        .map(|k| {
            let y = &f * white_vector(p * q, seed, k);
            unvec(y.as_slice(), p, q)
        })
        .collect();
    SignalTensor::new(slabs, Generator::Poly, seed)
}
