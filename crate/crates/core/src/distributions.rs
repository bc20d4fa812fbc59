//! Seeded sampling and log-density primitives.
//!
//! Every random draw in the crate goes through an [`RngStream`]. The stream is
//! backed by ChaCha8, whose output is specified bit-for-bit, so a seed fixes
//! the whole draw sequence on every platform.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, ChiSquared, Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Symmetry tolerance accepted by [`SpdMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Beta draws are clamped to `[BETA_CLAMP, 1 - BETA_CLAMP]`.
pub const BETA_CLAMP: f64 = 1e-12;

/// A single-owner random stream with an explicit 64-bit seed.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for chain `index` of a run seeded with `base_seed`.
    pub fn for_chain(base_seed: u64, index: usize) -> Self {
        Self::new(base_seed.wrapping_add(index as u64))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn index(&mut self, upper: usize) -> usize {
        self.inner.random_range(0..upper)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Symmetric positive definite matrix with its lower Cholesky factor cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    matrix: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    log_det: f64,
}

impl SpdMatrix {
    /// Validates symmetry (absolute tolerance [`SYMMETRY_TOL`]) and positive
    /// definiteness.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let q = matrix.nrows();
        if q == 0 || matrix.ncols() != q {
            return Err(Error::NotPositiveDefinite(format!(
                "expected a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("non-finite entry".into()));
        }
        for i in 0..q {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::NotPositiveDefinite(format!(
                        "asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        let chol = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        Ok(Self::from_parts(matrix, chol.unpack()))
    }

    /// Builds from a freshly computed (possibly borderline) matrix: the matrix
    /// is symmetrized and, if the factorization fails, retried once with
    /// `1e-9 * trace / q` added to the diagonal.
    pub fn from_draw(mut matrix: DMatrix<f64>) -> Result<Self> {
        let q = matrix.nrows();
        for i in 0..q {
            for j in 0..i {
                let avg = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
                matrix[(i, j)] = avg;
                matrix[(j, i)] = avg;
            }
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("non-finite entry in draw".into()));
        }
        if let Some(chol) = Cholesky::new(matrix.clone()) {
            return Ok(Self::from_parts(matrix, chol.unpack()));
        }
        let jitter = 1e-9 * matrix.trace() / q as f64;
        for i in 0..q {
            matrix[(i, i)] += jitter;
        }
        let chol = Cholesky::new(matrix.clone()).ok_or_else(|| {
            Error::NotPositiveDefinite("Cholesky failed after diagonal jitter".into())
        })?;
        Ok(Self::from_parts(matrix, chol.unpack()))
    }

    fn from_parts(matrix: DMatrix<f64>, chol_l: DMatrix<f64>) -> Self {
        let log_det = 2.0 * chol_l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Self {
            matrix,
            chol_l,
            log_det,
        }
    }

    pub fn identity(q: usize) -> Self {
        Self::scaled_identity(q, 1.0)
    }

    pub fn scaled_identity(q: usize, scale: f64) -> Self {
        assert!(q > 0 && scale > 0.0, "scaled_identity needs q > 0 and scale > 0");
        Self::from_parts(
            DMatrix::from_diagonal_element(q, q, scale),
            DMatrix::from_diagonal_element(q, q, scale.sqrt()),
        )
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() || diag.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::NotPositiveDefinite(
                "diagonal entries must be positive".into(),
            ));
        }
        let d = DVector::from_column_slice(diag);
        Ok(Self::from_parts(
            DMatrix::from_diagonal(&d),
            DMatrix::from_diagonal(&d.map(f64::sqrt)),
        ))
    }

    /// Builds from row-major nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let q = rows.len();
        if rows.iter().any(|r| r.len() != q) {
            return Err(Error::NotPositiveDefinite("rows are not square".into()));
        }
        Self::new(DMatrix::from_fn(q, q, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower Cholesky factor `L` with `L Lᵀ = self`.
    pub fn cholesky_l(&self) -> &DMatrix<f64> {
        &self.chol_l
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let linv = lower_triangular_inverse(&self.chol_l);
        linv.transpose() * linv
    }

    /// `c * self` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0, "scale must be positive");
        Self {
            matrix: &self.matrix * c,
            chol_l: &self.chol_l * c.sqrt(),
            log_det: self.log_det + self.dim() as f64 * c.ln(),
        }
    }

    /// Squared Mahalanobis norm of `diff`; `diff` is overwritten with `L⁻¹ diff`.
    pub(crate) fn mahalanobis_sq_in_place(&self, diff: &mut [f64]) -> f64 {
        let l = &self.chol_l;
        let q = diff.len();
        let mut acc = 0.0;
        for i in 0..q {
            let mut v = diff[i];
            for (j, dj) in diff.iter().enumerate().take(i) {
                v -= l[(i, j)] * dj;
            }
            v /= l[(i, i)];
            diff[i] = v;
            acc += v * v;
        }
        acc
    }
}

fn lower_triangular_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let q = l.nrows();
    let mut inv = DMatrix::<f64>::identity(q, q);
    let solved = l.solve_lower_triangular_mut(&mut inv);
    debug_assert!(solved, "Cholesky factor has a zero pivot");
    inv
}

/// `ln Σ exp(v_i)` with max-shift. Returns `-inf` iff every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "log_sum_exp of an empty slice");
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Draws an index with probability proportional to `exp(log_weights[k])`.
/// Consumes exactly one uniform from `rng`.
pub fn sample_categorical(log_weights: &[f64], rng: &mut RngStream) -> Result<usize> {
    if log_weights.is_empty() {
        return Err(Error::invalid("categorical needs at least one weight"));
    }
    if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
        return Err(Error::invalid("categorical log weights must not be NaN or +inf"));
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::invalid("all categorical log weights are -inf"));
    }
    let total: f64 = log_weights.iter().map(|w| (w - max).exp()).sum();
    let target = rng.uniform() * total;
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (k, w) in log_weights.iter().enumerate() {
        let p = (w - max).exp();
        if p > 0.0 {
            last_positive = k;
            cum += p;
            if target < cum {
                return Ok(k);
            }
        }
    }
    // Rounding can leave `target` at the very top of the cumulative sum.
    Ok(last_positive)
}

pub fn sample_gamma(shape: f64, rng: &mut RngStream) -> Result<f64> {
    let dist = Gamma::new(shape, 1.0)
        .map_err(|e| Error::invalid(format!("gamma shape {shape}: {e}")))?;
    Ok(dist.sample(rng))
}

/// Draws from `Dirichlet(alpha)`; every entry is strictly positive.
pub fn sample_dirichlet(alpha: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(Error::invalid("Dirichlet needs at least one component"));
    }
    if alpha.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::invalid("Dirichlet parameters must be positive and finite"));
    }
    if alpha.len() == 1 {
        return Ok(vec![1.0]);
    }
    // Gamma draws in log space: for shape < 1 use G(a) = G(a + 1) U^(1/a),
    // which cannot underflow to zero.
    let mut log_g = Vec::with_capacity(alpha.len());
    for &a in alpha {
        let lg = if a < 1.0 {
            let g = sample_gamma(a + 1.0, rng)?;
            let u: f64 = rng.uniform();
            g.ln() + u.max(f64::MIN_POSITIVE).ln() / a
        } else {
            sample_gamma(a, rng)?.ln()
        };
        log_g.push(lg);
    }
    let norm = log_sum_exp(&log_g);
    let mut p: Vec<f64> = log_g
        .iter()
        .map(|lg| (lg - norm).exp().max(f64::MIN_POSITIVE))
        .collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    Ok(p)
}

/// Draws from `Beta(b1, b2)`, clamped to `[1e-12, 1 - 1e-12]`.
pub fn sample_beta(b1: f64, b2: f64, rng: &mut RngStream) -> Result<f64> {
    if !(b1 > 0.0 && b2 > 0.0) || !b1.is_finite() || !b2.is_finite() {
        return Err(Error::invalid(format!("Beta shapes must be positive, got ({b1}, {b2})")));
    }
    let dist = Beta::new(b1, b2).map_err(|e| Error::invalid(format!("Beta({b1}, {b2}): {e}")))?;
    let x: f64 = dist.sample(rng);
    Ok(x.clamp(BETA_CLAMP, 1.0 - BETA_CLAMP))
}

/// `mean + L z` with `z` i.i.d. standard normal.
pub fn sample_mvnormal(mean: &DVector<f64>, cov: &SpdMatrix, rng: &mut RngStream) -> Result<DVector<f64>> {
    if mean.len() != cov.dim() {
        return Err(Error::dims(format!(
            "mean has length {} but covariance is {}x{}",
            mean.len(),
            cov.dim(),
            cov.dim()
        )));
    }
    let z = DVector::from_fn(mean.len(), |_, _| rng.standard_normal());
    Ok(mean + cov.cholesky_l() * z)
}

/// Inverse-Wishart draw via the Bartlett decomposition: `W ~ Wishart(scale⁻¹, dof)`
/// is built as `B Bᵀ` with `B = C A`, `C = chol(scale⁻¹)`, and the result is `W⁻¹`.
pub fn sample_inverse_wishart(scale: &SpdMatrix, dof: f64, rng: &mut RngStream) -> Result<SpdMatrix> {
    let q = scale.dim();
    if !(dof > q as f64 - 1.0) || !dof.is_finite() {
        return Err(Error::invalid(format!(
            "inverse-Wishart dof {dof} must exceed q - 1 = {}",
            q - 1
        )));
    }
    let mut a = DMatrix::<f64>::zeros(q, q);
    for i in 0..q {
        for j in 0..i {
            a[(i, j)] = rng.standard_normal();
        }
        let chi = ChiSquared::new(dof - i as f64)
            .map_err(|e| Error::invalid(format!("chi-squared dof: {e}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
    }
    let inv_scale = SpdMatrix::from_draw(scale.inverse())?;
    let b = inv_scale.cholesky_l() * a;
    // Σ = (B Bᵀ)⁻¹ = B⁻ᵀ B⁻¹
    let binv = lower_triangular_inverse(&b);
    SpdMatrix::from_draw(binv.transpose() * binv)
}

/// Exact log density of `N(mean, cov)` at `x`.
pub fn logpdf_mvnormal(x: &DVector<f64>, mean: &DVector<f64>, cov: &SpdMatrix) -> Result<f64> {
    if x.len() != cov.dim() || mean.len() != cov.dim() {
        return Err(Error::dims(format!(
            "x has length {}, mean {}, covariance dim {}",
            x.len(),
            mean.len(),
            cov.dim()
        )));
    }
    let mut diff: Vec<f64> = x.iter().zip(mean.iter()).map(|(a, b)| a - b).collect();
    Ok(logpdf_mvnormal_buf(&mut diff, cov))
}

/// Log density given `diff = x - mean`; `diff` is used as scratch space.
pub(crate) fn logpdf_mvnormal_buf(diff: &mut [f64], cov: &SpdMatrix) -> f64 {
    let q = diff.len() as f64;
    let m = cov.mahalanobis_sq_in_place(diff);
    -0.5 * (q * LN_2PI + cov.log_det() + m)
}

/// `ln Γ_q(a)`, the multivariate log-gamma function.
pub fn ln_multigamma(q: usize, a: f64) -> f64 {
    let qf = q as f64;
    qf * (qf - 1.0) / 4.0 * LN_PI
        + (1..=q)
            .map(|j| ln_gamma(a + (1.0 - j as f64) / 2.0))
            .sum::<f64>()
}

/// Log density of `InverseWishart_q(scale, dof)` at `sigma`:
/// density ∝ |Σ|^{-(dof+q+1)/2} exp(-tr(scale Σ⁻¹)/2).
pub fn logpdf_inverse_wishart(sigma: &SpdMatrix, scale: &SpdMatrix, dof: f64) -> f64 {
    let q = sigma.dim();
    let qf = q as f64;
    let trace = (scale.matrix() * sigma.inverse()).trace();
    0.5 * dof * scale.log_det()
        - 0.5 * dof * qf * std::f64::consts::LN_2
        - ln_multigamma(q, 0.5 * dof)
        - 0.5 * (dof + qf + 1.0) * sigma.log_det()
        - 0.5 * trace
}

pub fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Log density of `Beta(b1, b2)`; `-inf` outside `(0, 1)`.
pub fn logpdf_beta(x: f64, b1: f64, b2: f64) -> f64 {
    if !(x > 0.0 && x < 1.0) {
        return f64::NEG_INFINITY;
    }
    (b1 - 1.0) * x.ln() + (b2 - 1.0) * (1.0 - x).ln() - ln_beta_fn(b1, b2)
}

/// Log density of `Dirichlet(alpha)`; `-inf` off the open simplex.
pub fn logpdf_dirichlet(p: &[f64], alpha: &[f64]) -> f64 {
    if p.len() != alpha.len() || p.iter().any(|&v| !(v > 0.0)) {
        return f64::NEG_INFINITY;
    }
    let sum_alpha: f64 = alpha.iter().sum();
    let mut out = ln_gamma(sum_alpha);
    for (&pk, &ak) in p.iter().zip(alpha) {
        out += (ak - 1.0) * pk.ln() - ln_gamma(ak);
    }
    out
}
