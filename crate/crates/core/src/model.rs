//! Data, parameter and prior types plus the likelihood and log joint
//! posterior of the shared-labeling model.
//!
//! The log joint posterior is
//!
//! ```text
//! w_X·ℓ_X + w_Y·ℓ_Y + log p(Φ) + log p(Ψ) + log p(P) + Σ_i ln p_{c_i}
//! ```
//!
//! with `w_X = min(1, 2η)` and `w_Y = min(1, 2(1−η))`, so `η = 0.5` is the
//! unweighted joint model and moving `η` away from it down-weights one data
//! type. At a boundary (`η = 0` or `η = 1`) the switched-off data type drops
//! out together with its parameter prior, which leaves exactly the plain
//! single-data-type posterior.

use nalgebra::{DMatrix, DVector};

use crate::distributions::{
    logpdf_beta, logpdf_dirichlet, logpdf_inverse_wishart, logpdf_mvnormal, logpdf_mvnormal_buf,
    SpdMatrix,
};
use crate::error::{Error, Result};

/// N×q real feature matrix, stored row-major (row `i` is object `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDataset {
    n: usize,
    q: usize,
    values: Vec<f64>,
}

impl VectorDataset {
    pub fn new(n: usize, q: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || q == 0 {
            return Err(Error::invalid("vector dataset needs n >= 1 and q >= 1"));
        }
        if values.len() != n * q {
            return Err(Error::dims(format!(
                "expected {} values for {n}x{q}, got {}",
                n * q,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("vector dataset contains non-finite values"));
        }
        Ok(Self { n, q, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let q = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != q) {
            return Err(Error::dims("rows have differing lengths"));
        }
        Self::new(rows.len(), q, rows.concat())
    }

    /// Placeholder used when only a network is available; contributes nothing
    /// once the vector weight is zero.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            q: 1,
            values: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.q..(i + 1) * self.q]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.q)
    }

    pub fn column_mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.q);
        for row in self.rows() {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        m / self.n as f64
    }
}

/// Undirected simple graph on `n` objects as a dense 0/1 adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    n: usize,
    adjacency: Vec<u8>,
}

impl Network {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adjacency: vec![0; n * n],
        }
    }

    /// Builds from 0-based undirected pairs. Self-loops, out-of-range indices
    /// and repeated pairs are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut net = Self::empty(n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at {u}")));
            }
            if net.has_edge(u, v) {
                return Err(Error::invalid(format!("duplicate edge ({u}, {v})")));
            }
            net.set_edge(u, v);
        }
        Ok(net)
    }

    /// Builds from a row-major dense matrix, checking symmetry and a zero
    /// diagonal.
    pub fn from_dense(n: usize, adjacency: Vec<u8>) -> Result<Self> {
        if adjacency.len() != n * n {
            return Err(Error::dims(format!("adjacency must have {} entries", n * n)));
        }
        for i in 0..n {
            if adjacency[i * n + i] != 0 {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let a = adjacency[i * n + j];
                if a > 1 {
                    return Err(Error::invalid(format!("entry ({i},{j}) is not 0/1")));
                }
                if a != adjacency[j * n + i] {
                    return Err(Error::invalid(format!("asymmetric entry ({i},{j})")));
                }
            }
        }
        Ok(Self { n, adjacency })
    }

    pub(crate) fn set_edge(&mut self, u: usize, v: usize) {
        self.adjacency[u * self.n + v] = 1;
        self.adjacency[v * self.n + u] = 1;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j] != 0
    }

    /// Row `i` of the adjacency matrix.
    pub fn row(&self, i: usize) -> &[u8] {
        &self.adjacency[i * self.n..(i + 1) * self.n]
    }

    /// Edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            ((i + 1)..self.n).filter_map(move |j| self.has_edge(i, j).then_some((i, j)))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|&a| a as usize).sum::<usize>() / 2
    }
}

/// Cluster assignment for `n` objects; labels are 0-based in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling {
    labels: Vec<usize>,
    k: usize,
}

impl Labeling {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange { label, k });
        }
        Ok(Self { labels, k })
    }

    /// Uses the smallest `k` covering every label.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let k = labels.iter().max().map_or(1, |m| m + 1);
        Self { labels, k }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub(crate) fn set(&mut self, i: usize, label: usize) {
        debug_assert!(label < self.k);
        self.labels[i] = label;
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// Indicator matrix `[c_i == c_j]`.
    pub fn comembership(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| f64::from(u8::from(self.labels[i] == self.labels[j])))
    }
}

/// Per-cluster Gaussian parameters `(μ_k, Σ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams {
    means: Vec<DVector<f64>>,
    covs: Vec<SpdMatrix>,
}

impl GmmParams {
    pub fn new(means: Vec<DVector<f64>>, covs: Vec<SpdMatrix>) -> Result<Self> {
        if means.is_empty() || means.len() != covs.len() {
            return Err(Error::dims(format!(
                "{} means but {} covariances",
                means.len(),
                covs.len()
            )));
        }
        let q = means[0].len();
        if means.iter().any(|m| m.len() != q) || covs.iter().any(|c| c.dim() != q) {
            return Err(Error::dims("components disagree on dimension"));
        }
        Ok(Self { means, covs })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn q(&self) -> usize {
        self.means[0].len()
    }

    pub fn mean(&self, k: usize) -> &DVector<f64> {
        &self.means[k]
    }

    pub fn cov(&self, k: usize) -> &SpdMatrix {
        &self.covs[k]
    }

    pub(crate) fn set(&mut self, k: usize, mean: DVector<f64>, cov: SpdMatrix) {
        self.means[k] = mean;
        self.covs[k] = cov;
    }
}

/// Symmetric K×K block connection probabilities, strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    psi: DMatrix<f64>,
}

impl SbmParams {
    pub fn new(psi: DMatrix<f64>) -> Result<Self> {
        let k = psi.nrows();
        if k == 0 || psi.ncols() != k {
            return Err(Error::dims("psi must be a non-empty square matrix"));
        }
        for i in 0..k {
            for j in 0..k {
                let v = psi[(i, j)];
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::invalid(format!("psi[{i},{j}] = {v} outside (0, 1)")));
                }
                if v != psi[(j, i)] {
                    return Err(Error::invalid(format!("psi is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { psi })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::dims("psi rows are not square"));
        }
        Self::new(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
    }

    pub fn constant(k: usize, value: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(k, k, value))
    }

    pub fn k(&self) -> usize {
        self.psi.nrows()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.psi[(a, b)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.psi
    }

    pub(crate) fn set(&mut self, a: usize, b: usize, value: f64) {
        self.psi[(a, b)] = value;
        self.psi[(b, a)] = value;
    }

    /// `(ln ψ, ln(1 − ψ))` tables, indexed `[a * k + b]`.
    pub(crate) fn log_tables(&self) -> (Vec<f64>, Vec<f64>) {
        let k = self.k();
        let mut on = Vec::with_capacity(k * k);
        let mut off = Vec::with_capacity(k * k);
        for a in 0..k {
            for b in 0..k {
                let p = self.psi[(a, b)];
                on.push(p.ln());
                off.push((1.0 - p).ln());
            }
        }
        (on, off)
    }
}

/// Mixing proportions `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingWeights {
    p: Vec<f64>,
}

impl MixingWeights {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::invalid("mixing weights must be positive"));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("mixing weights sum to {s}")));
        }
        Ok(Self { p })
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            p: vec![1.0 / k as f64; k],
        }
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

/// Default Dirichlet concentration per component.
pub const DEFAULT_DIRICHLET: f64 = 5.0;

/// Hyperparameters and the vector/network weight `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors {
    pub mu0: DVector<f64>,
    pub alpha: f64,
    pub t_scale: SpdMatrix,
    pub v0: f64,
    pub a: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub eta: f64,
}

impl Priors {
    /// Defaults: `μ0` = column mean of `X`, `α = 0.01`, `v0 = q + 3`,
    /// `T = v0·I`, `a = 5`, `β1 = β2 = 1.1`, `η = 0.5`.
    pub fn default_for(data: &VectorDataset, k: usize) -> Self {
        let q = data.q();
        let v0 = q as f64 + 3.0;
        Self {
            mu0: data.column_mean(),
            alpha: 0.01,
            t_scale: SpdMatrix::scaled_identity(q, v0),
            v0,
            a: vec![DEFAULT_DIRICHLET; k],
            beta1: 1.1,
            beta2: 1.1,
            eta: 0.5,
        }
    }

    pub fn validate(&self, q: usize, k: usize) -> Result<()> {
        if self.mu0.len() != q || self.t_scale.dim() != q {
            return Err(Error::dims(format!("priors are not {q}-dimensional")));
        }
        if self.a.len() != k {
            return Err(Error::dims(format!("Dirichlet prior has {} entries, k = {k}", self.a.len())));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.alpha) || !positive(self.beta1) || !positive(self.beta2) {
            return Err(Error::invalid("alpha, beta1 and beta2 must be positive"));
        }
        if !self.a.iter().all(|&v| positive(v)) {
            return Err(Error::invalid("Dirichlet prior entries must be positive"));
        }
        if !(self.v0 > q as f64 - 1.0) || !self.v0.is_finite() {
            return Err(Error::invalid(format!("v0 = {} must exceed q - 1", self.v0)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::invalid(format!("eta = {} outside [0, 1]", self.eta)));
        }
        if self.mu0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mu0 must be finite"));
        }
        Ok(())
    }

    /// Exponent on the vector likelihood, `min(1, 2η)`.
    pub fn vector_weight(&self) -> f64 {
        (2.0 * self.eta).min(1.0)
    }

    /// Exponent on the network likelihood, `min(1, 2(1 − η))`.
    pub fn network_weight(&self) -> f64 {
        (2.0 * (1.0 - self.eta)).min(1.0)
    }
}

/// Optional overrides of the default priors; unset fields use
/// [`Priors::default_for`]. Single-element vectors are broadcast.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriorConfig {
    pub mu0: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub v0: Option<f64>,
    pub t_scale_diag: Option<Vec<f64>>,
    pub a_dirichlet: Option<Vec<f64>>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub eta: Option<f64>,
}

fn broadcast(values: &[f64], len: usize, name: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; len]),
        l if l == len => Ok(values.to_vec()),
        l => Err(Error::InvalidConfig(format!("{name} has {l} entries, expected 1 or {len}"))),
    }
}

impl PriorConfig {
    pub fn resolve(&self, data: &VectorDataset, k: usize) -> Result<Priors> {
        let q = data.q();
        let mut p = Priors::default_for(data, k);
        if let Some(mu0) = &self.mu0 {
            p.mu0 = DVector::from_vec(broadcast(mu0, q, "mu0")?);
        }
        if let Some(v) = self.alpha {
            p.alpha = v;
        }
        if let Some(v) = self.v0 {
            p.v0 = v;
            if v > 0.0 {
                p.t_scale = SpdMatrix::scaled_identity(q, v);
            }
        }
        if let Some(diag) = &self.t_scale_diag {
            p.t_scale = SpdMatrix::from_diagonal(&broadcast(diag, q, "t_scale_diag")?)?;
        }
        if let Some(a) = &self.a_dirichlet {
            p.a = broadcast(a, k, "a_dirichlet")?;
        }
        if let Some(v) = self.beta1 {
            p.beta1 = v;
        }
        if let Some(v) = self.beta2 {
            p.beta2 = v;
        }
        if let Some(v) = self.eta {
            p.eta = v;
        }
        p.validate(q, k)?;
        Ok(p)
    }
}

/// One Gibbs state and its unnormalized log joint posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub labeling: Labeling,
    pub weights: MixingWeights,
    pub gmm: GmmParams,
    pub sbm: SbmParams,
    pub log_post: f64,
}

impl ModelState {
    /// Assembles a state and evaluates its log joint posterior.
    pub fn new(
        data: &VectorDataset,
        net: &Network,
        labeling: Labeling,
        weights: MixingWeights,
        gmm: GmmParams,
        sbm: SbmParams,
        priors: &Priors,
    ) -> Result<Self> {
        let mut state = Self {
            labeling,
            weights,
            gmm,
            sbm,
            log_post: f64::NAN,
        };
        state.log_post = log_joint_posterior(data, net, &state, priors)?;
        Ok(state)
    }

    pub fn k(&self) -> usize {
        self.labeling.k()
    }
}

fn check_labels(n: usize, labeling: &Labeling, k: usize) -> Result<()> {
    if labeling.len() != n {
        return Err(Error::dims(format!("labeling has {} entries, data has {n}", labeling.len())));
    }
    if labeling.k() > k {
        if let Some(&label) = labeling.labels().iter().find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange { label, k });
        }
    }
    Ok(())
}

/// `Σ_i log N(x_i; μ_{c_i}, Σ_{c_i})`.
pub fn log_likelihood_x(data: &VectorDataset, labeling: &Labeling, gmm: &GmmParams) -> Result<f64> {
    check_labels(data.n(), labeling, gmm.k())?;
    if gmm.q() != data.q() {
        return Err(Error::dims(format!("data q = {}, parameters q = {}", data.q(), gmm.q())));
    }
    let mut buf = vec![0.0; data.q()];
    let mut total = 0.0;
    for (row, &c) in data.rows().zip(labeling.labels()) {
        let mean = gmm.mean(c);
        for ((b, x), m) in buf.iter_mut().zip(row).zip(mean.iter()) {
            *b = x - m;
        }
        total += logpdf_mvnormal_buf(&mut buf, gmm.cov(c));
    }
    Ok(total)
}

/// `Σ_{i<j} [y_ij ln ψ + (1 − y_ij) ln(1 − ψ)]` over unordered pairs.
pub fn log_likelihood_y(net: &Network, labeling: &Labeling, sbm: &SbmParams) -> Result<f64> {
    check_labels(net.n(), labeling, sbm.k())?;
    let k = sbm.k();
    let (on, off) = sbm.log_tables();
    let labels = labeling.labels();
    let mut total = 0.0;
    for i in 0..net.n() {
        let row = net.row(i);
        let base = labels[i] * k;
        for j in (i + 1)..net.n() {
            let idx = base + labels[j];
            total += if row[j] != 0 { on[idx] } else { off[idx] };
        }
    }
    Ok(total)
}

/// `Σ_k [log IW(Σ_k; T, v0) + log N(μ_k; μ0, Σ_k/α)]`.
pub fn log_prior_gmm(gmm: &GmmParams, priors: &Priors) -> f64 {
    let mut total = 0.0;
    for k in 0..gmm.k() {
        let cov = gmm.cov(k);
        total += logpdf_inverse_wishart(cov, &priors.t_scale, priors.v0);
        total += logpdf_mvnormal(gmm.mean(k), &priors.mu0, &cov.scaled(1.0 / priors.alpha))
            .unwrap_or(f64::NEG_INFINITY);
    }
    total
}

/// `Σ_{k≤j} log Beta(ψ_kj; β1, β2)`, one factor per unordered block.
pub fn log_prior_sbm(sbm: &SbmParams, priors: &Priors) -> f64 {
    let k = sbm.k();
    let mut total = 0.0;
    for a in 0..k {
        for b in a..k {
            total += logpdf_beta(sbm.get(a, b), priors.beta1, priors.beta2);
        }
    }
    total
}

pub fn log_prior_weights(weights: &MixingWeights, priors: &Priors) -> f64 {
    logpdf_dirichlet(weights.as_slice(), &priors.a)
}

/// `log p(Φ) + log p(Ψ) + log p(P)`; `-inf` when a parameter is outside its
/// support.
pub fn log_prior(gmm: &GmmParams, sbm: &SbmParams, weights: &MixingWeights, priors: &Priors) -> f64 {
    log_prior_gmm(gmm, priors) + log_prior_sbm(sbm, priors) + log_prior_weights(weights, priors)
}

/// `Σ_i ln p_{c_i}`.
pub fn log_label_term(labeling: &Labeling, weights: &MixingWeights) -> f64 {
    let p = weights.as_slice();
    labeling.labels().iter().map(|&c| p[c].ln()).sum()
}

/// Unnormalized log joint posterior of `state`; `state.log_post` is ignored.
pub fn log_joint_posterior(
    data: &VectorDataset,
    net: &Network,
    state: &ModelState,
    priors: &Priors,
) -> Result<f64> {
    let k = state.k();
    if state.gmm.k() != k || state.sbm.k() != k || state.weights.k() != k || priors.a.len() != k {
        return Err(Error::dims("state components disagree on k"));
    }
    if data.n() != net.n() {
        return Err(Error::dims(format!("X has {} rows, Y has {} nodes", data.n(), net.n())));
    }
    let wx = priors.vector_weight();
    let wy = priors.network_weight();
    let llx = log_likelihood_x(data, &state.labeling, &state.gmm)?;
    let lly = log_likelihood_y(net, &state.labeling, &state.sbm)?;
    let lp_gmm = if wx > 0.0 { log_prior_gmm(&state.gmm, priors) } else { 0.0 };
    let lp_sbm = if wy > 0.0 { log_prior_sbm(&state.sbm, priors) } else { 0.0 };
    let prior = lp_gmm + lp_sbm + log_prior_weights(&state.weights, priors);
    Ok(wx * llx + wy * lly + prior + log_label_term(&state.labeling, &state.weights))
}
