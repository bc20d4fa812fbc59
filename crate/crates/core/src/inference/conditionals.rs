//! Full-conditional draws for one Gibbs sweep.
//!
//! With vector weight `w` the tempered Gaussian likelihood behaves like
//! `w·N_k` observations with scatter `w·S_k`, so the Normal-Inverse-Wishart
//! update keeps its closed form. The network weight enters the Beta update
//! the same way. At `w = 1` these are the plain conjugate updates.

use nalgebra::DVector;

use super::stats::{BlockStats, ClusterStats};
use crate::distributions::{
    logpdf_mvnormal_buf, sample_beta, sample_categorical, sample_dirichlet, sample_inverse_wishart,
    sample_mvnormal, RngStream, SpdMatrix,
};
use crate::error::Result;
use crate::model::{GmmParams, Labeling, MixingWeights, ModelState, Network, Priors, SbmParams, VectorDataset};

/// `Σ_k ~ IW(T + S̃_k, v0 + N_k)` with
/// `S̃_k = S_k + αN_k/(α+N_k) (x̄_k − μ0)(x̄_k − μ0)ᵀ`; an empty cluster draws
/// from the prior.
pub fn sample_sigma(stats: &ClusterStats, priors: &Priors, rng: &mut RngStream) -> Result<SpdMatrix> {
    let w = priors.vector_weight();
    let n_eff = w * stats.count as f64;
    if n_eff == 0.0 {
        return sample_inverse_wishart(&priors.t_scale, priors.v0, rng);
    }
    let d = &stats.mean - &priors.mu0;
    let shrink = priors.alpha * n_eff / (priors.alpha + n_eff);
    let scale = priors.t_scale.matrix() + &stats.sscp * w + (&d * d.transpose()) * shrink;
    let scale = SpdMatrix::from_draw(scale)?;
    sample_inverse_wishart(&scale, priors.v0 + n_eff, rng)
}

/// `μ_k ~ N(μ̃_k, Σ_k / (α + N_k))`, `μ̃_k = (αμ0 + N_k x̄_k) / (α + N_k)`.
pub fn sample_mu(
    stats: &ClusterStats,
    sigma: &SpdMatrix,
    priors: &Priors,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    let n_eff = priors.vector_weight() * stats.count as f64;
    let precision = priors.alpha + n_eff;
    let mean = if n_eff == 0.0 {
        priors.mu0.clone()
    } else {
        (&priors.mu0 * priors.alpha + &stats.mean * n_eff) / precision
    };
    sample_mvnormal(&mean, &sigma.scaled(1.0 / precision), rng)
}

/// `ψ ~ Beta(β1 + s, β2 + N_b − s)`.
pub fn sample_psi(block: BlockStats, priors: &Priors, rng: &mut RngStream) -> Result<f64> {
    let w = priors.network_weight();
    let s = block.edges as f64;
    let misses = (block.pairs - block.edges) as f64;
    sample_beta(priors.beta1 + w * s, priors.beta2 + w * misses, rng)
}

/// `P ~ Dirichlet(a_k + N_k)`.
pub fn sample_weights(labeling: &Labeling, priors: &Priors, rng: &mut RngStream) -> Result<MixingWeights> {
    let counts = labeling.counts();
    let alpha: Vec<f64> = priors
        .a
        .iter()
        .zip(counts.iter().chain(std::iter::repeat(&0)))
        .map(|(a, &c)| a + c as f64)
        .collect();
    MixingWeights::new(sample_dirichlet(&alpha, rng)?)
}

/// Scores `log p(c_i = k | rest)` up to a constant for every `k`, with the
/// current parameters held fixed.
pub(crate) struct LabelScorer<'a> {
    data: &'a VectorDataset,
    net: &'a Network,
    gmm: &'a GmmParams,
    log_p: Vec<f64>,
    log_on: Vec<f64>,
    log_off: Vec<f64>,
    wx: f64,
    wy: f64,
    diff: Vec<f64>,
    edge_sum: Vec<f64>,
}

impl<'a> LabelScorer<'a> {
    pub(crate) fn new(
        data: &'a VectorDataset,
        net: &'a Network,
        gmm: &'a GmmParams,
        sbm: &SbmParams,
        weights: &MixingWeights,
        priors: &Priors,
    ) -> Self {
        let (log_on, log_off) = sbm.log_tables();
        Self {
            data,
            net,
            gmm,
            log_p: weights.as_slice().iter().map(|p| p.ln()).collect(),
            log_on,
            log_off,
            wx: priors.vector_weight(),
            wy: priors.network_weight(),
            diff: vec![0.0; data.q()],
            edge_sum: vec![0.0; gmm.k()],
        }
    }

    /// Fills `out[k]` with `ln p_k + wx·log N(x_i; μ_k, Σ_k) + wy·Σ_{j≠i} log g(y_ij | ψ_{k,c_j})`.
    pub(crate) fn scores(&mut self, i: usize, labels: &[usize], out: &mut [f64]) {
        let k = self.gmm.k();
        self.edge_sum.iter_mut().for_each(|s| *s = 0.0);
        if self.wy != 0.0 {
            let row = self.net.row(i);
            for (j, (&y, &cj)) in row.iter().zip(labels).enumerate() {
                if j == i {
                    continue;
                }
                let table = if y != 0 { &self.log_on } else { &self.log_off };
                for (c, s) in self.edge_sum.iter_mut().enumerate() {
                    *s += table[c * k + cj];
                }
            }
        }
        let x = self.data.row(i);
        for (c, o) in out.iter_mut().enumerate().take(k) {
            let mut score = self.log_p[c];
            if self.wx != 0.0 {
                for ((d, xv), m) in self.diff.iter_mut().zip(x).zip(self.gmm.mean(c).iter()) {
                    *d = xv - m;
                }
                score += self.wx * logpdf_mvnormal_buf(&mut self.diff, self.gmm.cov(c));
            }
            if self.wy != 0.0 {
                score += self.wy * self.edge_sum[c];
            }
            *o = score;
        }
    }
}

/// Draws a new label for object `i` from its full conditional and writes it
/// into `state.labeling`. `state.log_post` is left stale.
pub fn sample_label(
    i: usize,
    data: &VectorDataset,
    net: &Network,
    state: &mut ModelState,
    priors: &Priors,
    rng: &mut RngStream,
) -> Result<usize> {
    let mut scorer = LabelScorer::new(data, net, &state.gmm, &state.sbm, &state.weights, priors);
    let mut scores = vec![0.0; state.k()];
    scorer.scores(i, state.labeling.labels(), &mut scores);
    let k = sample_categorical(&scores, rng)?;
    state.labeling.set(i, k);
    Ok(k)
}
