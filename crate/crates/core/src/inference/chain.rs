use nalgebra::DMatrix;
use rayon::prelude::*;

use super::conditionals::{sample_mu, sample_psi, sample_sigma, sample_weights, LabelScorer};
use super::stats::compute_stats;
use super::ChainConfig;
use crate::distributions::{sample_categorical, sample_dirichlet, RngStream};
use crate::error::{Error, Result};
use crate::model::{
    log_joint_posterior, GmmParams, Labeling, MixingWeights, ModelState, Network, Priors, SbmParams,
    VectorDataset,
};

/// Output of one chain.
#[derive(Debug, Clone)]
pub struct PosteriorSummary {
    pub chain_index: usize,
    pub seed: u64,
    /// Highest-`log_post` state among post-burn-in iterations.
    pub map_state: ModelState,
    pub map_iteration: usize,
    /// `log_post` after every sweep, burn-in included.
    pub log_post_trace: Vec<f64>,
    /// Fraction of kept iterations in which `i` and `j` share a label.
    pub coclustering: DMatrix<f64>,
    pub kept_labelings: Option<Vec<Labeling>>,
}

/// All chains of one fit plus the index of the chain with the best MAP.
#[derive(Debug, Clone)]
pub struct MultiChainSummary {
    pub chains: Vec<PosteriorSummary>,
    pub selected: usize,
}

impl MultiChainSummary {
    pub fn selected_summary(&self) -> &PosteriorSummary {
        &self.chains[self.selected]
    }

    pub fn map_labeling(&self) -> &Labeling {
        &self.selected_summary().map_state.labeling
    }
}

/// One systematic-scan sweep: `Σ`, `μ`, `ψ`, labels in index order, then `P`.
/// Recomputes `state.log_post` at the end.
pub fn gibbs_sweep(
    data: &VectorDataset,
    net: &Network,
    state: &mut ModelState,
    priors: &Priors,
    rng: &mut RngStream,
) -> Result<()> {
    let k = state.k();
    let stats = compute_stats(data, net, &state.labeling)?;

    let sigmas = (0..k)
        .map(|c| sample_sigma(stats.cluster(c), priors, rng))
        .collect::<Result<Vec<_>>>()?;
    for (c, sigma) in sigmas.into_iter().enumerate() {
        let mu = sample_mu(stats.cluster(c), &sigma, priors, rng)?;
        state.gmm.set(c, mu, sigma);
    }
    for a in 0..k {
        for b in a..k {
            let v = sample_psi(stats.block(a, b), priors, rng)?;
            state.sbm.set(a, b, v);
        }
    }

    let mut labels = state.labeling.labels().to_vec();
    {
        let mut scorer = LabelScorer::new(data, net, &state.gmm, &state.sbm, &state.weights, priors);
        let mut scores = vec![0.0; k];
        for i in 0..labels.len() {
            scorer.scores(i, &labels, &mut scores);
            labels[i] = sample_categorical(&scores, rng)?;
        }
    }
    for (i, &c) in labels.iter().enumerate() {
        state.labeling.set(i, c);
    }

    state.weights = sample_weights(&state.labeling, priors, rng)?;
    state.log_post = log_joint_posterior(data, net, state, priors)?;
    Ok(())
}

fn initial_state(
    data: &VectorDataset,
    net: &Network,
    priors: &Priors,
    k: usize,
    rng: &mut RngStream,
) -> Result<ModelState> {
    let labels: Vec<usize> = (0..data.n()).map(|_| rng.index(k)).collect();
    let weights = MixingWeights::new(sample_dirichlet(&priors.a, rng)?)?;
    let gmm = GmmParams::new(vec![priors.mu0.clone(); k], vec![priors.t_scale.clone(); k])?;
    let sbm = SbmParams::constant(k, 0.5)?;
    ModelState::new(data, net, Labeling::new(labels, k)?, weights, gmm, sbm, priors)
}

fn check_inputs(data: &VectorDataset, net: &Network, config: &ChainConfig) -> Result<()> {
    config.validate(data.q())?;
    if data.n() != net.n() {
        return Err(Error::dims(format!("X has {} rows, Y has {} nodes", data.n(), net.n())));
    }
    if data.n() == 0 {
        return Err(Error::invalid("no objects to cluster"));
    }
    Ok(())
}

/// Runs chain `chain_index` with seed `base_seed + chain_index`.
pub fn run_chain(
    data: &VectorDataset,
    net: &Network,
    config: &ChainConfig,
    chain_index: usize,
) -> Result<PosteriorSummary> {
    check_inputs(data, net, config)?;
    let n = data.n();
    let mut rng = RngStream::for_chain(config.base_seed, chain_index);
    let seed = rng.seed();
    let mut state = initial_state(data, net, &config.priors, config.k, &mut rng)?;

    let mut trace = Vec::with_capacity(config.iterations);
    let mut pair_counts = vec![0u32; n * n];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); config.k];
    let mut kept = config.record_labels.then(Vec::new);
    let mut best: Option<(usize, ModelState)> = None;

    for t in 0..config.iterations {
        gibbs_sweep(data, net, &mut state, &config.priors, &mut rng)?;
        if !state.log_post.is_finite() {
            return Err(Error::NonFinite(t));
        }
        trace.push(state.log_post);
        if t < config.burn_in {
            continue;
        }
        members.iter_mut().for_each(Vec::clear);
        for (i, &c) in state.labeling.labels().iter().enumerate() {
            members[c].push(i);
        }
        for group in &members {
            for &a in group {
                for &b in group {
                    pair_counts[a * n + b] += 1;
                }
            }
        }
        if let Some(kept) = kept.as_mut() {
            kept.push(state.labeling.clone());
        }
        if best.as_ref().is_none_or(|(_, s)| state.log_post > s.log_post) {
            best = Some((t, state.clone()));
        }
    }

    let n_kept = (config.iterations - config.burn_in) as f64;
    let coclustering = DMatrix::from_fn(n, n, |i, j| f64::from(pair_counts[i * n + j]) / n_kept);
    let (map_iteration, map_state) = best.expect("at least one kept iteration");
    Ok(PosteriorSummary {
        chain_index,
        seed,
        map_state,
        map_iteration,
        log_post_trace: trace,
        coclustering,
        kept_labelings: kept,
    })
}

/// Runs `config.n_chains` independent chains in parallel and selects the one
/// whose MAP state has the highest `log_post` (lowest index on ties).
pub fn run_chains(data: &VectorDataset, net: &Network, config: &ChainConfig) -> Result<MultiChainSummary> {
    check_inputs(data, net, config)?;
    let chains = (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_chain(data, net, config, c))
        .collect::<Result<Vec<_>>>()?;
    let mut selected = 0;
    for (c, s) in chains.iter().enumerate() {
        if s.map_state.log_post > chains[selected].map_state.log_post {
            selected = c;
        }
    }
    Ok(MultiChainSummary { chains, selected })
}
