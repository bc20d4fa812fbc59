//! Gibbs sampling for the shared labeling and all model parameters.

mod chain;
mod conditionals;
mod stats;

pub use chain::{gibbs_sweep, run_chain, run_chains, MultiChainSummary, PosteriorSummary};
pub use conditionals::{sample_label, sample_mu, sample_psi, sample_sigma, sample_weights};
pub use stats::{compute_stats, BlockStats, ClusterStats, SufficientStats};

use crate::error::{Error, Result};
use crate::model::Priors;

/// Settings for one or more chains on the same data.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub k: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub n_chains: usize,
    /// Chain `i` is seeded with `base_seed + i`.
    pub base_seed: u64,
    pub priors: Priors,
    /// Keep every post-burn-in labeling in the summary.
    pub record_labels: bool,
}

impl ChainConfig {
    /// Default `(iterations, burn_in)` for feature dimension `q`.
    pub fn default_lengths(q: usize) -> (usize, usize) {
        match q {
            0..=2 => (2000, 1000),
            3..=5 => (3000, 2000),
            _ => (4000, 3000),
        }
    }

    pub fn validate(&self, q: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::invalid(format!(
                "need 0 <= burn_in < iterations, got burn_in = {}, iterations = {}",
                self.burn_in, self.iterations
            )));
        }
        if self.n_chains == 0 {
            return Err(Error::invalid("n_chains must be at least 1"));
        }
        self.priors.validate(q, self.k)
    }
}
