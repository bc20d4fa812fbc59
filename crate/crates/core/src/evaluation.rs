//! Partition agreement, ensemble baselines, the exact collapsed posterior for
//! tiny instances, and the multi-dataset experiment harness.

use std::collections::HashMap;

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::distributions::{ln_beta_fn, ln_multigamma, log_sum_exp, SpdMatrix};
use crate::error::{Error, Result};
use crate::inference::{compute_stats, run_chains, ChainConfig, ClusterStats};
use crate::model::{Labeling, Network, PriorConfig, Priors, VectorDataset};
use crate::synthesis::{case_preset, generate, preset, CasePreset};

const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Cross-tabulation of two labelings over the same objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    cells: Vec<u64>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    /// Rows index the labels of `a` and columns those of `b`, both taken up
    /// to the largest label present.
    pub fn new(a: &[usize], b: &[usize]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::dims(format!("labelings have lengths {} and {}", a.len(), b.len())));
        }
        let rows = a.iter().max().map_or(0, |m| m + 1);
        let cols = b.iter().max().map_or(0, |m| m + 1);
        let mut cells = vec![0u64; rows * cols];
        let mut row_sums = vec![0u64; rows];
        let mut col_sums = vec![0u64; cols];
        for (&x, &y) in a.iter().zip(b) {
            cells[x * cols + y] += 1;
            row_sums[x] += 1;
            col_sums[y] += 1;
        }
        Ok(Self {
            rows,
            cols,
            cells,
            row_sums,
            col_sums,
            total: a.len() as u64,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.cells[r * self.cols + c]
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

fn pairs(n: u64) -> i128 {
    let n = i128::from(n);
    n * (n - 1) / 2
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.iter()
        .zip(b)
        .all(|(x, y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

/// Hubert–Arabie adjusted Rand index. Pair counts are kept as integers so the
/// result is exactly symmetric and invariant to relabeling. When both
/// partitions are trivial the index is 0/0; it is then 1.0 for identical
/// partitions and 0.0 otherwise.
pub fn adjusted_rand_index(a: &Labeling, b: &Labeling) -> Result<f64> {
    ari_slices(a.labels(), b.labels())
}

fn ari_slices(a: &[usize], b: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    if table.total() < 2 {
        return Err(Error::invalid("ARI needs at least two objects"));
    }
    let index: i128 = table.cells.iter().map(|&c| pairs(c)).sum();
    let sa: i128 = table.row_sums.iter().map(|&c| pairs(c)).sum();
    let sb: i128 = table.col_sums.iter().map(|&c| pairs(c)).sum();
    let total = pairs(table.total());
    let num = 2 * (index * total - sa * sb);
    let den = (sa + sb) * total - 2 * sa * sb;
    if den == 0 {
        return Ok(if same_partition(a, b) { 1.0 } else { 0.0 });
    }
    Ok(num as f64 / den as f64)
}

/// Best bijection from `b`'s labels to `a`'s labels under the table, as
/// `map[col] = row`. Exhaustive for up to 8 labels, greedy beyond.
fn align(table: &ContingencyTable) -> Vec<usize> {
    let k = table.rows().max(table.cols());
    let cell = |r: usize, c: usize| {
        if r < table.rows() && c < table.cols() {
            table.get(r, c)
        } else {
            0
        }
    };
    if k <= 8 {
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best = perm.clone();
        let mut best_score = (0..k).map(|c| cell(perm[c], c)).sum::<u64>();
        while next_permutation(&mut perm) {
            let score = (0..k).map(|c| cell(perm[c], c)).sum::<u64>();
            if score > best_score {
                best_score = score;
                best.copy_from_slice(&perm);
            }
        }
        return best;
    }
    let mut map = vec![usize::MAX; k];
    let mut row_used = vec![false; k];
    for _ in 0..k {
        let mut pick: Option<(u64, usize, usize)> = None;
        for r in (0..k).filter(|&r| !row_used[r]) {
            for c in (0..k).filter(|&c| map[c] == usize::MAX) {
                let v = cell(r, c);
                if pick.is_none_or(|(bv, _, _)| v > bv) {
                    pick = Some((v, r, c));
                }
            }
        }
        let (_, r, c) = pick.expect("a free row and column remain");
        row_used[r] = true;
        map[c] = r;
    }
    map
}

/// Lexicographic successor; false after the last permutation.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&v| v > p[i]).expect("successor exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Consensus of two labelings. `c_net` is relabeled to agree with `c_vec` as
/// much as possible; objects on which they then agree keep `c_vec`'s label
/// and every other object becomes its own cluster.
pub fn combine(c_vec: &Labeling, c_net: &Labeling) -> Result<Labeling> {
    let table = ContingencyTable::new(c_vec.labels(), c_net.labels())?;
    let map = align(&table);
    let mut next = c_vec.k();
    let labels = c_vec
        .labels()
        .iter()
        .zip(c_net.labels())
        .map(|(&v, &n)| {
            if map[n] == v {
                v
            } else {
                next += 1;
                next - 1
            }
        })
        .collect();
    Labeling::new(labels, next)
}

/// The better of the two single-data-type accuracies.
pub fn oracle_pick(ari_vec: f64, ari_net: f64) -> f64 {
    ari_vec.max(ari_net)
}

/// Exact posterior over labelings of a tiny instance.
#[derive(Debug, Clone)]
pub struct ExactPosterior {
    /// Every labeling in lexicographic order with its posterior probability.
    pub labelings: Vec<(Labeling, f64)>,
    pub coclustering: DMatrix<f64>,
}

/// Log marginal likelihood of one cluster's vectors under the
/// Normal-Inverse-Wishart prior, with the likelihood raised to power `w`.
pub(crate) fn log_marginal_niw(stats: &ClusterStats, priors: &Priors, w: f64) -> Result<f64> {
    let n = w * stats.count as f64;
    if n == 0.0 {
        return Ok(0.0);
    }
    let q = priors.mu0.len();
    let qf = q as f64;
    let (alpha, v0) = (priors.alpha, priors.v0);
    let an = alpha + n;
    let vn = v0 + n;
    let d = &stats.mean - &priors.mu0;
    let tn = priors.t_scale.matrix() + &stats.sscp * w + (&d * d.transpose()) * (alpha * n / an);
    let tn = SpdMatrix::new(tn)?;
    Ok(-0.5 * n * qf * LN_PI + 0.5 * qf * (alpha / an).ln() + 0.5 * v0 * priors.t_scale.log_det()
        - 0.5 * vn * tn.log_det()
        + ln_multigamma(q, 0.5 * vn)
        - ln_multigamma(q, 0.5 * v0))
}

fn log_collapsed(data: &VectorDataset, net: &Network, labeling: &Labeling, priors: &Priors) -> Result<f64> {
    let k = labeling.k();
    let stats = compute_stats(data, net, labeling)?;
    let (wx, wy) = (priors.vector_weight(), priors.network_weight());

    let a_sum: f64 = priors.a.iter().sum();
    let mut lp = ln_gamma(a_sum) - ln_gamma(a_sum + labeling.len() as f64);
    for c in 0..k {
        let nk = stats.cluster(c).count as f64;
        lp += ln_gamma(priors.a[c] + nk) - ln_gamma(priors.a[c]);
        lp += log_marginal_niw(stats.cluster(c), priors, wx)?;
    }
    if wy > 0.0 {
        let base = ln_beta_fn(priors.beta1, priors.beta2);
        for a in 0..k {
            for b in a..k {
                let s = stats.block(a, b);
                let on = s.edges as f64;
                let off = (s.pairs - s.edges) as f64;
                lp += ln_beta_fn(priors.beta1 + wy * on, priors.beta2 + wy * off) - base;
            }
        }
    }
    Ok(lp)
}

/// Enumerates all `k^N` labelings with `Φ`, `Ψ` and `P` integrated out and
/// returns the normalized posterior and its co-clustering matrix.
pub fn exact_posterior(data: &VectorDataset, net: &Network, priors: &Priors, k: usize) -> Result<ExactPosterior> {
    let n = data.n();
    if net.n() != n {
        return Err(Error::dims(format!("X has {n} rows, Y has {} nodes", net.n())));
    }
    if k == 0 || n == 0 {
        return Err(Error::invalid("need k >= 1 and at least one object"));
    }
    priors.validate(data.q(), k)?;
    let count = u32::try_from(n)
        .ok()
        .and_then(|e| k.checked_pow(e))
        .filter(|&c| c <= 1_000_000)
        .ok_or_else(|| Error::TooLarge(format!("{k}^{n} labelings exceed 10^6")))?;

    let mut labelings = Vec::with_capacity(count);
    let mut logs = Vec::with_capacity(count);
    let mut labels = vec![0usize; n];
    for t in 0..count {
        let mut r = t;
        for slot in labels.iter_mut().rev() {
            *slot = r % k;
            r /= k;
        }
        let lab = Labeling::new(labels.clone(), k)?;
        logs.push(log_collapsed(data, net, &lab, priors)?);
        labelings.push(lab);
    }
    let z = log_sum_exp(&logs);
    let mut coclustering = DMatrix::zeros(n, n);
    let labelings: Vec<(Labeling, f64)> = labelings
        .into_iter()
        .zip(logs)
        .map(|(lab, l)| {
            let p = (l - z).exp();
            let ls = lab.labels();
            for i in 0..n {
                for j in 0..n {
                    if ls[i] == ls[j] {
                        coclustering[(i, j)] += p;
                    }
                }
            }
            (lab, p)
        })
        .collect();
    Ok(ExactPosterior {
        labelings,
        coclustering,
    })
}

/// Methods reported by [`experiment`], in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Shared,
    Combine,
    Oracle,
    Net,
    Vec,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Shared, Method::Combine, Method::Oracle, Method::Net, Method::Vec];

    pub fn name(self) -> &'static str {
        match self {
            Method::Shared => "Shared",
            Method::Combine => "Combine",
            Method::Oracle => "Oracle",
            Method::Net => "Net",
            Method::Vec => "Vec",
        }
    }
}

/// Per-dataset accuracies of one method with their mean and sample sd.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

impl MethodSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { values, mean, sd }
    }
}

/// Settings for [`experiment`]. Unset chain lengths follow
/// [`ChainConfig::default_lengths`]; unset `k` uses the case's true `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub k: Option<usize>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub n_chains: usize,
    pub base_seed: u64,
    pub priors: PriorConfig,
    /// Also run the single-data-type baselines and the ensembles.
    pub baselines: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: None,
            iterations: None,
            burn_in: None,
            n_chains: 10,
            base_seed: 1,
            priors: PriorConfig::default(),
            baselines: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub case: CasePreset,
    pub n_datasets: usize,
    /// Methods in table order; only `Shared` when baselines are off.
    pub rows: Vec<(Method, MethodSummary)>,
}

impl ExperimentResult {
    pub fn get(&self, method: Method) -> Option<&MethodSummary> {
        self.rows.iter().find(|(m, _)| *m == method).map(|(_, s)| s)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Seed of synthetic dataset `d`.
pub fn dataset_seed(base_seed: u64, d: usize) -> u64 {
    base_seed.wrapping_add(d as u64)
}

/// Chain base seed for dataset `d`; shared by every method on that dataset.
pub fn chain_seed(base_seed: u64, d: usize) -> u64 {
    base_seed.wrapping_add(1_000_000).wrapping_add(1000 * d as u64)
}

/// Runs every method on `n_datasets` seeded datasets of a registry case.
/// Each method's accuracy on a dataset is the median over chains of the
/// MAP labeling's ARI against the truth; Combine and Oracle are built from
/// the Vec and Net runs.
pub fn experiment(case_id: u32, n_datasets: usize, config: &ExperimentConfig) -> Result<ExperimentResult> {
    let case = case_preset(case_id)?;
    let spec = preset(case_id)?;
    if n_datasets == 0 {
        return Err(Error::invalid("n_datasets must be at least 1"));
    }
    let k = config.k.unwrap_or(case.k);
    let (def_iter, def_burn) = ChainConfig::default_lengths(case.q);
    let iterations = config.iterations.unwrap_or(def_iter);
    let burn_in = config.burn_in.unwrap_or(def_burn);

    let mut acc: HashMap<Method, Vec<f64>> = HashMap::new();
    for d in 0..n_datasets {
        let data = generate(&spec, dataset_seed(config.base_seed, d))?;
        let fit = |eta: Option<f64>| -> Result<(f64, Labeling)> {
            let mut pc = config.priors.clone();
            if eta.is_some() {
                pc.eta = eta;
            }
            let chain_cfg = ChainConfig {
                k,
                iterations,
                burn_in,
                n_chains: config.n_chains,
                base_seed: chain_seed(config.base_seed, d),
                priors: pc.resolve(&data.x, k)?,
                record_labels: false,
            };
            let runs = run_chains(&data.x, &data.y, &chain_cfg)?;
            let aris = runs
                .chains
                .iter()
                .map(|c| adjusted_rand_index(&c.map_state.labeling, &data.truth))
                .collect::<Result<Vec<_>>>()?;
            Ok((median(aris), runs.map_labeling().clone()))
        };

        let (shared, _) = fit(None)?;
        acc.entry(Method::Shared).or_default().push(shared);
        if config.baselines {
            let (vec_ari, vec_lab) = fit(Some(1.0))?;
            let (net_ari, net_lab) = fit(Some(0.0))?;
            let comb = adjusted_rand_index(&combine(&vec_lab, &net_lab)?, &data.truth)?;
            acc.entry(Method::Vec).or_default().push(vec_ari);
            acc.entry(Method::Net).or_default().push(net_ari);
            acc.entry(Method::Combine).or_default().push(comb);
            acc.entry(Method::Oracle).or_default().push(oracle_pick(vec_ari, net_ari));
        }
    }
    let rows = Method::ALL
        .iter()
        .filter_map(|m| acc.remove(m).map(|v| (*m, MethodSummary::from_values(v))))
        .collect();
    Ok(ExperimentResult {
        case,
        n_datasets,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn lab(v: &[usize]) -> Labeling {
        Labeling::from_labels(v.to_vec())
    }

    /// ARI from the textbook pair-counting formula in floating point.
    fn ari_reference(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len();
        let (mut both, mut in_a, mut in_b) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let sa = a[i] == a[j];
                let sb = b[i] == b[j];
                both += f64::from(u8::from(sa && sb));
                in_a += f64::from(u8::from(sa));
                in_b += f64::from(u8::from(sb));
            }
        }
        let total = (n * (n - 1) / 2) as f64;
        let expected = in_a * in_b / total;
        (both - expected) / (0.5 * (in_a + in_b) - expected)
    }

    #[test]
    fn ari_fixtures() {
        assert_eq!(adjusted_rand_index(&lab(&[0, 0, 1, 1]), &lab(&[0, 1, 0, 1])).unwrap(), -0.5);
        let t = lab(&[0, 0, 1, 1, 2, 2]);
        assert_eq!(adjusted_rand_index(&t, &t).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&lab(&[0, 0, 0]), &lab(&[5, 5, 5])).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&lab(&[0, 1, 2]), &lab(&[2, 0, 1])).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&lab(&[0, 0, 0]), &lab(&[0, 1, 2])).unwrap(), 0.0);
        assert!(adjusted_rand_index(&lab(&[0, 1]), &lab(&[0])).is_err());
        assert!(adjusted_rand_index(&lab(&[0]), &lab(&[0])).is_err());
    }

    #[test]
    fn contingency_marginals() {
        let t = ContingencyTable::new(&[0, 0, 1, 2, 2, 2], &[1, 0, 0, 1, 1, 0]).unwrap();
        assert_eq!((t.rows(), t.cols(), t.total()), (3, 2, 6));
        assert_eq!(t.row_sums(), &[2, 1, 3]);
        assert_eq!(t.col_sums(), &[3, 3]);
        assert_eq!(t.get(2, 1), 2);
    }

    proptest! {
        #[test]
        fn ari_properties(
            a in prop::collection::vec(0usize..4, 2..40),
            seed in any::<u64>(),
        ) {
            let n = a.len();
            let mut rng = crate::distributions::RngStream::new(seed);
            let b: Vec<usize> = (0..n).map(|_| rng.index(4)).collect();
            let ab = ari_slices(&a, &b).unwrap();
            prop_assert_eq!(ab, ari_slices(&b, &a).unwrap());
            prop_assert!(ab <= 1.0);
            let mut perm: Vec<usize> = (0..4).collect();
            for i in (1..4).rev() {
                perm.swap(i, rng.index(i + 1));
            }
            let pb: Vec<usize> = b.iter().map(|&x| perm[x] + 3).collect();
            prop_assert_eq!(ab, ari_slices(&a, &pb).unwrap());
            prop_assert_eq!(ab == 1.0, same_partition(&a, &b));
            let reference = ari_reference(&a, &b);
            if reference.is_finite() {
                prop_assert!((ab - reference).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn combine_cases() {
        let truth = lab(&(0..30).map(|i| i / 10).collect::<Vec<_>>());
        let permuted = lab(&(0..30).map(|i| [2, 0, 1][i / 10]).collect::<Vec<_>>());
        let c = combine(&truth, &permuted).unwrap();
        assert_eq!(c.labels(), truth.labels());

        let flat = lab(&[0; 30]);
        let c = combine(&truth, &flat).unwrap();
        let ari = adjusted_rand_index(&c, &truth).unwrap();
        let flat_ari = adjusted_rand_index(&flat, &truth).unwrap();
        assert!(flat_ari < ari && ari < 1.0);
        // One cluster of 10 plus 20 singletons against three clusters of 10.
        let (idx, sa, sb, tot) = (45.0, 45.0, 135.0, 435.0);
        let want = (idx - sa * sb / tot) / (0.5 * (sa + sb) - sa * sb / tot);
        assert!((ari - want).abs() < 1e-12);
        assert_eq!(c.counts().iter().filter(|&&m| m == 1).count(), 20);

        let c = combine(&lab(&[0, 0, 1, 1]), &lab(&[0, 1, 0, 1])).unwrap();
        let agree = c.labels().iter().filter(|&&l| l < 2).count();
        assert_eq!(agree, 2);

        let c = combine(&lab(&[0, 0]), &lab(&[0, 1])).unwrap();
        assert_eq!(c.labels().len(), 2);
        let total_disagree = combine(&lab(&[0, 1, 2]), &lab(&[0, 0, 0])).unwrap();
        assert_eq!(total_disagree.counts().iter().filter(|&&m| m > 0).count(), 3);
        assert!(combine(&lab(&[0]), &lab(&[0, 1])).is_err());
    }

    #[test]
    fn combine_greedy_path_matches_exhaustive_on_clear_tables() {
        let a: Vec<usize> = (0..120).map(|i| i / 12).collect();
        let b: Vec<usize> = a.iter().map(|&x| (x * 7 + 3) % 10).collect();
        let c = combine(&lab(&a), &lab(&b)).unwrap();
        assert_eq!(c.labels(), a.as_slice());
    }

    #[test]
    fn permutation_successor() {
        let mut p = vec![0, 1, 2];
        let mut seen = 1;
        while next_permutation(&mut p) {
            seen += 1;
        }
        assert_eq!(seen, 6);
        assert_eq!(p, vec![2, 1, 0]);
    }

    #[test]
    fn oracle_is_max() {
        assert_eq!(oracle_pick(0.3, 0.9), 0.9);
        assert_eq!(oracle_pick(1.0, 1.0), 1.0);
        assert_eq!(oracle_pick(-0.1, -0.2), -0.1);
    }

    fn scalar_priors(k: usize) -> Priors {
        Priors {
            mu0: DVector::from_vec(vec![0.5]),
            alpha: 1.0,
            t_scale: SpdMatrix::from_rows(&[vec![1.0]]).unwrap(),
            v0: 3.0,
            a: vec![1.0; k],
            beta1: 1.0,
            beta2: 1.0,
            eta: 0.5,
        }
    }

    /// Sequential Student-t predictive oracle for the scalar NIW marginal.
    fn scalar_marginal_by_prediction(xs: &[f64], p: &Priors) -> f64 {
        let (mut m, mut kappa, mut v, mut t) = (p.mu0[0], p.alpha, p.v0, p.t_scale.matrix()[(0, 0)]);
        let mut total = 0.0;
        for &x in xs {
            let scale2 = t * (kappa + 1.0) / (kappa * v);
            let z = (x - m).powi(2) / scale2;
            total += ln_gamma(0.5 * (v + 1.0)) - ln_gamma(0.5 * v) - 0.5 * (v * std::f64::consts::PI * scale2).ln()
                - 0.5 * (v + 1.0) * (1.0 + z / v).ln();
            t += kappa * (x - m).powi(2) / (kappa + 1.0);
            m = (kappa * m + x) / (kappa + 1.0);
            kappa += 1.0;
            v += 1.0;
        }
        total
    }

    #[test]
    fn niw_marginal_matches_predictive_chain() {
        let xs = [0.3, 1.9, -0.4, 1.1];
        let p = scalar_priors(1);
        let data = VectorDataset::from_rows(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap();
        let stats = compute_stats(&data, &Network::empty(4), &Labeling::new(vec![0; 4], 1).unwrap()).unwrap();
        let got = log_marginal_niw(stats.cluster(0), &p, 1.0).unwrap();
        assert!((got - scalar_marginal_by_prediction(&xs, &p)).abs() < 1e-10);
    }

    #[test]
    fn exact_posterior_basics() {
        let data = VectorDataset::from_rows(&[vec![0.1], vec![0.3], vec![2.0], vec![2.4]]).unwrap();
        let net = Network::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let ex = exact_posterior(&data, &net, &scalar_priors(2), 2).unwrap();
        assert_eq!(ex.labelings.len(), 16);
        let total: f64 = ex.labelings.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-10);
        for i in 0..4 {
            assert!((ex.coclustering[(i, i)] - 1.0).abs() < 1e-12);
            for j in 0..4 {
                assert_eq!(ex.coclustering[(i, j)], ex.coclustering[(j, i)]);
            }
        }
        assert!(ex.coclustering[(0, 1)] > ex.coclustering[(0, 2)]);

        let one = exact_posterior(&data, &net, &scalar_priors(1), 1).unwrap();
        assert!(one.coclustering.iter().all(|&v| (v - 1.0).abs() < 1e-12));

        let big = VectorDataset::from_rows(&vec![vec![0.0]; 21]).unwrap();
        assert!(matches!(
            exact_posterior(&big, &Network::empty(21), &scalar_priors(2), 2),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn single_edge_with_flat_beta_carries_no_information() {
        let data = VectorDataset::from_rows(&[vec![0.2], vec![0.2]]).unwrap();
        let p = scalar_priors(2);
        let with_edge = exact_posterior(&data, &Network::from_edges(2, &[(0, 1)]).unwrap(), &p, 2).unwrap();
        let without = exact_posterior(&data, &Network::empty(2), &p, 2).unwrap();
        assert!((with_edge.coclustering[(0, 1)] - without.coclustering[(0, 1)]).abs() < 1e-12);

        // X-only enumeration of the four labelings.
        let x_only: Vec<f64> = [[0, 0], [0, 1], [1, 0], [1, 1]]
            .iter()
            .map(|l| {
                let labeling = Labeling::new(l.to_vec(), 2).unwrap();
                let s = compute_stats(&data, &Network::empty(2), &labeling).unwrap();
                let dir = ln_gamma(2.0) - ln_gamma(4.0)
                    + (0..2).map(|c| ln_gamma(1.0 + s.cluster(c).count as f64)).sum::<f64>();
                dir + (0..2).map(|c| log_marginal_niw(s.cluster(c), &p, 1.0).unwrap()).sum::<f64>()
            })
            .collect();
        let z = log_sum_exp(&x_only);
        let together = (x_only[0] - z).exp() + (x_only[3] - z).exp();
        assert!((with_edge.coclustering[(0, 1)] - together).abs() < 1e-12);
        assert!(together > 0.5);
    }

    #[test]
    fn summary_statistics() {
        let s = MethodSummary::from_values(vec![1.0, 0.0, 0.5]);
        assert_eq!(s.mean, 0.5);
        assert!((s.sd - 0.5).abs() < 1e-15);
        assert_eq!(MethodSummary::from_values(vec![0.7]).sd, 0.0);
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn experiment_is_deterministic() {
        let cfg = ExperimentConfig {
            iterations: Some(60),
            burn_in: Some(30),
            n_chains: 2,
            base_seed: 9,
            ..ExperimentConfig::default()
        };
        let a = experiment(1, 1, &cfg).unwrap();
        let b = experiment(1, 1, &cfg).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(
            a.rows.iter().map(|(m, _)| *m).collect::<Vec<_>>(),
            Method::ALL.to_vec()
        );
        let o = a.get(Method::Oracle).unwrap().mean;
        assert_eq!(o, a.get(Method::Vec).unwrap().mean.max(a.get(Method::Net).unwrap().mean));
        assert!(matches!(experiment(99, 1, &cfg), Err(Error::UnknownCase(99))));
    }
}
