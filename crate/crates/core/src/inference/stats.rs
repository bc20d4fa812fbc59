use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{Labeling, Network, VectorDataset};

/// Count, sample mean and SSCP matrix of one cluster's feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub count: usize,
    pub mean: DVector<f64>,
    /// `Σ (x_i − x̄)(x_i − x̄)ᵀ` over the cluster's members.
    pub sscp: DMatrix<f64>,
}

/// Edge count `s` and potential-pair count `N_b` of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockStats {
    pub edges: u64,
    pub pairs: u64,
}

/// Sufficient statistics of a labeling for every cluster and block.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    clusters: Vec<ClusterStats>,
    block_edges: Vec<u64>,
}

impl SufficientStats {
    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster(&self, k: usize) -> &ClusterStats {
        &self.clusters[k]
    }

    pub fn block(&self, a: usize, b: usize) -> BlockStats {
        let k = self.k();
        let (na, nb) = (self.clusters[a].count as u64, self.clusters[b].count as u64);
        let pairs = if a == b { na * na.saturating_sub(1) / 2 } else { na * nb };
        BlockStats {
            edges: self.block_edges[a * k + b],
            pairs,
        }
    }
}

pub fn compute_stats(data: &VectorDataset, net: &Network, labeling: &Labeling) -> Result<SufficientStats> {
    let n = labeling.len();
    if data.n() != n || net.n() != n {
        return Err(Error::dims(format!(
            "labeling has {n} entries, X has {}, Y has {}",
            data.n(),
            net.n()
        )));
    }
    let k = labeling.k();
    let q = data.q();
    let labels = labeling.labels();

    let mut counts = vec![0usize; k];
    let mut sums = vec![DVector::<f64>::zeros(q); k];
    for (row, &c) in data.rows().zip(labels) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(row) {
            *s += x;
        }
    }
    let means: Vec<DVector<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { s })
        .collect();
    let mut sscp = vec![DMatrix::<f64>::zeros(q, q); k];
    let mut diff = vec![0.0; q];
    for (row, &c) in data.rows().zip(labels) {
        for ((d, x), m) in diff.iter_mut().zip(row).zip(means[c].iter()) {
            *d = x - m;
        }
        let s = &mut sscp[c];
        for a in 0..q {
            for b in 0..q {
                s[(a, b)] += diff[a] * diff[b];
            }
        }
    }

    let mut block_edges = vec![0u64; k * k];
    for (i, j) in net.edges() {
        let (a, b) = (labels[i], labels[j]);
        block_edges[a * k + b] += 1;
        if a != b {
            block_edges[b * k + a] += 1;
        }
    }

    let clusters = counts
        .into_iter()
        .zip(means)
        .zip(sscp)
        .map(|((count, mean), sscp)| ClusterStats { count, mean, sscp })
        .collect();
    Ok(SufficientStats {
        clusters,
        block_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_gets_column_mean() {
        let data = VectorDataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 0.0], vec![2.0, 4.0]]).unwrap();
        let net = Network::from_edges(3, &[(0, 2)]).unwrap();
        let lab = Labeling::new(vec![0, 0, 0], 1).unwrap();
        let s = compute_stats(&data, &net, &lab).unwrap();
        assert_eq!(s.cluster(0).count, 3);
        assert_eq!(s.cluster(0).mean, data.column_mean());
        assert_eq!(s.block(0, 0), BlockStats { edges: 1, pairs: 3 });
    }

    #[test]
    fn singletons_have_zero_sscp_and_no_within_pairs() {
        let data = VectorDataset::from_rows(&[vec![1.0], vec![5.0], vec![2.0]]).unwrap();
        let net = Network::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let lab = Labeling::new(vec![0, 1, 2], 3).unwrap();
        let s = compute_stats(&data, &net, &lab).unwrap();
        for k in 0..3 {
            assert_eq!(s.cluster(k).sscp, DMatrix::zeros(1, 1));
            assert_eq!(s.block(k, k).pairs, 0);
        }
        assert_eq!(s.block(0, 1), BlockStats { edges: 1, pairs: 1 });
        assert_eq!(s.block(2, 1), BlockStats { edges: 1, pairs: 1 });
        assert_eq!(s.block(0, 2).edges, 0);
    }

    #[test]
    fn fixture_matches_direct_enumeration() {
        let rows = vec![vec![0.5, 1.0], vec![-1.0, 2.0], vec![2.0, 2.0], vec![1.5, -0.5]];
        let data = VectorDataset::from_rows(&rows).unwrap();
        let net = Network::from_edges(4, &[(0, 1), (0, 2), (2, 3), (1, 3)]).unwrap();
        let labels = vec![0, 1, 0, 1];
        let lab = Labeling::new(labels.clone(), 2).unwrap();
        let s = compute_stats(&data, &net, &lab).unwrap();

        for k in 0..2 {
            let members: Vec<usize> = (0..4).filter(|&i| labels[i] == k).collect();
            let m: Vec<f64> = (0..2)
                .map(|d| members.iter().map(|&i| rows[i][d]).sum::<f64>() / members.len() as f64)
                .collect();
            for a in 0..2 {
                assert_close!(s.cluster(k).mean[a], m[a], 1e-15);
                for b in 0..2 {
                    let want: f64 = members.iter().map(|&i| (rows[i][a] - m[a]) * (rows[i][b] - m[b])).sum();
                    assert_close!(s.cluster(k).sscp[(a, b)], want, 1e-14);
                }
            }
        }
        for a in 0..2 {
            for b in 0..2 {
                let mut edges = 0;
                let mut pairs = 0;
                for i in 0..4 {
                    for j in (i + 1)..4 {
                        let (x, y) = (labels[i], labels[j]);
                        if (x == a && y == b) || (x == b && y == a) {
                            pairs += 1;
                            edges += u64::from(net.has_edge(i, j));
                        }
                    }
                }
                assert_eq!(s.block(a, b), BlockStats { edges, pairs });
            }
        }
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let data = VectorDataset::from_rows(&[vec![1.0]]).unwrap();
        let net = Network::empty(2);
        let lab = Labeling::new(vec![0, 0], 1).unwrap();
        assert!(compute_stats(&data, &net, &lab).is_err());
    }
}
