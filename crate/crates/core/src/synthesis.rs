//! Forward sampling from the joint model and the registry of synthetic cases.
//!
//! Cases 1 to 12 have fixed parameter tables. Cases 13 to 18 only have a
//! recipe; their missing numbers come from draws under fixed registry seeds
//! and are flagged as reconstructed.

use nalgebra::DVector;

use crate::distributions::{sample_categorical, sample_mvnormal, RngStream, SpdMatrix};
use crate::error::{Error, Result};
use crate::model::{GmmParams, Labeling, Network, SbmParams, VectorDataset};

/// How true labels are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMode {
    /// Contiguous blocks: objects `0..n_1` in cluster 0, and so on.
    #[default]
    Fixed,
    /// Independent categorical draws with weights proportional to `sizes`.
    Multinomial,
}

/// Everything needed to sample one synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeSpec {
    pub sizes: Vec<usize>,
    pub gmm: GmmParams,
    pub sbm: SbmParams,
    pub label_mode: LabelMode,
}

impl GenerativeSpec {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn q(&self) -> usize {
        self.gmm.q()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::invalid("spec needs at least one cluster"));
        }
        if self.gmm.k() != k || self.sbm.k() != k {
            return Err(Error::dims(format!(
                "spec has {k} sizes, {} components and a {}x{} edge matrix",
                self.gmm.k(),
                self.sbm.k(),
                self.sbm.k()
            )));
        }
        if self.n() == 0 {
            return Err(Error::invalid("spec has no objects"));
        }
        Ok(())
    }
}

/// A sampled dataset with its true labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedData {
    pub x: VectorDataset,
    pub y: Network,
    pub truth: Labeling,
}

/// Samples labels, then all feature vectors, then edges for `i < j` in
/// row-major order, all from one stream seeded with `seed`.
pub fn generate(spec: &GenerativeSpec, seed: u64) -> Result<GeneratedData> {
    spec.validate()?;
    let (n, k, q) = (spec.n(), spec.k(), spec.q());
    let mut rng = RngStream::new(seed);

    let labels: Vec<usize> = match spec.label_mode {
        LabelMode::Fixed => spec
            .sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &m)| std::iter::repeat_n(c, m))
            .collect(),
        LabelMode::Multinomial => {
            let logw: Vec<f64> = spec.sizes.iter().map(|&m| (m as f64).ln()).collect();
            (0..n)
                .map(|_| sample_categorical(&logw, &mut rng))
                .collect::<Result<_>>()?
        }
    };

    let mut values = Vec::with_capacity(n * q);
    for &c in &labels {
        let x = sample_mvnormal(spec.gmm.mean(c), spec.gmm.cov(c), &mut rng)?;
        values.extend(x.iter());
    }

    let mut y = Network::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.uniform() < spec.sbm.get(labels[i], labels[j]) {
                y.set_edge(i, j);
            }
        }
    }

    Ok(GeneratedData {
        x: VectorDataset::new(n, q, values)?,
        y,
        truth: Labeling::new(labels, k)?,
    })
}

/// Symmetric edge-probability matrix with diagonal entries uniform in
/// `within` and off-diagonal entries uniform in `between`. The upper
/// triangle, diagonal included, is drawn in row-major order.
pub fn random_psi(k: usize, within: (f64, f64), between: (f64, f64), seed: u64) -> Result<SbmParams> {
    for (lo, hi) in [within, between] {
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::invalid(format!("range ({lo}, {hi}) must satisfy 0 < lo < hi < 1")));
        }
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut rng = RngStream::new(seed);
    let mut psi = SbmParams::constant(k, 0.5)?;
    for a in 0..k {
        for b in a..k {
            let (lo, hi) = if a == b { within } else { between };
            psi.set(a, b, lo + (hi - lo) * rng.uniform());
        }
    }
    Ok(psi)
}

/// Network noise level of a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseLevel {
    Low,
    High,
    VeryHigh,
    Moderate,
    Messy,
}

impl NoiseLevel {
    pub fn name(self) -> &'static str {
        match self {
            NoiseLevel::Low => "low",
            NoiseLevel::High => "high",
            NoiseLevel::VeryHigh => "very high",
            NoiseLevel::Moderate => "moderate",
            NoiseLevel::Messy => "messy",
        }
    }

    /// Parses a level name; `hard` is accepted for `messy`.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().replace(['-', '_'], " ").as_str() {
            "low" => Some(NoiseLevel::Low),
            "high" => Some(NoiseLevel::High),
            "very high" => Some(NoiseLevel::VeryHigh),
            "moderate" => Some(NoiseLevel::Moderate),
            "messy" | "hard" => Some(NoiseLevel::Messy),
            _ => None,
        }
    }
}

/// Descriptive tags of a registry case.
#[derive(Debug, Clone, PartialEq)]
pub struct CasePreset {
    pub case_id: u32,
    pub noise: NoiseLevel,
    /// `Some(true)` when the Gaussian components overlap; `None` if untagged.
    pub overlap: Option<bool>,
    pub shape: Option<u8>,
    pub n: usize,
    pub k: usize,
    pub q: usize,
    /// Parameters partly drawn under registry seeds rather than tabulated.
    pub reconstructed: bool,
}

impl CasePreset {
    pub fn describe(&self) -> String {
        let mut parts = vec![
            format!("case {}", self.case_id),
            format!("N={} K={} q={}", self.n, self.k, self.q),
            format!("noise={}", self.noise.name()),
        ];
        if let Some(o) = self.overlap {
            parts.push(format!("overlap={}", if o { "with" } else { "without" }));
        }
        if let Some(s) = self.shape {
            parts.push(format!("shape={s}"));
        }
        if self.reconstructed {
            parts.push("reconstructed".into());
        }
        parts.join(", ")
    }
}

pub const CASE_IDS: std::ops::RangeInclusive<u32> = 1..=18;

const PSI_LOW: [[f64; 3]; 3] = [[0.8, 0.15, 0.2], [0.15, 0.9, 0.25], [0.2, 0.25, 0.9]];
const PSI_HIGH: [[f64; 3]; 3] = [[0.6, 0.25, 0.35], [0.25, 0.65, 0.35], [0.35, 0.35, 0.65]];
const PSI_VERY_HIGH: [[f64; 3]; 3] = [[0.55, 0.3, 0.4], [0.3, 0.6, 0.4], [0.4, 0.4, 0.6]];

// Registry seeds for the reconstructed cases.
const SEED_K10_LAYOUT_N100: u64 = 0x5C13_0100;
const SEED_K10_LAYOUT_N300: u64 = 0x5C15_0300;
const SEED_PSI_MODERATE: u64 = 0x5C_0D0A;
const SEED_PSI_MESSY: u64 = 0x5C_3E55;
const SEED_HIGH_DIM_MEANS: u64 = 0x5C17_0005;
const SEED_COV_Q5: u64 = 0x5C17_C005;
const SEED_COV_Q20: u64 = 0x5C18_C020;

const MODERATE_WITHIN: (f64, f64) = (0.35, 0.5);
const MODERATE_BETWEEN: (f64, f64) = (0.1, 0.2);
const MESSY_WITHIN: (f64, f64) = (0.25, 0.35);
const MESSY_BETWEEN: (f64, f64) = (0.15, 0.25);

/// Returns the tags of a registry case.
pub fn case_preset(case_id: u32) -> Result<CasePreset> {
    let shape = |id: u32| Some(((id - 1) % 3 + 1) as u8);
    let p = |noise, overlap, shape, n, k, q, reconstructed| CasePreset {
        case_id,
        noise,
        overlap,
        shape,
        n,
        k,
        q,
        reconstructed,
    };
    Ok(match case_id {
        1..=3 => p(NoiseLevel::Low, Some(true), shape(case_id), 30, 3, 2, false),
        4..=6 => p(NoiseLevel::High, Some(false), shape(case_id), 30, 3, 2, false),
        7..=9 => p(NoiseLevel::High, Some(true), shape(case_id), 30, 3, 2, false),
        10..=12 => p(NoiseLevel::VeryHigh, Some(true), shape(case_id), 90, 3, 2, false),
        13 => p(NoiseLevel::Moderate, None, None, 100, 10, 2, true),
        14 => p(NoiseLevel::Messy, None, None, 100, 10, 2, true),
        15 => p(NoiseLevel::Moderate, None, None, 300, 10, 2, true),
        16 => p(NoiseLevel::Messy, None, None, 300, 10, 2, true),
        17 => p(NoiseLevel::VeryHigh, None, None, 90, 3, 5, true),
        18 => p(NoiseLevel::VeryHigh, None, None, 90, 3, 20, true),
        _ => return Err(Error::UnknownCase(case_id)),
    })
}

fn cov2(v11: f64, v12: f64, v22: f64, scale: f64) -> SpdMatrix {
    SpdMatrix::from_rows(&[vec![v11 * scale, v12 * scale], vec![v12 * scale, v22 * scale]])
        .expect("registry covariance is SPD")
}

fn k3_gmm(overlap: bool, shape: u8) -> GmmParams {
    let (means, covs): ([[f64; 2]; 3], [SpdMatrix; 3]) = match (overlap, shape) {
        (true, 1) => (
            [[1.1, 1.1], [2.1, 2.3], [3.3, 1.1]],
            [cov2(0.1, -0.03, 0.1, 1.0), cov2(0.15, -0.09, 0.15, 1.0), cov2(0.15, -0.09, 0.15, 1.0)],
        ),
        (true, 2) => (
            [[1.2, 1.2], [1.4, 2.4], [2.4, 1.0]],
            [cov2(0.2, -0.1, 0.2, 1.0), cov2(0.1, 0.05, 0.1, 1.0), cov2(0.1, 0.05, 0.1, 1.0)],
        ),
        (true, _) => (
            [[1.0, 0.6], [2.5, 2.5], [2.25, 1.0]],
            [cov2(0.2, 0.05, 0.2, 1.0), cov2(0.2, 0.05, 0.2, 1.0), cov2(0.25, -0.12, 0.25, 1.0)],
        ),
        (false, 1) => (
            [[1.1, 1.1], [2.1, 2.5], [3.5, 1.1]],
            [
                cov2(0.1, -0.02, 0.1, 1.0 / 3.0),
                cov2(0.15, -0.03, 0.15, 1.0 / 3.0),
                cov2(0.15, -0.03, 0.15, 1.0 / 3.0),
            ],
        ),
        (false, 2) => (
            [[1.0, 1.5], [2.0, 3.0], [3.0, 1.0]],
            [
                cov2(0.2, -0.03, 0.2, 1.0 / 3.0),
                cov2(0.1, 0.02, 0.1, 1.0 / 3.0),
                cov2(0.1, 0.02, 0.1, 1.0 / 3.0),
            ],
        ),
        (false, _) => (
            [[1.0, 1.0], [4.0, 4.0], [3.0, 2.0]],
            [
                cov2(0.1, 0.02, 0.1, 1.0 / 3.0),
                cov2(0.1, 0.02, 0.1, 1.0 / 3.0),
                cov2(0.2, -0.03, 0.2, 1.0 / 3.0),
            ],
        ),
    };
    GmmParams::new(means.iter().map(|m| DVector::from_row_slice(m)).collect(), covs.to_vec())
        .expect("registry mixture is valid")
}

fn psi3(rows: &[[f64; 3]; 3]) -> SbmParams {
    SbmParams::from_rows(&rows.map(|r| r.to_vec())).expect("registry edge matrix is valid")
}

/// Ten means laid out 4/3/3 over three rectangles, each with one of three
/// covariance shapes chosen uniformly.
fn k10_gmm(seed: u64) -> GmmParams {
    const REGIONS: [((f64, f64), (f64, f64), usize); 3] =
        [((1.0, 4.0), (1.0, 4.0), 4), ((4.0, 7.0), (7.0, 10.0), 3), ((6.0, 10.0), (3.0, 8.0), 3)];
    let shapes = [cov2(0.5, 0.0, 0.5, 1.0), cov2(0.5, 0.4, 0.5, 1.0), cov2(0.5, -0.4, 0.5, 1.0)];
    let mut rng = RngStream::new(seed);
    let mut means = Vec::with_capacity(10);
    let mut covs = Vec::with_capacity(10);
    for ((x0, x1), (y0, y1), count) in REGIONS {
        for _ in 0..count {
            let x = x0 + (x1 - x0) * rng.uniform();
            let y = y0 + (y1 - y0) * rng.uniform();
            means.push(DVector::from_vec(vec![x, y]));
            covs.push(shapes[rng.index(3)].clone());
        }
    }
    GmmParams::new(means, covs).expect("registry mixture is valid")
}

/// Three means with coordinates uniform in `[0, 3]`; the first five
/// coordinates are shared between the `q = 5` and `q = 20` cases. Each
/// covariance has unit diagonal and off-diagonals uniform in `(-0.05, 0.05)`.
fn high_dim_gmm(q: usize, cov_seed: u64) -> GmmParams {
    let mut rng = RngStream::new(SEED_HIGH_DIM_MEANS);
    let full: Vec<Vec<f64>> = (0..3).map(|_| (0..20).map(|_| 3.0 * rng.uniform()).collect()).collect();
    let means = full.iter().map(|m| DVector::from_row_slice(&m[..q])).collect();

    let mut rng = RngStream::new(cov_seed);
    let covs = (0..3)
        .map(|_| {
            let mut m = nalgebra::DMatrix::<f64>::identity(q, q);
            for a in 0..q {
                for b in (a + 1)..q {
                    let v = -0.05 + 0.1 * rng.uniform();
                    m[(a, b)] = v;
                    m[(b, a)] = v;
                }
            }
            SpdMatrix::new(m).expect("diagonally dominant matrix is SPD")
        })
        .collect();
    GmmParams::new(means, covs).expect("registry mixture is valid")
}

/// Returns the generative parameters of a registry case.
pub fn preset(case_id: u32) -> Result<GenerativeSpec> {
    let info = case_preset(case_id)?;
    let sizes = vec![info.n / info.k; info.k];
    let (gmm, sbm) = match case_id {
        1..=12 => {
            let psi = match info.noise {
                NoiseLevel::Low => psi3(&PSI_LOW),
                NoiseLevel::High => psi3(&PSI_HIGH),
                _ => psi3(&PSI_VERY_HIGH),
            };
            (k3_gmm(info.overlap == Some(true), info.shape.unwrap_or(1)), psi)
        }
        13..=16 => {
            let layout = if info.n == 100 { SEED_K10_LAYOUT_N100 } else { SEED_K10_LAYOUT_N300 };
            let psi = match info.noise {
                NoiseLevel::Moderate => random_psi(10, MODERATE_WITHIN, MODERATE_BETWEEN, SEED_PSI_MODERATE)?,
                _ => random_psi(10, MESSY_WITHIN, MESSY_BETWEEN, SEED_PSI_MESSY)?,
            };
            (k10_gmm(layout), psi)
        }
        _ => {
            let seed = if info.q == 5 { SEED_COV_Q5 } else { SEED_COV_Q20 };
            (high_dim_gmm(info.q, seed), psi3(&PSI_VERY_HIGH))
        }
    };
    Ok(GenerativeSpec {
        sizes,
        gmm,
        sbm,
        label_mode: LabelMode::Fixed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::BETA_CLAMP;

    #[test]
    fn clique_network_from_extreme_psi() {
        let mut spec = preset(1).unwrap();
        let hi = 1.0 - BETA_CLAMP;
        spec.sbm = SbmParams::from_rows(&[vec![hi, BETA_CLAMP, BETA_CLAMP], vec![BETA_CLAMP, hi, BETA_CLAMP], vec![
            BETA_CLAMP, BETA_CLAMP, hi,
        ]])
        .unwrap();
        let d = generate(&spec, 3).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                if i != j {
                    assert_eq!(d.y.has_edge(i, j), d.truth.get(i) == d.truth.get(j));
                }
            }
        }
    }

    #[test]
    fn low_noise_within_block_edge_count() {
        let spec = preset(1).unwrap();
        let graphs = 1000;
        let mut total = 0usize;
        for s in 0..graphs {
            let d = generate(&spec, s).unwrap();
            total += d.y.edges().filter(|&(i, j)| i < 10 && j < 10).count();
        }
        let mean = total as f64 / graphs as f64;
        let se = (45.0f64 * 0.8 * 0.2 / graphs as f64).sqrt();
        assert!((mean - 36.0).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn shape_one_cluster_means() {
        let spec = GenerativeSpec {
            sizes: vec![10_000; 3],
            ..preset(1).unwrap()
        };
        let d = generate(&spec, 9).unwrap();
        let want = [[1.1, 1.1], [2.1, 2.3], [3.3, 1.1]];
        for (c, w) in want.iter().enumerate() {
            for dim in 0..2 {
                let m: f64 = (0..10_000).map(|i| d.x.row(c * 10_000 + i)[dim]).sum::<f64>() / 10_000.0;
                assert!((m - w[dim]).abs() < 0.02, "cluster {c} dim {dim}: {m}");
            }
        }
    }

    #[test]
    fn block_frequencies_converge() {
        let spec = GenerativeSpec {
            sizes: vec![150; 3],
            ..preset(7).unwrap()
        };
        let d = generate(&spec, 21).unwrap();
        let mut edges = [[0usize; 3]; 3];
        for (i, j) in d.y.edges() {
            let (a, b) = (d.truth.get(i), d.truth.get(j));
            edges[a.min(b)][a.max(b)] += 1;
        }
        for a in 0..3 {
            for b in a..3 {
                let pairs = if a == b { 150 * 149 / 2 } else { 150 * 150 } as f64;
                let p = spec.sbm.get(a, b);
                let se = (p * (1.0 - p) / pairs).sqrt();
                assert!((edges[a][b] as f64 / pairs - p).abs() < 4.0 * se);
            }
        }
    }

    #[test]
    fn fixed_labels_and_determinism() {
        let spec = preset(4).unwrap();
        let a = generate(&spec, 42).unwrap();
        let b = generate(&spec, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate(&spec, 43).unwrap());
        assert_eq!(a.truth.counts(), vec![10, 10, 10]);
        assert!(a.truth.labels().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn multinomial_labels_follow_sizes() {
        let spec = GenerativeSpec {
            sizes: vec![3000, 1000, 0],
            label_mode: LabelMode::Multinomial,
            ..preset(1).unwrap()
        };
        let d = generate(&spec, 5).unwrap();
        let c = d.truth.counts();
        assert_eq!(c[2], 0);
        assert!((c[0] as f64 / 4000.0 - 0.75).abs() < 0.03);
    }

    #[test]
    fn registry_values() {
        let s1 = preset(1).unwrap();
        assert_eq!((s1.k(), s1.n(), s1.q()), (3, 30, 2));
        assert_eq!(s1.gmm.mean(1).as_slice(), &[2.1, 2.3]);
        assert_eq!(s1.gmm.cov(0).matrix()[(0, 1)], -0.03);
        assert_eq!(s1.sbm.get(1, 1), 0.9);

        let s10 = preset(10).unwrap();
        assert_eq!(s10.n(), 90);
        assert_eq!(s10.sbm.matrix().row(0).iter().cloned().collect::<Vec<_>>(), vec![0.55, 0.3, 0.4]);
        assert_eq!(s10.sbm.get(2, 2), 0.6);

        let s4 = preset(4).unwrap();
        assert_eq!(s4.gmm.cov(0).matrix()[(0, 0)], 0.1 / 3.0);
        assert_eq!(s4.sbm.get(0, 2), 0.35);

        let s17 = preset(17).unwrap();
        assert_eq!(s17.q(), 5);
        for c in 0..3 {
            let m = s17.gmm.cov(c).matrix();
            for a in 0..5 {
                assert_eq!(m[(a, a)], 1.0);
                for b in 0..5 {
                    if a != b {
                        assert!(m[(a, b)].abs() < 0.05);
                    }
                }
            }
        }
        let s18 = preset(18).unwrap();
        assert_eq!(s18.q(), 20);
        for c in 0..3 {
            assert_eq!(&s18.gmm.mean(c).as_slice()[..5], s17.gmm.mean(c).as_slice());
        }

        assert!(matches!(preset(99), Err(Error::UnknownCase(99))));
        assert!(preset(0).is_err());
    }

    #[test]
    fn k10_layout_respects_regions() {
        for id in 13..=16 {
            let s = preset(id).unwrap();
            assert_eq!(s.k(), 10);
            assert_eq!(s.n(), if id <= 14 { 100 } else { 300 });
            let inside = |m: &DVector<f64>, x: (f64, f64), y: (f64, f64)| {
                (x.0..=x.1).contains(&m[0]) && (y.0..=y.1).contains(&m[1])
            };
            for c in 0..4 {
                assert!(inside(s.gmm.mean(c), (1.0, 4.0), (1.0, 4.0)));
            }
            for c in 4..7 {
                assert!(inside(s.gmm.mean(c), (4.0, 7.0), (7.0, 10.0)));
            }
            for c in 7..10 {
                assert!(inside(s.gmm.mean(c), (6.0, 10.0), (3.0, 8.0)));
            }
            for c in 0..10 {
                let m = s.gmm.cov(c).matrix();
                assert_eq!(m[(0, 0)], 0.5);
                assert!([0.0, 0.4, -0.4].contains(&m[(0, 1)]));
            }
        }
        assert!(case_preset(16).unwrap().reconstructed);
        assert!(!case_preset(12).unwrap().reconstructed);
    }

    #[test]
    fn random_psi_ranges() {
        let p = random_psi(5, (0.6, 0.7), (0.2, 0.3), 1).unwrap();
        let min_diag = (0..5).map(|a| p.get(a, a)).fold(1.0, f64::min);
        for a in 0..5 {
            for b in 0..5 {
                assert_eq!(p.get(a, b), p.get(b, a));
                if a != b {
                    assert!(p.get(a, b) < min_diag);
                }
            }
        }
        let one = random_psi(1, (0.6, 0.7), (0.2, 0.3), 1).unwrap();
        assert!((0.6..0.7).contains(&one.get(0, 0)));
        assert_eq!(p, random_psi(5, (0.6, 0.7), (0.2, 0.3), 1).unwrap());
        assert!(random_psi(3, (0.7, 0.6), (0.2, 0.3), 1).is_err());
        assert!(random_psi(3, (0.0, 0.6), (0.2, 0.3), 1).is_err());
    }

    #[test]
    fn noise_aliases() {
        assert_eq!(NoiseLevel::from_name("hard"), Some(NoiseLevel::Messy));
        assert_eq!(NoiseLevel::from_name("very-high"), Some(NoiseLevel::VeryHigh));
        assert_eq!(NoiseLevel::from_name("extreme"), None);
    }
}
