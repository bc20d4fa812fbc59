use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use super::io::{
    atomic_write, encode_pgm, format_matrix, format_samples, map_order, parse_samples, read_coclustering,
    read_edges, read_labels, read_vectors, write_edges, write_labels, write_vectors,
};
use super::{
    EvalArgs, ExperimentArgs, FitArgs, GenerateArgs, HeatmapArgs, Ordering, RunConfig, DEFAULT_CHAINS,
    DEFAULT_SEED,
};
use crate::distributions::SpdMatrix;
use crate::error::{Error, Result};
use crate::evaluation::{adjusted_rand_index, experiment, ExperimentConfig};
use crate::inference::{run_chains, ChainConfig};
use crate::model::{GmmParams, Labeling, Network, SbmParams, VectorDataset};
use crate::synthesis::{case_preset, generate, preset, GenerativeSpec, LabelMode};

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
    };
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    sizes: Vec<usize>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<Vec<f64>>>,
    psi: Vec<Vec<f64>>,
}

fn read_spec(path: &Path) -> Result<GenerativeSpec> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let f: SpecFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let covs = f
        .covariances
        .iter()
        .map(|rows| SpdMatrix::from_rows(rows))
        .collect::<Result<Vec<_>>>()?;
    let means = f.means.iter().map(|m| DVector::from_row_slice(m)).collect();
    let spec = GenerativeSpec {
        sizes: f.sizes,
        gmm: GmmParams::new(means, covs)?,
        sbm: SbmParams::from_rows(&f.psi)?,
        label_mode: LabelMode::Fixed,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = match (args.case, &args.spec) {
        (Some(id), _) => {
            let info = case_preset(id)?;
            say!(out, "{}", info.describe())?;
            preset(id)?
        }
        (None, Some(path)) => read_spec(path)?,
        (None, None) => return Err(Error::InvalidConfig("one of --case or --spec is required".into())),
    };
    if args.multinomial {
        spec.label_mode = LabelMode::Multinomial;
    }
    let data = generate(&spec, args.seed)?;
    create_dir(&args.out)?;
    write_vectors(&args.out.join("X.csv"), &data.x)?;
    write_edges(&args.out.join("Y.edges"), &data.y)?;
    write_labels(&args.out.join("truth.labels"), &data.truth)?;
    say!(
        out,
        "wrote {} objects, {} features, {} edges to {}",
        data.x.n(),
        data.x.q(),
        data.y.edge_count(),
        args.out.display()
    )
}

/// Chain settings from a resolved run configuration. Without an explicit
/// burn-in, an explicit iteration count keeps its first half as burn-in.
fn chain_lengths(rc: &RunConfig, q: usize) -> (usize, usize) {
    let (iterations, burn_in) = ChainConfig::default_lengths(q);
    match (rc.iterations, rc.burn_in) {
        (Some(i), Some(b)) => (i, b),
        (Some(i), None) => (i, i / 2),
        (None, Some(b)) => (iterations.max(b + 1), b),
        (None, None) => (iterations, burn_in),
    }
}

pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let mut rc = args.chain.resolve()?;
    let k = rc.k.ok_or_else(|| Error::InvalidConfig("k is required (--k or `k =` in --config)".into()))?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let x = args.x.as_deref().map(read_vectors).transpose()?;
    let y = args.y.as_deref().map(read_edges).transpose()?;
    let (x, y) = match (x, y) {
        (Some(x), Some(y)) => {
            if x.n() != y.n() {
                return Err(Error::dims(format!("X has {} rows but Y has {} nodes", x.n(), y.n())));
            }
            (x, y)
        }
        (Some(x), None) => {
            rc.priors.eta = Some(1.0);
            let n = x.n();
            (x, Network::empty(n))
        }
        (None, Some(y)) => {
            rc.priors.eta = Some(0.0);
            (VectorDataset::zeros(y.n()), y)
        }
        (None, None) => return Err(Error::InvalidConfig("at least one of --x and --y is required".into())),
    };

    let (iterations, burn_in) = chain_lengths(&rc, x.q());
    let config = ChainConfig {
        k,
        iterations,
        burn_in,
        n_chains: rc.n_chains.unwrap_or(DEFAULT_CHAINS),
        base_seed: rc.seed.unwrap_or(DEFAULT_SEED),
        priors: rc.priors.resolve(&x, k)?,
        record_labels: args.save_samples,
    };
    let result = run_chains(&x, &y, &config)?;
    let best = result.selected_summary();

    create_dir(&args.out)?;
    write_labels(&args.out.join("map.labels"), &best.map_state.labeling)?;

    let mut trace = String::from("iteration");
    for c in 0..result.chains.len() {
        trace.push_str(&format!(",chain_{}", c + 1));
    }
    trace.push('\n');
    for t in 0..iterations {
        trace.push_str(&(t + 1).to_string());
        for c in &result.chains {
            trace.push_str(&format!(",{}", c.log_post_trace[t]));
        }
        trace.push('\n');
    }
    atomic_write(&args.out.join("trace.csv"), trace.as_bytes())?;
    atomic_write(&args.out.join("coclust.csv"), format_matrix(&best.coclustering).as_bytes())?;
    let order = match args.order {
        Ordering::Map => map_order(&best.map_state.labeling),
        Ordering::Input => (0..x.n()).collect(),
    };
    atomic_write(&args.out.join("coclust.pgm"), &encode_pgm(&best.coclustering, &order))?;
    if let Some(samples) = &best.kept_labelings {
        atomic_write(&args.out.join("samples.csv"), format_samples(samples).as_bytes())?;
    }

    say!(
        out,
        "MAP log posterior {:.6} (chain {}, iteration {})",
        best.map_state.log_post,
        best.chain_index + 1,
        best.map_iteration + 1
    )?;
    for c in &result.chains {
        let used = c.map_state.labeling.counts().iter().filter(|&&m| m > 0).count();
        say!(
            out,
            "chain {}: seed {}, MAP log posterior {:.6} at iteration {}, {} non-empty clusters",
            c.chain_index + 1,
            c.seed,
            c.map_state.log_post,
            c.map_iteration + 1,
            used
        )?;
    }
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let a = read_labels(&args.a)?;
    let b = read_labels(&args.b)?;
    let ari = adjusted_rand_index(&a, &b)?;
    say!(out, "{ari:.6}")
}

/// `0.884` style, with exact 0 and 1 printed bare.
fn short(v: f64) -> String {
    if v == 1.0 {
        "1".into()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.3}")
    }
}

pub fn cmd_experiment(args: &ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    let rc = args.chain.resolve()?;
    let burn_in = match (rc.iterations, rc.burn_in) {
        (Some(i), None) => Some(i / 2),
        (_, b) => b,
    };
    let config = ExperimentConfig {
        k: rc.k,
        iterations: rc.iterations,
        burn_in,
        n_chains: rc.n_chains.unwrap_or(DEFAULT_CHAINS),
        base_seed: rc.seed.unwrap_or(DEFAULT_SEED),
        priors: rc.priors,
        baselines: !args.no_baselines,
    };
    let result = experiment(args.case, args.datasets, &config)?;

    say!(out, "{}", result.case.describe())?;
    say!(out, "datasets: {}, chains per method: {}", result.n_datasets, config.n_chains)?;
    say!(out, "{:<8} mean(sd)", "method")?;
    let mut csv = String::from("method,mean_ari,sd_ari\n");
    for (method, s) in &result.rows {
        say!(out, "{:<8} {}({})", method.name(), short(s.mean), short(s.sd))?;
        csv.push_str(&format!("{},{:.6},{:.6}\n", method.name(), s.mean, s.sd));
    }
    create_dir(&args.out)?;
    let path = args.out.join("results.csv");
    atomic_write(&path, csv.as_bytes())?;
    say!(out, "wrote {}", path.display())
}

pub fn cmd_heatmap(args: &HeatmapArgs, out: &mut dyn Write) -> Result<()> {
    let matrix = match (&args.coclust, &args.samples) {
        (Some(p), _) => read_coclustering(p)?,
        (None, Some(p)) => {
            let text = fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })?;
            let samples = parse_samples(&text, p)?;
            let first = samples.first().ok_or_else(|| Error::Parse {
                path: p.clone(),
                line: 1,
                message: "no labelings".into(),
            })?;
            let n = first.len();
            let mut m = DMatrix::zeros(n, n);
            for s in &samples {
                m += s.comembership();
            }
            m / samples.len() as f64
        }
        (None, None) => return Err(Error::InvalidConfig("one of --coclust or --samples is required".into())),
    };
    let n = matrix.nrows();
    let order = match args.order {
        Ordering::Input => (0..n).collect(),
        Ordering::Map => {
            let path = args
                .labels
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("`map` ordering needs --labels".into()))?;
            let labels: Labeling = read_labels(path)?;
            if labels.len() != n {
                return Err(Error::dims(format!("{} labels for a {n}x{n} matrix", labels.len())));
            }
            map_order(&labels)
        }
    };
    atomic_write(&args.out, &encode_pgm(&matrix, &order))?;
    say!(out, "wrote {n}x{n} heatmap to {}", args.out.display())
}
