use std::path::Path;

use crate::error::{Error, Result};
use crate::model::PriorConfig;

/// Run settings from a `key = value` file and/or command-line flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub k: Option<usize>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub n_chains: Option<usize>,
    pub seed: Option<u64>,
    pub priors: PriorConfig,
}

fn bad(path: &Path, line: usize, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    }
}

/// Parses a list of reals separated by commas and/or whitespace.
pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let values = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|f| !f.is_empty())
        .map(|f| f.parse::<f64>().map_err(|_| format!("not a number: {f:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(values)
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut c = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(path, line, format!("expected `key = value`, found {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let int = || {
                value
                    .parse::<usize>()
                    .map_err(|_| bad(path, line, format!("{key}: expected a non-negative integer, found {value:?}")))
            };
            let real = || {
                value
                    .parse::<f64>()
                    .map_err(|_| bad(path, line, format!("{key}: expected a number, found {value:?}")))
            };
            let list = || parse_list(value).map_err(|m| bad(path, line, format!("{key}: {m}")));
            match key {
                "k" => c.k = Some(int()?),
                "iterations" => c.iterations = Some(int()?),
                "burn_in" => c.burn_in = Some(int()?),
                "n_chains" => c.n_chains = Some(int()?),
                "seed" => {
                    c.seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| bad(path, line, format!("seed: expected an integer, found {value:?}")))?,
                    )
                }
                "eta" => c.priors.eta = Some(real()?),
                "alpha" => c.priors.alpha = Some(real()?),
                "v0" => c.priors.v0 = Some(real()?),
                "beta1" => c.priors.beta1 = Some(real()?),
                "beta2" => c.priors.beta2 = Some(real()?),
                "mu0" => c.priors.mu0 = Some(list()?),
                "t_scale_diag" => c.priors.t_scale_diag = Some(list()?),
                "a_dirichlet" => c.priors.a_dirichlet = Some(list()?),
                other => return Err(bad(path, line, format!("unknown key {other:?}"))),
            }
        }
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(self, over: RunConfig) -> RunConfig {
        let p = self.priors;
        let o = over.priors;
        RunConfig {
            k: over.k.or(self.k),
            iterations: over.iterations.or(self.iterations),
            burn_in: over.burn_in.or(self.burn_in),
            n_chains: over.n_chains.or(self.n_chains),
            seed: over.seed.or(self.seed),
            priors: PriorConfig {
                mu0: o.mu0.or(p.mu0),
                alpha: o.alpha.or(p.alpha),
                v0: o.v0.or(p.v0),
                t_scale_diag: o.t_scale_diag.or(p.t_scale_diag),
                a_dirichlet: o.a_dirichlet.or(p.a_dirichlet),
                beta1: o.beta1.or(p.beta1),
                beta2: o.beta2.or(p.beta2),
                eta: o.eta.or(p.eta),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys_and_comments() {
        let text = "# run\nk = 3\niterations=500\nburn_in = 100 # trailing\nn_chains = 4\nseed = 42\n\
                    eta = 0.7\nalpha = 0.1\nv0 = 6\nbeta1 = 1\nbeta2 = 2\nmu0 = 1.0, 2.0\n\
                    t_scale_diag = 5 5\na_dirichlet = 1\n\n";
        let c = RunConfig::parse(text, Path::new("c")).unwrap();
        assert_eq!(c.k, Some(3));
        assert_eq!(c.iterations, Some(500));
        assert_eq!(c.burn_in, Some(100));
        assert_eq!(c.n_chains, Some(4));
        assert_eq!(c.seed, Some(42));
        assert_eq!(c.priors.eta, Some(0.7));
        assert_eq!(c.priors.mu0, Some(vec![1.0, 2.0]));
        assert_eq!(c.priors.t_scale_diag, Some(vec![5.0, 5.0]));
        assert_eq!(c.priors.a_dirichlet, Some(vec![1.0]));
        assert_eq!(c.priors.beta2, Some(2.0));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let err = RunConfig::parse("k = 3\ngamma = 1\n", Path::new("c")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(RunConfig::parse("k = -1\n", Path::new("c")).is_err());
        assert!(RunConfig::parse("k 3\n", Path::new("c")).is_err());
        assert!(RunConfig::parse("mu0 = \n", Path::new("c")).is_err());
    }

    #[test]
    fn flags_win() {
        let file = RunConfig::parse("k = 3\neta = 0.4\nseed = 1\n", Path::new("c")).unwrap();
        let flags = RunConfig {
            k: Some(4),
            priors: PriorConfig {
                beta1: Some(1.0),
                ..PriorConfig::default()
            },
            ..RunConfig::default()
        };
        let m = file.overridden_by(flags);
        assert_eq!(m.k, Some(4));
        assert_eq!(m.seed, Some(1));
        assert_eq!(m.priors.eta, Some(0.4));
        assert_eq!(m.priors.beta1, Some(1.0));
    }
}
