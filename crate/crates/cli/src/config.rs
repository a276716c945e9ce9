use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ocms::datasets::{gen_gaussian, gen_zipf, ingest_kosarak, ZipfSpec};
use ocms::{Algorithm, Dataset};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Zipf {
        d: u64,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ranks: Option<u64>,
        #[serde(default)]
        mod_aligned: bool,
    },
    Gaussian {
        n: usize,
    },
    Kosarak {
        path: PathBuf,
        #[serde(default = "default_rate")]
        rate: f64,
    },
}

fn default_rate() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XSet {
    TopK(usize),
    All,
    Values(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub algorithms: Vec<String>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_x_set")]
    pub x_set: XSet,
    #[serde(default = "default_f_star")]
    pub f_star: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub clip: bool,
    /// Not serialized, so moving a run does not change its config hash.
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
}

fn default_epsilons() -> Vec<f64> {
    vec![1.0, 2.0, 3.0, 4.0, 5.0]
}
fn default_trials() -> usize {
    100
}
fn default_x_set() -> XSet {
    XSet::TopK(100)
}
fn default_f_star() -> f64 {
    1.0
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that do not need the materialized dataset.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("field `trials` must be at least 1");
        }
        if self.epsilons.is_empty() {
            bail!("field `epsilons` must not be empty");
        }
        for (i, e) in self.epsilons.iter().enumerate() {
            if !(*e > 0.0 && e.is_finite()) {
                bail!("field `epsilons[{i}]` must be positive, got {e}");
            }
        }
        if !(0.0..=1.0).contains(&self.f_star) {
            bail!("field `f_star` must lie in [0, 1], got {}", self.f_star);
        }
        if self.algorithms.is_empty() {
            bail!("field `algorithms` must name at least one algorithm");
        }
        self.parsed_algorithms()?;
        if let DatasetConfig::Kosarak { rate, .. } = self.dataset {
            if !(rate > 0.0 && rate <= 1.0) {
                bail!("field `dataset.rate` must lie in (0, 1], got {rate}");
            }
        }
        Ok(())
    }

    pub fn parsed_algorithms(&self) -> Result<Vec<Algorithm>> {
        self.algorithms
            .iter()
            .enumerate()
            .map(|(i, a)| a.parse().with_context(|| format!("field `algorithms[{i}]`")))
            .collect()
    }

    /// Seed for the dataset generator, kept apart from the trial streams.
    pub fn dataset_seed(&self) -> u64 {
        self.seed ^ 0x9e37_79b9_7f4a_7c15
    }

    pub fn materialize(&self) -> Result<Dataset> {
        let seed = self.dataset_seed();
        let ds = match &self.dataset {
            DatasetConfig::Zipf { d, n, ranks, mod_aligned } => {
                gen_zipf(&ZipfSpec { d: *d, n: *n, ranks: *ranks, mod_aligned: *mod_aligned }, seed)?
            }
            DatasetConfig::Gaussian { n } => gen_gaussian(*n, seed)?,
            DatasetConfig::Kosarak { path, rate } => {
                ingest_kosarak(path, *rate, seed).with_context(|| format!("ingesting {}", path.display()))?
            }
        };
        Ok(ds)
    }

    pub fn x_set(&self, ds: &Dataset) -> Result<Vec<u64>> {
        match &self.x_set {
            XSet::TopK(k) => {
                if *k == 0 || *k as u64 > ds.d {
                    bail!("field `x_set.top_k` = {k} must lie in [1, d = {}]", ds.d);
                }
                Ok(ds.top_k(*k))
            }
            XSet::All => Ok((0..ds.d).collect()),
            XSet::Values(v) => {
                if v.is_empty() {
                    bail!("field `x_set.values` must not be empty");
                }
                if let Some(x) = v.iter().find(|&&x| x >= ds.d) {
                    bail!("field `x_set.values` contains {x}, outside the dictionary of size {}", ds.d);
                }
                Ok(v.clone())
            }
        }
    }
}
