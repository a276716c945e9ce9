//! Repeated-trial driver shared by the CLI and the acceptance suite.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{
    empirical_metrics, mse_upper_bound, theory_table, LossSummary, TableAlgorithm, TrialMetrics,
};
use crate::baselines::{
    cms_he_encode_all, cms_he_estimate, he_encode_all, he_estimate_many, olh_params, rhr_encode_all,
    rhr_estimate_many, CmsHeParams, HeParams, RhrParams, CMS_HE_DEFAULT_M1,
};
use crate::cms::{
    encode_all, optimal_losses, predict_variance, server_estimate, worst_case_mse, EstimatorParams,
    RangeMode,
};
use crate::datasets::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    MseOcms,
    LOcms,
    Olh,
    He,
    Rhr,
    CmsHe,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [Self::MseOcms, Self::LOcms, Self::Olh, Self::He, Self::Rhr, Self::CmsHe];

    pub fn label(self) -> &'static str {
        match self {
            Self::MseOcms => "MSE-OCMS",
            Self::LOcms => "L-OCMS",
            Self::Olh => "OLH",
            Self::He => "HE",
            Self::Rhr => "RHR",
            Self::CmsHe => "CMSHE",
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|&a| a == self).unwrap() as u64
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// A fully parameterized protocol, built once per (algorithm, epsilon) cell.
#[derive(Clone, Copy, Debug)]
pub enum Protocol {
    Cms(EstimatorParams),
    He(HeParams),
    Rhr(RhrParams),
    CmsHe(CmsHeParams),
}

impl Protocol {
    pub fn new(alg: Algorithm, d: u64, epsilon: f64, f_star: f64, clip: bool) -> Result<Self> {
        Ok(match alg {
            Algorithm::MseOcms => {
                Protocol::Cms(EstimatorParams::new(epsilon, d, RangeMode::MseOpt, f_star)?.with_clip(clip))
            }
            Algorithm::LOcms => {
                Protocol::Cms(EstimatorParams::new(epsilon, d, RangeMode::LOpt, f_star)?.with_clip(clip))
            }
            Algorithm::Olh => Protocol::Cms(olh_params(epsilon, d)?.with_clip(clip)),
            Algorithm::He => Protocol::He(HeParams::new(d, epsilon)?),
            Algorithm::Rhr => Protocol::Rhr(RhrParams::new(d, epsilon)?),
            Algorithm::CmsHe => Protocol::CmsHe(CmsHeParams::new(d, epsilon, CMS_HE_DEFAULT_M1)?),
        })
    }

    /// Encode every client value and estimate the frequencies of `x_set`.
    pub fn run(&self, values: &[u64], x_set: &[u64], clip: bool, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let raw = match self {
            Protocol::Cms(p) => return Ok(server_estimate(x_set, &encode_all(values, p, rng)?, p)?.values),
            Protocol::He(p) => he_estimate_many(x_set, &he_encode_all(values, p, rng)?, p)?,
            Protocol::Rhr(p) => rhr_estimate_many(x_set, &rhr_encode_all(values, p, rng)?, p)?,
            Protocol::CmsHe(p) => cms_he_estimate(x_set, &cms_he_encode_all(values, p, rng)?, p)?,
        };
        Ok(if clip { raw.into_iter().map(|f| f.clamp(0.0, 1.0)).collect() } else { raw })
    }
}

/// Independent stream for one trial. The seed picks the ChaCha key and the
/// (algorithm, epsilon index, trial) triple picks the stream, so trials can
/// run in any order.
pub fn trial_rng(seed: u64, alg: Algorithm, eps_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((alg.index() << 56) | ((eps_index as u64 & 0xff_ffff) << 32) | (trial as u64 & 0xffff_ffff));
    rng
}

#[derive(Clone, Debug)]
pub struct CellSpec<'a> {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub eps_index: usize,
    pub trials: usize,
    pub x_set: &'a [u64],
    pub f_star: f64,
    pub clip: bool,
    pub seed: u64,
}

pub fn run_cell(ds: &Dataset, spec: &CellSpec) -> Result<Vec<TrialMetrics>> {
    if spec.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let protocol = Protocol::new(spec.algorithm, ds.d, spec.epsilon, spec.f_star, spec.clip)?;
    let truth = ds.frequencies(spec.x_set);
    (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(spec.seed, spec.algorithm, spec.eps_index, t);
            let estimates = protocol.run(&ds.values, spec.x_set, spec.clip, &mut rng)?;
            Ok(TrialMetrics {
                algorithm: spec.algorithm.label().to_string(),
                epsilon: spec.epsilon,
                trial: t,
                x_set: spec.x_set.to_vec(),
                estimates,
                truth: truth.clone(),
            })
        })
        .collect()
}

/// Closed-form `(worst-case MSE, l1 upper bound, l2)` restricted to `x_count`
/// evaluated values.
pub fn theory_columns(alg: Algorithm, epsilon: f64, n: f64, x_count: f64, f_star: f64) -> (f64, f64, f64) {
    match alg {
        Algorithm::MseOcms => {
            let mse = worst_case_mse(epsilon, n, f_star, 0.0);
            (mse, (x_count * x_count * mse).sqrt(), x_count * mse)
        }
        Algorithm::LOcms => {
            let l = optimal_losses(epsilon, n, x_count);
            let m = (1.0 + epsilon.exp()).max(2.0);
            let mse = predict_variance(0.0, epsilon, m, n).max(predict_variance(1.0, epsilon, m, n));
            (mse, l.l1_upper, l.l2)
        }
        Algorithm::Olh => {
            let m = (1.0 + epsilon.exp()).round();
            let v0 = predict_variance(0.0, epsilon, m, n);
            let mse = v0.max(predict_variance(1.0, epsilon, m, n));
            let l2 = x_count * v0 + (predict_variance(1.0, epsilon, m, n) - v0).max(0.0);
            (mse, (x_count * l2).sqrt(), l2)
        }
        Algorithm::He | Algorithm::CmsHe => {
            let v = predict_variance(0.0, epsilon, 2.0, n);
            (v, x_count * v.sqrt(), x_count * v)
        }
        Algorithm::Rhr => {
            let row = theory_table(TableAlgorithm::Rhr, x_count, epsilon, n);
            (row.mse.value, row.l1.value, row.l2.value)
        }
    }
}

/// Fold trials into one summary row per (algorithm, epsilon), in order of
/// first appearance.
pub fn summarize(trials: &[TrialMetrics], n: usize, f_star: f64) -> Result<Vec<LossSummary>> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for t in trials {
        if !keys.iter().any(|(a, e)| *a == t.algorithm && *e == t.epsilon) {
            keys.push((t.algorithm.clone(), t.epsilon));
        }
    }
    keys.into_iter()
        .map(|(label, eps)| {
            let group: Vec<TrialMetrics> = trials
                .iter()
                .filter(|t| t.algorithm == label && t.epsilon == eps)
                .cloned()
                .collect();
            let alg: Algorithm = label.parse()?;
            let x_count = group[0].x_set.len();
            let empirical = empirical_metrics(&group)?;
            let (theory_mse, theory_l1_upper, theory_l2) =
                theory_columns(alg, eps, n as f64, x_count as f64, f_star);
            Ok(LossSummary {
                algorithm: label,
                epsilon: eps,
                empirical,
                theory_mse,
                theory_l1_upper,
                theory_l2,
                mse_upper_bound: mse_upper_bound(theory_mse, group.len(), x_count.max(1)),
            })
        })
        .collect()
}
