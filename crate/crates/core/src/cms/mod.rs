//! Count-mean sketch with randomized response: client encoding, server
//! aggregation and the choice of hash range.

mod predict;
mod wire;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{finite_field_size, FieldSpec};
use crate::hashing::{api_stats, sample_element, HashFn};
use crate::ldp::RandomizedResponse;

pub use predict::*;
pub use wire::*;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RangeMode {
    /// Minimize the worst-case MSE.
    MseOpt,
    /// Minimize the l1/l2 losses.
    LOpt,
    Fixed(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorParams {
    pub epsilon: f64,
    pub d: u64,
    pub mode: RangeMode,
    pub f_star: f64,
    pub m: u32,
    pub field: FieldSpec,
    pub m_prime: f64,
    pub clip: bool,
}

impl EstimatorParams {
    pub fn new(epsilon: f64, d: u64, mode: RangeMode, f_star: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if d == 0 {
            return Err(Error::Config("dictionary size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&f_star) {
            return Err(Error::Config(format!("f_star must lie in [0, 1], got {f_star}")));
        }
        let m = hash_range(epsilon, d, f_star, mode);
        if m < 2 {
            return Err(Error::Config(format!("hash range must be at least 2, got {m}")));
        }
        let field = finite_field_size(d, m);
        let m_prime = api_stats(field, m)?.m_prime;
        Ok(EstimatorParams { epsilon, d, mode, f_star, m, field, m_prime, clip: false })
    }

    /// Replace the hashing field, e.g. with a tiny field for exhaustive checks.
    /// Only requires the field to hold every value and every bucket.
    pub fn with_field(mut self, field: FieldSpec) -> Result<Self> {
        let need = (self.d as u128).max(self.m as u128);
        if field.size() < need {
            return Err(Error::Config(format!(
                "field of size {} cannot hold {need} values",
                field.size()
            )));
        }
        self.m_prime = api_stats(field, self.m)?.m_prime;
        self.field = field;
        Ok(self)
    }

    pub fn with_clip(mut self, clip: bool) -> Self {
        self.clip = clip;
        self
    }

    pub fn rr(&self) -> RandomizedResponse {
        RandomizedResponse::new(self.epsilon, self.m).expect("validated at construction")
    }
}

/// `Delta_MSE = e^{eps/2} sqrt([(1-f*)e^eps + f*][f* e^eps + 1 - f*])`.
pub fn delta_mse(epsilon: f64, f_star: f64) -> f64 {
    let e = epsilon.exp();
    (epsilon / 2.0).exp() * (((1.0 - f_star) * e + f_star) * (f_star * e + 1.0 - f_star)).sqrt()
}

/// `Delta_l = e^{eps/2} sqrt((e^eps + d - 1)(d e^eps - e^eps + 1))`.
pub fn delta_l(epsilon: f64, d: f64) -> f64 {
    let e = epsilon.exp();
    (epsilon / 2.0).exp() * ((e + d - 1.0) * (d * e - e + 1.0)).sqrt()
}

/// Real-valued optimum of the hash range before rounding.
pub fn hash_range_real(epsilon: f64, d: u64, f_star: f64, mode: RangeMode) -> f64 {
    let e = epsilon.exp();
    match mode {
        RangeMode::Fixed(m) => m as f64,
        RangeMode::MseOpt if f_star > 0.5 => 1.0 + (epsilon / 2.0).exp(),
        RangeMode::MseOpt => 1.0 + delta_mse(epsilon, f_star) / (f_star * e + 1.0 - f_star),
        RangeMode::LOpt => {
            let d = d as f64;
            1.0 + delta_l(epsilon, d) / (e + d - 1.0)
        }
    }
}

/// Integer hash range.
///
/// The objective is evaluated at the floor and ceiling of the real optimum
/// and the better one wins. Half-away-from-zero rounding of the real optimum
/// is kept only when both give the same objective. Never below 2.
pub fn hash_range(epsilon: f64, d: u64, f_star: f64, mode: RangeMode) -> u32 {
    if let RangeMode::Fixed(m) = mode {
        return m;
    }
    let real = hash_range_real(epsilon, d, f_star, mode);
    let objective = |m: f64| match mode {
        RangeMode::MseOpt => mse_objective(epsilon, m, f_star),
        _ => l2_objective(epsilon, m, d as f64),
    };
    let lo = real.floor().max(2.0);
    let hi = real.ceil().max(2.0);
    if lo == hi {
        return lo as u32;
    }
    let (a, b) = (objective(lo), objective(hi));
    if (a - b).abs() <= 1e-12 * a.max(b) {
        real.round().max(2.0) as u32
    } else if a < b {
        lo as u32
    } else {
        hi as u32
    }
}

/// Per-client report: perturbed bucket plus the hash coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Report {
    pub z: u32,
    pub a0: u64,
    pub a1: u64,
}

fn check_value(x: u64, d: u64) -> Result<()> {
    if x >= d {
        Err(Error::OutOfDictionary { value: x, d })
    } else {
        Ok(())
    }
}

#[inline]
fn encode_one<R: Rng + ?Sized>(x: u64, p: &EstimatorParams, rr: &RandomizedResponse, rng: &mut R) -> Report {
    let a0 = sample_element(p.field, rng);
    let a1 = sample_element(p.field, rng);
    let h = HashFn { a0, a1, field: p.field, m: p.m };
    let z = rr.perturb(h.eval_unchecked(x), rng);
    Report { z, a0, a1 }
}

pub fn client_encode<R: Rng + ?Sized>(x: u64, params: &EstimatorParams, rng: &mut R) -> Result<Report> {
    check_value(x, params.d)?;
    Ok(encode_one(x, params, &params.rr(), rng))
}

/// Encode a whole population from one random stream, in order.
pub fn encode_all<R: Rng + ?Sized>(values: &[u64], params: &EstimatorParams, rng: &mut R) -> Result<Vec<Report>> {
    if let Some(&x) = values.iter().find(|&&x| x >= params.d) {
        return Err(Error::OutOfDictionary { value: x, d: params.d });
    }
    let rr = params.rr();
    Ok(values.iter().map(|&x| encode_one(x, params, &rr, rng)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimates {
    pub n: usize,
    pub values: Vec<f64>,
}

/// Debiased frequency of every value in `x_set`.
///
/// Each report contributes one of two decode values, so the sum is formed
/// from the match count and is exact up to a single rounding.
pub fn server_estimate(x_set: &[u64], reports: &[Report], params: &EstimatorParams) -> Result<Estimates> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    for &x in x_set {
        check_value(x, params.d)?;
    }
    for r in reports {
        if r.z >= params.m {
            return Err(Error::Config(format!("report symbol {} outside [0, {})", r.z, params.m)));
        }
        params.field.check(r.a0)?;
        params.field.check(r.a1)?;
    }
    let rr = params.rr();
    let n = reports.len();
    let mp = params.m_prime;
    let scale = mp / (n as f64 * (mp - 1.0));
    let shift = 1.0 / (mp - 1.0);
    let values = x_set
        .par_iter()
        .map(|&x| {
            let matches = reports
                .iter()
                .filter(|r| {
                    let h = HashFn { a0: r.a0, a1: r.a1, field: params.field, m: params.m };
                    h.eval_unchecked(x) == r.z
                })
                .count();
            let sum = matches as f64 * rr.hit() + (n - matches) as f64 * rr.miss();
            let f = scale * sum - shift;
            if params.clip {
                f.clamp(0.0, 1.0)
            } else {
                f
            }
        })
        .collect();
    Ok(Estimates { n, values })
}
