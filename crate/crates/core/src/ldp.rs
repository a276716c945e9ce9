//! Perturbation mechanisms and the generic reconstruction `Q = (P^T P)^-1 P^T`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MechanismKind {
    Rr,
    SRappor,
    ARappor,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    pub epsilon: f64,
    pub m: u32,
}

impl MechanismSpec {
    pub fn new(kind: MechanismKind, epsilon: f64, m: u32) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if m < 2 {
            return Err(Error::Config(format!("mechanism needs m >= 2, got {m}")));
        }
        Ok(MechanismSpec { kind, epsilon, m })
    }

    pub fn rr(epsilon: f64, m: u32) -> Result<Self> {
        Self::new(MechanismKind::Rr, epsilon, m)
    }
}

/// Randomized response over `[m]` with its decode values precomputed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomizedResponse {
    m: u32,
    keep: f64,
    hit: f64,
    miss: f64,
}

impl RandomizedResponse {
    pub fn new(epsilon: f64, m: u32) -> Result<Self> {
        MechanismSpec::rr(epsilon, m)?;
        let em1 = epsilon.exp_m1();
        let mf = m as f64;
        Ok(RandomizedResponse {
            m,
            keep: 1.0 / (1.0 + (mf - 1.0) * (-epsilon).exp()),
            // (e^eps + m - 2) / (e^eps - 1)
            hit: 1.0 + (mf - 1.0) / em1,
            miss: -1.0 / em1,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Probability of reporting the true symbol.
    pub fn keep_prob(&self) -> f64 {
        self.keep
    }

    #[inline]
    pub fn perturb<R: Rng + ?Sized>(&self, y: u32, rng: &mut R) -> u32 {
        debug_assert!(y < self.m);
        if rng.random::<f64>() < self.keep {
            y
        } else {
            let v = rng.random_range(0..self.m - 1);
            if v >= y {
                v + 1
            } else {
                v
            }
        }
    }

    #[inline]
    pub fn decode(&self, z: u32, v: u32) -> f64 {
        if z == v {
            self.hit
        } else {
            self.miss
        }
    }

    pub fn hit(&self) -> f64 {
        self.hit
    }

    pub fn miss(&self) -> f64 {
        self.miss
    }

    /// Transition matrix with `P[z][y] = Pr(z | y)`.
    pub fn transition(&self) -> DMatrix<f64> {
        let m = self.m as usize;
        let other = (1.0 - self.keep) / (self.m - 1) as f64;
        DMatrix::from_fn(m, m, |z, y| if z == y { self.keep } else { other })
    }
}

pub fn rr_perturb<R: Rng + ?Sized>(y: u32, spec: &MechanismSpec, rng: &mut R) -> Result<u32> {
    let rr = RandomizedResponse::new(spec.epsilon, spec.m)?;
    if y >= spec.m {
        return Err(Error::OutOfDictionary { value: y as u64, d: spec.m as u64 });
    }
    Ok(rr.perturb(y, rng))
}

pub fn rr_decode(z: u32, v: u32, spec: &MechanismSpec) -> Result<f64> {
    let rr = RandomizedResponse::new(spec.epsilon, spec.m)?;
    for s in [z, v] {
        if s >= spec.m {
            return Err(Error::OutOfDictionary { value: s as u64, d: spec.m as u64 });
        }
    }
    Ok(rr.decode(z, v))
}

/// `(Var(R|=), Var(R|!=))` of the reconstructed indicator.
pub fn mechanism_variances(spec: &MechanismSpec) -> (f64, f64) {
    let e = spec.epsilon.exp();
    let em1 = spec.epsilon.exp_m1();
    match spec.kind {
        MechanismKind::Rr => {
            let m = spec.m as f64;
            (e * (m - 1.0) / (em1 * em1), (em1 + m - 1.0) / (em1 * em1))
        }
        MechanismKind::SRappor => {
            let h = (spec.epsilon / 2.0).exp();
            let hm1 = (spec.epsilon / 2.0).exp_m1();
            let v = h / (hm1 * hm1);
            (v, v)
        }
        MechanismKind::ARappor => ((e + 1.0).powi(2) / (em1 * em1), 4.0 * e / (em1 * em1)),
    }
}

/// A mechanism's transition matrix and its least-squares decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

// Printed matrices are rounded, so column sums drift by a few units in the last place.
const STOCHASTIC_TOL: f64 = 1e-2;

pub fn build_decoder(p: DMatrix<f64>) -> Result<TransitionMatrix> {
    let (rows, cols) = p.shape();
    if cols == 0 || rows < cols {
        return Err(Error::Config(format!(
            "decoder needs at least as many outputs as inputs, got {rows}x{cols}"
        )));
    }
    if p.iter().any(|&v| v.is_nan() || v < 0.0) {
        return Err(Error::Config("transition probabilities must be non-negative".into()));
    }
    for (j, col) in p.column_iter().enumerate() {
        let s: f64 = col.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::Config(format!("column {j} sums to {s}, not 1")));
        }
    }
    let qr = p.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let rank = r
        .diagonal()
        .iter()
        .filter(|v| v.abs() > 1e-12 * diag_max.max(f64::MIN_POSITIVE))
        .count();
    if rank < cols {
        return Err(Error::Singular { rank, cols });
    }
    let q = r
        .solve_upper_triangular(&qr.q().transpose())
        .ok_or(Error::Singular { rank, cols })?;
    Ok(TransitionMatrix { p, q })
}

impl TransitionMatrix {
    /// Decoded indicator vector for observed output `u`.
    pub fn decode_column(&self, u: usize) -> Vec<f64> {
        self.q.column(u).iter().copied().collect()
    }

    /// Largest `Pr(u|v) / Pr(u|v')` over outputs `u`; the mechanism is
    /// `ln(ratio)`-LDP. Infinite when an output is possible for some inputs only.
    pub fn max_likelihood_ratio(&self) -> f64 {
        self.p
            .row_iter()
            .map(|row| {
                let max = row.iter().cloned().fold(0.0, f64::max);
                let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
                if max == 0.0 {
                    1.0
                } else {
                    max / min
                }
            })
            .fold(1.0, f64::max)
    }

    pub fn is_epsilon_ldp(&self, epsilon: f64) -> bool {
        self.max_likelihood_ratio() <= epsilon.exp() * (1.0 + 1e-12)
    }
}
