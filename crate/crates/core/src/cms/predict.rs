//! Closed-form expectation, variance and loss predictions.

use nalgebra::DMatrix;

use crate::cms::{delta_l, delta_mse};
use crate::error::{Error, Result};
use crate::ldp::MechanismKind;

/// Variance of the randomized-response estimate of a value with frequency
/// `f`, under a pairwise-independent family of range `m`.
pub fn predict_variance(f: f64, epsilon: f64, m: f64, n: f64) -> f64 {
    let e = epsilon.exp();
    let em1 = epsilon.exp_m1();
    (1.0 - f) / (n * (m - 1.0))
        + m * ((1.0 - f) * em1 * (2.0 - m) + m * e) / (n * (m - 1.0) * em1 * em1)
}

/// Variance under a family with uniform average collision `c_bar`, for any
/// mechanism given its `Var(R|=)` and `Var(R|!=)`. `m` is the range the
/// estimator debiases with; pass `1/c_bar` for the effective-range estimator.
pub fn predict_variance_general(
    f_vec: &[f64],
    x: usize,
    var_eq: f64,
    var_neq: f64,
    c_bar: f64,
    m: f64,
    n: f64,
) -> f64 {
    let others: f64 = f_vec
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != x)
        .map(|(_, f)| f)
        .sum();
    let per_other = c_bar * var_eq + (1.0 - c_bar) * var_neq + c_bar * (1.0 - c_bar);
    m * m / ((m - 1.0) * (m - 1.0) * n) * (others * per_other + f_vec[x] * var_eq)
}

/// Expected estimate of every value given average pairwise collisions.
pub fn predict_expectation(collision_avg: &DMatrix<f64>, f_vec: &[f64], m: f64) -> Result<Vec<f64>> {
    let d = f_vec.len();
    if collision_avg.shape() != (d, d) {
        return Err(Error::Config(format!(
            "collision matrix is {:?}, expected {d}x{d}",
            collision_avg.shape()
        )));
    }
    Ok((0..d)
        .map(|x| {
            let mass: f64 = (0..d)
                .map(|y| if y == x { f_vec[x] } else { collision_avg[(x, y)] * f_vec[y] })
                .sum();
            m / (m - 1.0) * mass - 1.0 / (m - 1.0)
        })
        .collect())
}

/// Worst-case variance over values with frequency in `[0, f_star]`, `n = 1`.
pub fn mse_objective(epsilon: f64, m: f64, f_star: f64) -> f64 {
    predict_variance(0.0, epsilon, m, 1.0).max(predict_variance(f_star, epsilon, m, 1.0))
}

/// Worst-case l2 loss over all datasets on a `d`-value dictionary, `n = 1`.
/// Variance is affine in `f`, so the sum over values only depends on `sum f = 1`.
pub fn l2_objective(epsilon: f64, m: f64, d: f64) -> f64 {
    let v0 = predict_variance(0.0, epsilon, m, 1.0);
    let v1 = predict_variance(1.0, epsilon, m, 1.0);
    d * v0 + (v1 - v0)
}

/// Worst-case MSE at the optimal hash range given the prior bound `f_star`.
/// `delta` bounds how far the true maximum frequency may exceed `f_star`.
pub fn worst_case_mse(epsilon: f64, n: f64, f_star: f64, delta: f64) -> f64 {
    if f_star > 0.5 {
        let h = (epsilon / 2.0).exp();
        let hm1 = (epsilon / 2.0).exp_m1();
        return h / (n * hm1 * hm1);
    }
    let e = epsilon.exp();
    let em1 = epsilon.exp_m1();
    let dm = delta_mse(epsilon, f_star);
    2.0 * (dm + e) / (n * em1 * em1) + delta * (1.0 - 2.0 * f_star) * e / (n * dm)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalLosses {
    pub l2: f64,
    pub l1_upper: f64,
    /// `d >> e^eps` limit of `l2`.
    pub l2_limit: f64,
    /// `d >> e^eps` limit of `l1_upper`.
    pub l1_limit: f64,
}

pub fn optimal_losses(epsilon: f64, n: f64, d: f64) -> OptimalLosses {
    let e = epsilon.exp();
    let em1 = epsilon.exp_m1();
    let l2 = 2.0 * (delta_l(epsilon, d) + d * e) / (n * em1 * em1);
    OptimalLosses {
        l2,
        l1_upper: (d * l2).sqrt(),
        l2_limit: 4.0 * d * e / (n * em1 * em1),
        l1_limit: 2.0 * d * (epsilon / 2.0).exp() / (n.sqrt() * em1),
    }
}

/// Tail bound `Pr[|f - f_hat| >= alpha sd] <= 2 exp(-alpha^2/3 (m-1)/(e^eps+m-1))`.
pub fn concentration_bound(alpha: f64, epsilon: f64, m: f64, n: f64) -> Result<f64> {
    let e = epsilon.exp();
    let max = (e * n / (m - 1.0)).sqrt();
    if !(0.0..=max).contains(&alpha) {
        return Err(Error::AlphaOutOfRange { alpha, max });
    }
    Ok(2.0 * (-alpha * alpha / 3.0 * (m - 1.0) / (e + m - 1.0)).exp())
}

/// Range `[A, B]` of a single report's contribution to the estimate.
pub fn estimate_range(epsilon: f64, m: f64) -> (f64, f64) {
    let em1 = epsilon.exp_m1();
    let lo = -1.0 / em1;
    let hi = (em1 + m - 1.0) / em1;
    let k = m / (m - 1.0);
    (k * lo - 1.0 / (m - 1.0), k * hi - 1.0 / (m - 1.0))
}

/// Bias statistics of the estimate of `f_vec[x]` with `k` independently
/// drawn (not pairwise-independent) hash functions: `(mean, variance)`
/// over the draw of the family.
pub fn original_cms_bias_stats(f_vec: &[f64], x: usize, m: f64, k: f64) -> (f64, f64) {
    let sq: f64 = f_vec
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != x)
        .map(|(_, f)| f * f)
        .sum();
    (0.0, sq / ((m - 1.0) * k))
}

/// Worst-case MSE of CMS with a RAPPOR mechanism as `m -> infinity`.
/// `None` for randomized response, which has a finite optimum instead.
pub fn cms_rappor_worst_mse(kind: MechanismKind, epsilon: f64, n: f64, f_star: f64) -> Option<f64> {
    let e = epsilon.exp();
    let em1 = epsilon.exp_m1();
    match kind {
        MechanismKind::Rr => None,
        MechanismKind::SRappor => {
            let h = (epsilon / 2.0).exp();
            let hm1 = (epsilon / 2.0).exp_m1();
            Some(h / (n * hm1 * hm1))
        }
        MechanismKind::ARappor => Some((f_star * em1 * em1 + 4.0 * e) / (n * em1 * em1)),
    }
}

/// l2 loss of CMS with a RAPPOR mechanism as `m -> infinity`.
pub fn cms_rappor_l2(kind: MechanismKind, epsilon: f64, n: f64, d: f64) -> Option<f64> {
    let e = epsilon.exp();
    let em1 = epsilon.exp_m1();
    match kind {
        MechanismKind::Rr => None,
        MechanismKind::SRappor => {
            let h = (epsilon / 2.0).exp();
            let hm1 = (epsilon / 2.0).exp_m1();
            Some(d * h / (n * hm1 * hm1))
        }
        MechanismKind::ARappor => Some(4.0 * d * e / (n * em1 * em1)),
    }
}
