//! Baseline estimators expressed as count-mean sketches: Hadamard encoding,
//! recursive Hadamard response, optimized local hashing and CMS over HE.

use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::cms::{EstimatorParams, RangeMode};
use crate::error::{Error, Result};
use crate::field::{finite_field_size, FieldSpec};
use crate::hashing::{api_stats, sample_element, HashFn};
use crate::ldp::RandomizedResponse;

/// Entry of the Sylvester-ordered Walsh-Hadamard matrix.
#[inline]
pub fn hadamard_entry(row: u64, col: u64) -> i8 {
    if (row & col).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Smallest `L` with `2^L >= size`.
pub fn hadamard_exponent(size: u64) -> u32 {
    if size <= 1 {
        0
    } else {
        64 - (size - 1).leading_zeros()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HadamardIndex {
    pub l: u32,
    pub row: u64,
    pub col: u64,
}

impl HadamardIndex {
    pub fn new(l: u32, row: u64, col: u64) -> Result<Self> {
        let size = 1u128 << l;
        if l > 63 || row as u128 >= size || col as u128 >= size {
            return Err(Error::Config(format!("index ({row}, {col}) outside a 2^{l} Hadamard matrix")));
        }
        Ok(HadamardIndex { l, row, col })
    }

    pub fn entry(&self) -> i8 {
        hadamard_entry(self.row, self.col)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("epsilon must be positive, got {epsilon}")))
    }
}

fn check_value(x: u64, d: u64) -> Result<()> {
    if x >= d {
        Err(Error::OutOfDictionary { value: x, d })
    } else {
        Ok(())
    }
}

/// Binary randomized response on a sign.
#[inline]
fn flip_sign<R: Rng + ?Sized>(s: i8, keep: f64, rng: &mut R) -> i8 {
    if rng.random::<f64>() < keep {
        s
    } else {
        -s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeParams {
    pub d: u64,
    pub epsilon: f64,
    /// Rows `1..=d` are used, so `2^l >= d + 1`.
    pub l: u32,
}

impl HeParams {
    pub fn new(d: u64, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if d == 0 || d >= 1 << 62 {
            return Err(Error::Config(format!("HE dictionary size {d} unsupported")));
        }
        Ok(HeParams { d, epsilon, l: hadamard_exponent(d + 1) })
    }

    fn keep(&self) -> f64 {
        1.0 / (1.0 + (-self.epsilon).exp())
    }

    /// `(e^eps + 1)/(e^eps - 1)`, the unbiasing factor for a flipped sign.
    fn gain(&self) -> f64 {
        1.0 + 2.0 / self.epsilon.exp_m1()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HeReport {
    pub j: u64,
    pub z: i8,
}

#[inline]
fn he_encode_raw<R: Rng + ?Sized>(row: u64, l: u32, keep: f64, rng: &mut R) -> HeReport {
    let j = rng.random_range(0..1u64 << l);
    HeReport { j, z: flip_sign(hadamard_entry(row, j), keep, rng) }
}

pub fn he_encode<R: Rng + ?Sized>(x: u64, params: &HeParams, rng: &mut R) -> Result<HeReport> {
    check_value(x, params.d)?;
    Ok(he_encode_raw(x + 1, params.l, params.keep(), rng))
}

pub fn he_encode_all<R: Rng + ?Sized>(values: &[u64], params: &HeParams, rng: &mut R) -> Result<Vec<HeReport>> {
    let keep = params.keep();
    values
        .iter()
        .map(|&x| {
            check_value(x, params.d)?;
            Ok(he_encode_raw(x + 1, params.l, keep, rng))
        })
        .collect()
}

fn check_he_reports(reports: &[HeReport], l: u32) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    for r in reports {
        if r.j >= 1 << l || !(r.z == 1 || r.z == -1) {
            return Err(Error::Config(format!("malformed HE report {r:?}")));
        }
    }
    Ok(())
}

fn he_sum(row: u64, reports: &[HeReport]) -> i64 {
    reports
        .iter()
        .map(|r| (r.z * hadamard_entry(row, r.j)) as i64)
        .sum()
}

pub fn he_estimate(x: u64, reports: &[HeReport], params: &HeParams) -> Result<f64> {
    Ok(he_estimate_many(&[x], reports, params)?[0])
}

pub fn he_estimate_many(x_set: &[u64], reports: &[HeReport], params: &HeParams) -> Result<Vec<f64>> {
    check_he_reports(reports, params.l)?;
    for &x in x_set {
        check_value(x, params.d)?;
    }
    let scale = params.gain() / reports.len() as f64;
    Ok(x_set.par_iter().map(|&x| scale * he_sum(x + 1, reports) as f64).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhrParams {
    pub d: u64,
    pub epsilon: f64,
    /// Output symbols per report are `2^b`.
    pub b: u32,
    /// Residue block size `2^(b-1)`.
    pub block: u64,
    pub l: u32,
}

impl RhrParams {
    /// Block bits `b = max(1, round(eps))`.
    pub fn new(d: u64, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Self::with_bits(d, epsilon, (epsilon.round() as u32).max(1))
    }

    pub fn with_bits(d: u64, epsilon: f64, b: u32) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !(1..=31).contains(&b) {
            return Err(Error::Config(format!("RHR block bits must be in 1..=31, got {b}")));
        }
        if d == 0 || d >= 1 << 62 {
            return Err(Error::Config(format!("RHR dictionary size {d} unsupported")));
        }
        let block = 1u64 << (b - 1);
        Ok(RhrParams { d, epsilon, b, block, l: hadamard_exponent(d / block + 2) })
    }

    pub fn alphabet(&self) -> u32 {
        1 << self.b
    }

    pub fn rr(&self) -> RandomizedResponse {
        RandomizedResponse::new(self.epsilon, self.alphabet()).expect("validated at construction")
    }

    /// Symbol of `x` under column `j`: sign bit times block plus residue.
    #[inline]
    fn symbol(&self, x: u64, j: u64) -> u32 {
        let sigma = (hadamard_entry(x / self.block + 1, j) < 0) as u64;
        (sigma * self.block + x % self.block) as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RhrReport {
    pub j: u64,
    pub z: u32,
}

#[inline]
fn rhr_encode_raw<R: Rng + ?Sized>(x: u64, p: &RhrParams, rr: &RandomizedResponse, rng: &mut R) -> RhrReport {
    let j = rng.random_range(0..1u64 << p.l);
    RhrReport { j, z: rr.perturb(p.symbol(x, j), rng) }
}

pub fn rhr_encode<R: Rng + ?Sized>(x: u64, params: &RhrParams, rng: &mut R) -> Result<RhrReport> {
    check_value(x, params.d)?;
    Ok(rhr_encode_raw(x, params, &params.rr(), rng))
}

pub fn rhr_encode_all<R: Rng + ?Sized>(values: &[u64], params: &RhrParams, rng: &mut R) -> Result<Vec<RhrReport>> {
    let rr = params.rr();
    values
        .iter()
        .map(|&x| {
            check_value(x, params.d)?;
            Ok(rhr_encode_raw(x, params, &rr, rng))
        })
        .collect()
}

pub fn rhr_estimate(x: u64, reports: &[RhrReport], params: &RhrParams) -> Result<f64> {
    Ok(rhr_estimate_many(&[x], reports, params)?[0])
}

/// Difference between the decoded indicator of `x`'s symbol and of its
/// sign-flipped twin. Values sharing the residue cancel on average because
/// their rows agree on exactly half the columns.
pub fn rhr_estimate_many(x_set: &[u64], reports: &[RhrReport], params: &RhrParams) -> Result<Vec<f64>> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    for r in reports {
        if r.j >= 1 << params.l || r.z >= params.alphabet() {
            return Err(Error::Config(format!("malformed RHR report {r:?}")));
        }
    }
    for &x in x_set {
        check_value(x, params.d)?;
    }
    let rr = params.rr();
    let gain = (rr.hit() - rr.miss()) / reports.len() as f64;
    let block = params.block as u32;
    Ok(x_set
        .par_iter()
        .map(|&x| {
            let net: i64 = reports
                .iter()
                .map(|r| {
                    let matched = params.symbol(x, r.j);
                    let anti = matched ^ block;
                    (r.z == matched) as i64 - (r.z == anti) as i64
                })
                .sum();
            gain * net as f64
        })
        .collect())
}

/// Optimized local hashing is CMS with `m = round(1 + e^eps)`.
pub fn olh_params(epsilon: f64, d: u64) -> Result<EstimatorParams> {
    check_epsilon(epsilon)?;
    let m = (1.0 + epsilon.exp()).round();
    if m > u32::MAX as f64 {
        return Err(Error::Config(format!("epsilon {epsilon} gives an unrepresentable range")));
    }
    EstimatorParams::new(epsilon, d, RangeMode::Fixed(m as u32), 1.0)
}

/// Range of a single CMS equivalent to hashing into `m1` and then `m2` buckets.
pub fn recursive_equivalent_m(m1: f64, m2: f64) -> f64 {
    m1 * m2 / (m1 + m2 - 1.0)
}

pub const CMS_HE_DEFAULT_M1: u32 = 1024;

/// CMS whose per-client mechanism is HE over the stage-one bucket.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmsHeParams {
    pub d: u64,
    pub epsilon: f64,
    pub m1: u32,
    pub field: FieldSpec,
    /// Effective range of stage one.
    pub m1_prime: f64,
    pub l: u32,
}

impl CmsHeParams {
    pub fn new(d: u64, epsilon: f64, m1: u32) -> Result<Self> {
        check_epsilon(epsilon)?;
        if d == 0 {
            return Err(Error::Config("dictionary size must be at least 1".into()));
        }
        Self::with_field(d, epsilon, m1, finite_field_size(d, m1.max(2)))
    }

    pub fn with_field(d: u64, epsilon: f64, m1: u32, field: FieldSpec) -> Result<Self> {
        check_epsilon(epsilon)?;
        if field.size() < d as u128 {
            return Err(Error::Config(format!("field of size {} cannot hold d = {d}", field.size())));
        }
        let m1_prime = api_stats(field, m1)?.m_prime;
        Ok(CmsHeParams { d, epsilon, m1, field, m1_prime, l: hadamard_exponent(m1 as u64 + 1) })
    }

    /// `2 m1' / (m1' + 1)`.
    pub fn m_eff(&self) -> f64 {
        recursive_equivalent_m(self.m1_prime, 2.0)
    }

    fn he(&self) -> HeParams {
        HeParams { d: self.m1 as u64, epsilon: self.epsilon, l: self.l }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CmsHeReport {
    pub a0: u64,
    pub a1: u64,
    pub j: u64,
    pub z: i8,
}

#[inline]
fn cms_he_encode_raw<R: Rng + ?Sized>(x: u64, p: &CmsHeParams, keep: f64, rng: &mut R) -> CmsHeReport {
    let a0 = sample_element(p.field, rng);
    let a1 = sample_element(p.field, rng);
    let bucket = HashFn { a0, a1, field: p.field, m: p.m1 }.eval_unchecked(x) as u64;
    let HeReport { j, z } = he_encode_raw(bucket + 1, p.l, keep, rng);
    CmsHeReport { a0, a1, j, z }
}

pub fn cms_he_encode<R: Rng + ?Sized>(x: u64, params: &CmsHeParams, rng: &mut R) -> Result<CmsHeReport> {
    check_value(x, params.d)?;
    Ok(cms_he_encode_raw(x, params, params.he().keep(), rng))
}

pub fn cms_he_encode_all<R: Rng + ?Sized>(values: &[u64], params: &CmsHeParams, rng: &mut R) -> Result<Vec<CmsHeReport>> {
    let keep = params.he().keep();
    values
        .iter()
        .map(|&x| {
            check_value(x, params.d)?;
            Ok(cms_he_encode_raw(x, params, keep, rng))
        })
        .collect()
}

/// Count-mean sketch decode with range `m_eff`. Each report's HE sign gives
/// an unbiased `2 y - 1` for the stage-two collision indicator `y`.
pub fn cms_he_estimate(x_set: &[u64], reports: &[CmsHeReport], params: &CmsHeParams) -> Result<Vec<f64>> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    for r in reports {
        params.field.check(r.a0)?;
        params.field.check(r.a1)?;
        if r.j >= 1 << params.l || !(r.z == 1 || r.z == -1) {
            return Err(Error::Config(format!("malformed CMS+HE report {r:?}")));
        }
    }
    for &x in x_set {
        check_value(x, params.d)?;
    }
    let n = reports.len() as f64;
    let gain = params.he().gain();
    let m = params.m_eff();
    Ok(x_set
        .par_iter()
        .map(|&x| {
            let signed: i64 = reports
                .iter()
                .map(|r| {
                    let h = HashFn { a0: r.a0, a1: r.a1, field: params.field, m: params.m1 };
                    let row = h.eval_unchecked(x) as u64 + 1;
                    (r.z * hadamard_entry(row, r.j)) as i64
                })
                .sum();
            // sum of y = (n + gain * signed) / 2
            let y_sum = 0.5 * (n + gain * signed as f64);
            m / (n * (m - 1.0)) * y_sum - 1.0 / (m - 1.0)
        })
        .collect())
}

/// One row of the baseline report CSV `alg,j,z,a0,a1`; `a0`, `a1` are set for CMSHE only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineReport {
    He(HeReport),
    Rhr(RhrReport),
    CmsHe(CmsHeReport),
}

pub const BASELINE_CSV_HEADER: [&str; 5] = ["alg", "j", "z", "a0", "a1"];

pub fn write_baseline_csv<W: Write>(w: W, reports: &[BaselineReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Parse { line: 0, msg: e.to_string() };
    out.write_record(BASELINE_CSV_HEADER).map_err(err)?;
    for r in reports {
        let row = match *r {
            BaselineReport::He(h) => ["HE".into(), h.j.to_string(), h.z.to_string(), String::new(), String::new()],
            BaselineReport::Rhr(h) => ["RHR".into(), h.j.to_string(), h.z.to_string(), String::new(), String::new()],
            BaselineReport::CmsHe(h) => [
                "CMSHE".into(),
                h.j.to_string(),
                h.z.to_string(),
                h.a0.to_string(),
                h.a1.to_string(),
            ],
        };
        out.write_record(&row).map_err(err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_baseline_csv<R: Read>(r: R) -> Result<Vec<BaselineReport>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let bad = |what: &str| Error::Parse { line, msg: format!("bad {what}") };
        let get = |k: usize| rec.get(k).ok_or_else(|| bad(BASELINE_CSV_HEADER[k]));
        let j: u64 = get(1)?.parse().map_err(|_| bad("j"))?;
        let report = match get(0)? {
            "HE" => BaselineReport::He(HeReport { j, z: get(2)?.parse().map_err(|_| bad("z"))? }),
            "RHR" => BaselineReport::Rhr(RhrReport { j, z: get(2)?.parse().map_err(|_| bad("z"))? }),
            "CMSHE" => BaselineReport::CmsHe(CmsHeReport {
                j,
                z: get(2)?.parse().map_err(|_| bad("z"))?,
                a0: get(3)?.parse().map_err(|_| bad("a0"))?,
                a1: get(4)?.parse().map_err(|_| bad("a1"))?,
            }),
            other => return Err(Error::UnknownAlgorithm(other.to_string())),
        };
        out.push(report);
    }
    Ok(out)
}
