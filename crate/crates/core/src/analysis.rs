//! Loss metrics over repeated trials and the closed-form comparison tables.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::cms::{EstimatorParams, PACKED_REPORT_BYTES};
use crate::error::{Error, Result};
use crate::field::ceil_log2_u128;
use crate::hashing::family_bits;

/// One trial of one algorithm at one privacy level. The three vectors are
/// parallel: `estimates[i]` and `truth[i]` belong to `x_set[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialMetrics {
    pub algorithm: String,
    pub epsilon: f64,
    pub trial: usize,
    pub x_set: Vec<u64>,
    pub estimates: Vec<f64>,
    pub truth: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmpiricalLosses {
    /// Largest per-value mean squared error.
    pub worst_mse: f64,
    pub l1: f64,
    pub l2: f64,
}

pub fn empirical_metrics(trials: &[TrialMetrics]) -> Result<EmpiricalLosses> {
    let first = trials.first().ok_or_else(|| Error::Inconsistent("no trials".into()))?;
    let k = first.x_set.len();
    let mut sq = vec![0.0; k];
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for t in trials {
        if t.x_set != first.x_set || t.estimates.len() != k {
            return Err(Error::Inconsistent(format!("trial {} evaluates a different x_set", t.trial)));
        }
        if t.truth != first.truth {
            return Err(Error::Inconsistent(format!("trial {} disagrees on true frequencies", t.trial)));
        }
        for (i, (&e, &f)) in t.estimates.iter().zip(&t.truth).enumerate() {
            let err = e - f;
            sq[i] += err * err;
            l1 += err.abs();
            l2 += err * err;
        }
    }
    let t = trials.len() as f64;
    Ok(EmpiricalLosses {
        worst_mse: sq.iter().fold(0.0f64, |a, &s| a.max(s / t)),
        l1: l1 / t,
        l2: l2 / t,
    })
}

/// High-probability ceiling on the empirical worst-case MSE of an unbiased
/// estimator with per-value variance at most `v`.
pub fn mse_upper_bound(v: f64, t: usize, x_count: usize) -> f64 {
    let t = t as f64;
    let lg = (20.0 * x_count as f64).ln();
    (1.0 + 2.0 / t * ((t * lg).sqrt() + lg)) * v
}

pub const SUMMARY_CSV_HEADER: [&str; 9] = [
    "algorithm",
    "epsilon",
    "worst_mse",
    "l1",
    "l2",
    "theory_mse",
    "theory_l1_upper",
    "theory_l2",
    "mse_upper_bound",
];

#[derive(Clone, Debug, PartialEq)]
pub struct LossSummary {
    pub algorithm: String,
    pub epsilon: f64,
    pub empirical: EmpiricalLosses,
    pub theory_mse: f64,
    pub theory_l1_upper: f64,
    pub theory_l2: f64,
    pub mse_upper_bound: f64,
}

impl LossSummary {
    fn record(&self) -> [String; 9] {
        [
            self.algorithm.clone(),
            self.epsilon.to_string(),
            self.empirical.worst_mse.to_string(),
            self.empirical.l1.to_string(),
            self.empirical.l2.to_string(),
            self.theory_mse.to_string(),
            self.theory_l1_upper.to_string(),
            self.theory_l2.to_string(),
            self.mse_upper_bound.to_string(),
        ]
    }
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[LossSummary]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record(r.record()).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub const TRIALS_CSV_HEADER: [&str; 6] = ["algorithm", "epsilon", "trial", "x", "estimate", "truth"];

pub fn write_trials_csv<W: Write>(w: W, trials: &[TrialMetrics]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRIALS_CSV_HEADER).map_err(csv_err)?;
    for t in trials {
        for i in 0..t.x_set.len() {
            out.write_record([
                t.algorithm.clone(),
                t.epsilon.to_string(),
                t.trial.to_string(),
                t.x_set[i].to_string(),
                t.estimates[i].to_string(),
                t.truth[i].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_trials_csv`]. Rows are regrouped by
/// `(algorithm, epsilon, trial)` in order of first appearance.
pub fn read_trials_csv<R: Read>(r: R) -> Result<Vec<TrialMetrics>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().ne(TRIALS_CSV_HEADER) {
        return Err(Error::Parse { line: 1, msg: format!("expected header {}", TRIALS_CSV_HEADER.join(",")) });
    }
    let mut out: Vec<TrialMetrics> = Vec::new();
    let mut index: BTreeMap<(String, u64, usize), usize> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |col: &str, e: &dyn fmt::Display| Error::Parse { line, msg: format!("{col}: {e}") };
        let epsilon: f64 = rec[1].parse().map_err(|e| bad("epsilon", &e))?;
        let trial: usize = rec[2].parse().map_err(|e| bad("trial", &e))?;
        let x: u64 = rec[3].parse().map_err(|e| bad("x", &e))?;
        let est: f64 = rec[4].parse().map_err(|e| bad("estimate", &e))?;
        let truth: f64 = rec[5].parse().map_err(|e| bad("truth", &e))?;
        let key = (rec[0].to_string(), epsilon.to_bits(), trial);
        let slot = *index.entry(key).or_insert_with(|| {
            out.push(TrialMetrics {
                algorithm: rec[0].to_string(),
                epsilon,
                trial,
                x_set: Vec::new(),
                estimates: Vec::new(),
                truth: Vec::new(),
            });
            out.len() - 1
        });
        let t = &mut out[slot];
        t.x_set.push(x);
        t.estimates.push(est);
        t.truth.push(truth);
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, msg: e.to_string() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TableAlgorithm {
    He,
    Rhr,
    Olh,
    OcmsMse,
    OcmsL,
    CmsHe,
    Ss,
    ARappor,
    Rappor,
}

impl TableAlgorithm {
    pub const ALL: [TableAlgorithm; 9] = [
        Self::He,
        Self::Rhr,
        Self::Olh,
        Self::OcmsMse,
        Self::OcmsL,
        Self::CmsHe,
        Self::Ss,
        Self::ARappor,
        Self::Rappor,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::He => "HE",
            Self::Rhr => "RHR",
            Self::Olh => "OLH",
            Self::OcmsMse => "OCMS_MSE",
            Self::OcmsL => "OCMS_L",
            Self::CmsHe => "CMSHE",
            Self::Ss => "SS",
            Self::ARappor => "aRP",
            Self::Rappor => "RP",
        }
    }
}

impl fmt::Display for TableAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TableAlgorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// How a table cell relates to the true loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Exact,
    Upper,
    Lower,
    /// Asymptotic order, printed with unit constant.
    Order,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryCell {
    pub value: f64,
    pub kind: BoundKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryRow {
    pub algorithm: TableAlgorithm,
    pub l1: TheoryCell,
    pub l2: TheoryCell,
    pub mse: TheoryCell,
    /// The closed forms assume `d >> e^eps`; set when `d < 10 e^eps`.
    pub small_d: bool,
}

/// Closed-form precision of each algorithm, scaled to `n` clients:
/// `l1` by `1/sqrt(n)`, `l2` and worst-case MSE by `1/n`.
pub fn theory_table(algorithm: TableAlgorithm, d: f64, epsilon: f64, n: f64) -> TheoryRow {
    use BoundKind::*;
    let e = epsilon.exp();
    let em1 = epsilon.exp_m1();
    let h = (epsilon / 2.0).exp();
    let hm1 = (epsilon / 2.0).exp_m1();
    let sn = n.sqrt();
    let cell = |value: f64, kind| TheoryCell { value, kind };

    let he_l1 = d * (e + 1.0) / em1 / sn;
    let he_l2 = d * ((e + 1.0) / em1).powi(2) / n;
    let he_mse = ((e + 1.0) / em1).powi(2) / n;
    let opt_l1 = 2.0 * d * h / em1 / sn;
    let opt_l2 = 4.0 * d * e / (em1 * em1) / n;
    let opt_mse = h / (hm1 * hm1) / n;

    let (l1, l2, mse) = match algorithm {
        TableAlgorithm::He | TableAlgorithm::CmsHe => {
            (cell(he_l1, Exact), cell(he_l2, Exact), cell(he_mse, Exact))
        }
        TableAlgorithm::Rhr => {
            let g = epsilon.min(epsilon * epsilon);
            (cell(d / g.sqrt() / sn, Order), cell(d / g / n, Order), cell(he_mse, Lower))
        }
        TableAlgorithm::Olh | TableAlgorithm::Ss | TableAlgorithm::ARappor => {
            (cell(opt_l1, Upper), cell(opt_l2, Exact), cell(he_mse, Exact))
        }
        TableAlgorithm::OcmsMse | TableAlgorithm::OcmsL => {
            (cell(opt_l1, Upper), cell(opt_l2, Exact), cell(opt_mse, Exact))
        }
        TableAlgorithm::Rappor => (
            cell(d * (epsilon / 4.0).exp() / hm1 / sn, Upper),
            cell(d * h / (hm1 * hm1) / n, Exact),
            cell(opt_mse, Exact),
        ),
    };
    TheoryRow { algorithm, l1, l2, mse, small_d: d < 10.0 * e }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CostAlgorithm {
    He,
    Rhr,
    Olh,
    OcmsMse,
    OcmsL,
    Ss,
    Rappor,
    /// Fully random hashing into `m` buckets; the figure is a lower bound.
    OriginalCms { m: f64 },
}

impl CostAlgorithm {
    pub const TABLE: [CostAlgorithm; 7] =
        [Self::He, Self::Rhr, Self::Olh, Self::OcmsMse, Self::OcmsL, Self::Ss, Self::Rappor];

    pub fn label(self) -> &'static str {
        match self {
            Self::He => "HE",
            Self::Rhr => "RHR",
            Self::Olh => "OLH",
            Self::OcmsMse => "MSE-OCMS",
            Self::OcmsL => "L-OCMS",
            Self::Ss => "SS",
            Self::Rappor => "RAPPOR",
            Self::OriginalCms { .. } => "CMS",
        }
    }
}

/// Bits exchanged between the server and one client.
pub fn comm_cost(algorithm: CostAlgorithm, d: f64, epsilon: f64) -> f64 {
    let lg = d.log2();
    match algorithm {
        CostAlgorithm::He => lg,
        CostAlgorithm::Rhr => lg + epsilon,
        CostAlgorithm::Olh => d * epsilon,
        CostAlgorithm::OcmsMse => (2.0 * lg + epsilon / 2.0).max(1.5 * epsilon + 6.0),
        CostAlgorithm::OcmsL => (2.0 * lg + epsilon).max(3.0 * epsilon + 6.0),
        CostAlgorithm::Ss => d / (1.0 + epsilon.exp()),
        CostAlgorithm::Rappor => d,
        CostAlgorithm::OriginalCms { m } => d * m.log2(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReportBits {
    /// Hash identifier plus perturbed symbol.
    pub information: u32,
    /// Size of the fixed-width container actually used per report.
    pub packed: u32,
}

/// Compares the payload a report must carry with what the packed encoding spends.
pub fn audit_report_bits(packed: &[u8], params: &EstimatorParams) -> Result<ReportBits> {
    if packed.is_empty() {
        return Err(Error::EmptyReports);
    }
    if !packed.len().is_multiple_of(PACKED_REPORT_BYTES) {
        return Err(Error::Config(format!("{} bytes is not a whole number of reports", packed.len())));
    }
    Ok(ReportBits {
        information: family_bits(params.d, params.m) + ceil_log2_u128(params.m as u128),
        packed: (PACKED_REPORT_BYTES * 8) as u32,
    })
}
