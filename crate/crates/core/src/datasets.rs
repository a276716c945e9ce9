//! Synthetic and real datasets, plus a small text format for persisting them.
//!
//! File format: a header line `d=<uint> n=<uint> name=<token>` followed by one
//! value per line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub d: u64,
    pub values: Vec<u64>,
    pub name: String,
}

impl Dataset {
    pub fn new(d: u64, values: Vec<u64>, name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::Config(format!("dataset name {name:?} must be a single token")));
        }
        if let Some(&v) = values.iter().find(|&&v| v >= d) {
            return Err(Error::OutOfDictionary { value: v, d });
        }
        Ok(Dataset { d, values, name })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn counts(&self) -> HashMap<u64, u64> {
        let mut c = HashMap::new();
        for &v in &self.values {
            *c.entry(v).or_insert(0) += 1;
        }
        c
    }

    /// Frequency `count / n` of each requested value.
    pub fn frequencies(&self, x_set: &[u64]) -> Vec<f64> {
        let counts = self.counts();
        let n = self.n() as f64;
        x_set
            .iter()
            .map(|x| counts.get(x).copied().unwrap_or(0) as f64 / n)
            .collect()
    }

    /// The `k` most frequent values, ties broken by smaller value.
    pub fn top_k(&self, k: usize) -> Vec<u64> {
        let mut ranked: Vec<(u64, u64)> = self.counts().into_iter().collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut out: Vec<u64> = ranked.iter().take(k).map(|&(v, _)| v).collect();
        // pad with unseen values so |x_set| = k whenever k <= d
        let mut next = 0u64;
        while out.len() < k && (out.len() as u64) < self.d {
            if !out.contains(&next) && !ranked.iter().any(|&(v, _)| v == next) {
                out.push(next);
            }
            next += 1;
        }
        out
    }

    pub fn max_frequency(&self) -> f64 {
        self.counts().values().copied().max().unwrap_or(0) as f64 / self.n() as f64
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "d={} n={} name={}", self.d, self.n(), self.name)?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })??;
        let (d, n, name) = parse_header(&header)?;
        let mut values = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let v = line.trim().parse::<u64>().map_err(|e| Error::Parse {
                line: i + 2,
                msg: format!("{line:?}: {e}"),
            })?;
            values.push(v);
        }
        if values.len() != n {
            return Err(Error::Parse {
                line: values.len() + 1,
                msg: format!("header promises {n} values, found {}", values.len()),
            });
        }
        Dataset::new(d, values, name)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn parse_header(line: &str) -> Result<(u64, usize, String)> {
    let bad = |msg: String| Error::Parse { line: 1, msg };
    let mut d = None;
    let mut n = None;
    let mut name = None;
    for tok in line.split_whitespace() {
        match tok.split_once('=') {
            Some(("d", v)) => d = Some(v.parse::<u64>().map_err(|e| bad(format!("d: {e}")))?),
            Some(("n", v)) => n = Some(v.parse::<usize>().map_err(|e| bad(format!("n: {e}")))?),
            Some(("name", v)) => name = Some(v.to_string()),
            _ => return Err(bad(format!("unexpected header token {tok:?}"))),
        }
    }
    match (d, n, name) {
        (Some(d), Some(n), Some(name)) => Ok((d, n, name)),
        _ => Err(bad(format!("header must be `d=<uint> n=<uint> name=<token>`, got {line:?}"))),
    }
}

/// Spacing between consecutive ranks of an aligned Zipf dataset. Every value
/// is a multiple of 16, so all share the same residue mod `2^(b-1)` for `b <= 5`.
pub const ALIGN: u64 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZipfSpec {
    pub d: u64,
    pub n: usize,
    /// Number of ranks; defaults to `d`, or `d / 16` when aligned.
    pub ranks: Option<u64>,
    pub mod_aligned: bool,
}

/// `n` draws with `Pr(rank r) ∝ 1/r^2`.
pub fn gen_zipf(spec: &ZipfSpec, seed: u64) -> Result<Dataset> {
    if spec.d == 0 || spec.n == 0 {
        return Err(Error::Config("zipf needs d >= 1 and n >= 1".into()));
    }
    let step = if spec.mod_aligned { ALIGN } else { 1 };
    let ranks = spec.ranks.unwrap_or(spec.d / step);
    if ranks == 0 || ranks.saturating_mul(step) > spec.d {
        return Err(Error::Config(format!(
            "zipf with {ranks} ranks spaced by {step} does not fit in d = {}",
            spec.d
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Zipf::new(ranks as f64, 2.0).map_err(|e| Error::Config(format!("zipf: {e}")))?;
    let values = (0..spec.n)
        .map(|_| (dist.sample(&mut rng) as u64 - 1) * step)
        .collect();
    let name = if spec.mod_aligned { "zipf-aligned" } else { "zipf" };
    Dataset::new(spec.d, values, name)
}

pub const GAUSSIAN_D: u64 = 10_001;
pub const GAUSSIAN_SD: f64 = 50.0;

/// Rounded `N(mu, 50^2)` clamped to `[0, 10000]`, with `mu` an integer drawn
/// uniformly from `[1000, 9000]`.
pub fn gen_gaussian(n: usize, seed: u64) -> Result<Dataset> {
    gen_gaussian_with_sd(n, GAUSSIAN_SD, seed)
}

pub fn gen_gaussian_with_sd(n: usize, sd: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("gaussian needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = rng.random_range(1000..=9000u64) as f64;
    let dist = Normal::new(mu, sd).map_err(|e| Error::Config(format!("normal: {e}")))?;
    let hi = (GAUSSIAN_D - 1) as f64;
    let values = (0..n)
        .map(|_| dist.sample(&mut rng).round().clamp(0.0, hi) as u64)
        .collect();
    Dataset::new(GAUSSIAN_D, values, "gaussian")
}

/// Transactions of whitespace-separated item IDs, one per line. Each item
/// occurrence is kept with probability `rate`; IDs are renumbered densely in
/// order of first appearance and `d` counts distinct items in the whole input.
pub fn ingest_kosarak_reader<R: BufRead>(r: R, rate: f64, seed: u64) -> Result<Dataset> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::Config(format!("subsample rate must be in (0, 1], got {rate}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: HashMap<u64, u64> = HashMap::new();
    let mut values = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        for tok in line.split_whitespace() {
            let item: u64 = tok.parse().map_err(|e| Error::Parse {
                line: i + 1,
                msg: format!("item {tok:?}: {e}"),
            })?;
            let next = ids.len() as u64;
            let id = *ids.entry(item).or_insert(next);
            if rate >= 1.0 || rng.random::<f64>() < rate {
                values.push(id);
            }
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(ids.len() as u64, values, "kosarak")
}

pub fn ingest_kosarak(path: impl AsRef<Path>, rate: f64, seed: u64) -> Result<Dataset> {
    ingest_kosarak_reader(BufReader::new(File::open(path)?), rate, seed)
}
