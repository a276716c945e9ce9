//! The affine hashing family `h(x) = (a0 + a1 x) mod m` over a finite field.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{ceil_log2_u128, FieldElement, FieldSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HashFn {
    pub a0: FieldElement,
    pub a1: FieldElement,
    pub field: FieldSpec,
    pub m: u32,
}

impl HashFn {
    pub fn new(a0: u64, a1: u64, field: FieldSpec, m: u32) -> Result<Self> {
        check_range(field, m)?;
        field.check(a0)?;
        field.check(a1)?;
        Ok(HashFn { a0, a1, field, m })
    }

    pub fn eval(&self, x: u64) -> Result<u32> {
        self.field.check(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// Caller guarantees `x`, `a0`, `a1` lie in the field.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: u64) -> u32 {
        let y = self
            .field
            .add_reduced(self.a0, self.field.mul_reduced(self.a1, x));
        (y % self.m as u64) as u32
    }
}

fn check_range(field: FieldSpec, m: u32) -> Result<()> {
    if m < 2 {
        return Err(Error::Config(format!("hash range must be at least 2, got {m}")));
    }
    if m as u128 > field.size() {
        return Err(Error::Config(format!(
            "hash range {m} exceeds field size {}",
            field.size()
        )));
    }
    Ok(())
}

/// Uniform field element.
pub(crate) fn sample_element<R: Rng + ?Sized>(field: FieldSpec, rng: &mut R) -> u64 {
    match field {
        FieldSpec::Prime { modulus } => rng.random_range(0..modulus),
        FieldSpec::Binary { degree: 64, .. } => rng.random(),
        FieldSpec::Binary { degree, .. } => rng.random_range(0..1u64 << degree),
    }
}

/// Draws `a0` then `a1`, each uniform over the field.
pub fn sample_hash<R: Rng + ?Sized>(field: FieldSpec, m: u32, rng: &mut R) -> Result<HashFn> {
    check_range(field, m)?;
    let a0 = sample_element(field, rng);
    let a1 = sample_element(field, rng);
    Ok(HashFn { a0, a1, field, m })
}

pub fn hash_eval(h: &HashFn, x: u64) -> Result<u32> {
    h.eval(x)
}

/// Collision statistics of the family reduced mod `m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApiStats {
    pub q: u128,
    pub r: u128,
    pub c_bar: f64,
    pub m_prime: f64,
}

impl ApiStats {
    pub fn quality_ok(&self, tau: f64) -> bool {
        (2 * self.q + 1) as f64 > (1.0 / tau).sqrt()
    }
}

/// Average collision probability of two distinct inputs.
///
/// Written as `1/m + r(m-r)/(m s^2)` with `s = qm + r`, which equals
/// `((2q+1)r + mq^2)/(mq+r)^2` but stays accurate when `s` is near `2^64`.
pub fn api_stats(field: FieldSpec, m: u32) -> Result<ApiStats> {
    check_range(field, m)?;
    let size = field.size();
    let m128 = m as u128;
    let (q, r) = (size / m128, size % m128);
    let s = size as f64;
    let excess = (r * (m128 - r)) as f64 / (s * s);
    let mf = m as f64;
    Ok(ApiStats {
        q,
        r,
        c_bar: (1.0 + excess) / mf,
        m_prime: mf / (1.0 + excess),
    })
}

/// Bits needed to name one member of the family: `2 ceil(log2 max(d+1, 5m))`.
pub fn family_bits(d: u64, m: u32) -> u32 {
    2 * ceil_log2_u128((d as u128 + 1).max(5 * m as u128))
}

/// Random bits for pairwise-independent assignment of `n` clients to `k` functions.
pub fn assignment_bits(n: u64, k: u64) -> u32 {
    2 * ceil_log2_u128(n.max(k) as u128 + 1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdversarialDataset {
    pub values: Vec<u64>,
    /// Clients whose hash is injective around `target` and got a fallback value.
    pub failures: usize,
}

/// For each client's fixed hash, the smallest value other than `target`
/// that lands in the same bucket.
pub fn adversarial_dataset(target: u64, hashes: &[HashFn], d: u64) -> Result<AdversarialDataset> {
    if d < 2 {
        return Err(Error::Config("adversarial dataset needs d >= 2".into()));
    }
    if target >= d {
        return Err(Error::OutOfDictionary { value: target, d });
    }
    let fallback = if target == 0 { 1 } else { 0 };
    let mut values = Vec::with_capacity(hashes.len());
    let mut failures = 0;
    for h in hashes {
        check_range(h.field, h.m)?;
        let bucket = h.eval(target)?;
        let mut found = None;
        for v in (0..d).filter(|&v| v != target) {
            if h.eval(v)? == bucket {
                found = Some(v);
                break;
            }
        }
        values.push(found.unwrap_or_else(|| {
            failures += 1;
            fallback
        }));
    }
    Ok(AdversarialDataset { values, failures })
}
