//! Finite fields used by the affine hashing family.
//!
//! Two kinds are supported: prime fields `GF(p)` with `p <= 2^64 - 59`, and
//! binary fields `GF(2^l)` for `l <= 64`. Elements are plain `u64` values;
//! every public entry point checks that its operands lie inside the field.

use crate::error::{Error, Result};

/// Largest prime that fits in a `u64`.
pub const PRIME: u64 = u64::MAX - 58;

/// Low bits of the reduction polynomial for `GF(2^l)`, index `l - 2`.
/// The leading `x^l` term is implicit. Each entry is the lowest-weight
/// irreducible polynomial of its degree (trinomial when one exists).
const BINARY_POLYS: [u64; 63] = [
    0x3, 0x3, 0x3, 0x5, 0x3, 0x3, 0x1b, 0x3, 0x9, 0x5, // 2..=11
    0x9, 0x1b, 0x21, 0x3, 0x2b, 0x9, 0x9, 0x27, 0x9, 0x5, // 12..=21
    0x3, 0x21, 0x1b, 0x9, 0x1b, 0x27, 0x3, 0x5, 0x3, 0x9, // 22..=31
    0x8d, 0x401, 0x81, 0x5, 0x201, 0x53, 0x63, 0x11, 0x39, 0x9, // 32..=41
    0x81, 0x59, 0x21, 0x1b, 0x3, 0x21, 0x2d, 0x201, 0x1d, 0x4b, // 42..=51
    0x9, 0x47, 0x201, 0x81, 0x95, 0x11, 0x80001, 0x95, 0x3, 0x27, // 52..=61
    0x20000001, 0x3, 0x1b, // 62..=64
];

pub type FieldElement = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldSpec {
    Prime { modulus: u64 },
    /// `GF(2^degree)` reduced by `x^degree + poly`.
    Binary { degree: u32, poly: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Mul,
}

impl FieldSpec {
    /// The field `GF(2^64 - 59)`.
    pub const fn default_prime() -> Self {
        FieldSpec::Prime { modulus: PRIME }
    }

    pub fn prime(modulus: u64) -> Result<Self> {
        if modulus > PRIME || !is_prime(modulus) {
            return Err(Error::NotPrime(modulus));
        }
        Ok(FieldSpec::Prime { modulus })
    }

    /// `GF(2^degree)` with the built-in reduction polynomial.
    pub fn binary(degree: u32) -> Result<Self> {
        if !(2..=64).contains(&degree) {
            return Err(Error::Config(format!(
                "binary field degree must be in 2..=64, got {degree}"
            )));
        }
        Ok(FieldSpec::Binary {
            degree,
            poly: BINARY_POLYS[degree as usize - 2],
        })
    }

    /// Number of elements. `2^64` is representable, hence `u128`.
    pub fn size(&self) -> u128 {
        match *self {
            FieldSpec::Prime { modulus } => modulus as u128,
            FieldSpec::Binary { degree, .. } => 1u128 << degree,
        }
    }

    pub fn contains(&self, v: u64) -> bool {
        (v as u128) < self.size()
    }

    pub fn check(&self, v: u64) -> Result<FieldElement> {
        if self.contains(v) {
            Ok(v)
        } else {
            Err(Error::OutOfField {
                value: v,
                size: self.size(),
            })
        }
    }

    pub fn add(&self, a: u64, b: u64) -> Result<FieldElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add_reduced(a, b))
    }

    pub fn mul(&self, a: u64, b: u64) -> Result<FieldElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul_reduced(a, b))
    }

    /// Addition for operands already known to be in range.
    #[inline]
    pub(crate) fn add_reduced(&self, a: u64, b: u64) -> u64 {
        match *self {
            FieldSpec::Prime { modulus } => {
                let s = a as u128 + b as u128;
                if s >= modulus as u128 {
                    (s - modulus as u128) as u64
                } else {
                    s as u64
                }
            }
            FieldSpec::Binary { .. } => a ^ b,
        }
    }

    /// Multiplication for operands already known to be in range.
    #[inline]
    pub(crate) fn mul_reduced(&self, a: u64, b: u64) -> u64 {
        match *self {
            FieldSpec::Prime { modulus: PRIME } => mul_mod_prime(a, b),
            FieldSpec::Prime { modulus } => ((a as u128 * b as u128) % modulus as u128) as u64,
            FieldSpec::Binary { degree, poly } => gf2_mul(a, b, degree, poly),
        }
    }
}

/// Checked field operation.
pub fn ff_arith(op: FieldOp, a: u64, b: u64, spec: FieldSpec) -> Result<FieldElement> {
    match op {
        FieldOp::Add => spec.add(a, b),
        FieldOp::Mul => spec.mul(a, b),
    }
}

/// Smallest field able to host `max(d + 1, 5m)` distinct inputs.
pub fn finite_field_size(d: u64, m: u32) -> FieldSpec {
    let v = (d as u128 + 1).max(5 * m as u128);
    if v <= PRIME as u128 {
        FieldSpec::default_prime()
    } else {
        let degree = ceil_log2_u128(v);
        FieldSpec::binary(degree).expect("v <= 2^64 + 1 keeps the degree within 64")
    }
}

/// `ceil(log2 v)` for `v >= 1`.
pub(crate) fn ceil_log2_u128(v: u128) -> u32 {
    if v <= 1 {
        0
    } else {
        128 - (v - 1).leading_zeros()
    }
}

// 2^64 = 59 (mod PRIME), so a 128-bit product folds twice into range.
#[inline]
fn mul_mod_prime(a: u64, b: u64) -> u64 {
    const C: u128 = 59;
    let t = a as u128 * b as u128;
    let t = (t >> 64) * C + (t as u64 as u128);
    let t = (t >> 64) * C + (t as u64 as u128);
    let mut r = t;
    while r >= PRIME as u128 {
        r -= PRIME as u128;
    }
    r as u64
}

#[inline]
fn clmul(a: u64, b: u64) -> u128 {
    // 4-bit windows: table[i] is the carry-less product a * i.
    let mut table = [0u128; 16];
    for i in 1..16 {
        table[i] = (table[i >> 1] << 1) ^ if i & 1 == 1 { a as u128 } else { 0 };
    }
    let mut acc = 0u128;
    let nibbles = (67 - b.leading_zeros()) / 4;
    for nib in (0..nibbles).rev() {
        acc = (acc << 4) ^ table[((b >> (4 * nib)) & 15) as usize];
    }
    acc
}

#[inline]
fn gf2_mul(a: u64, b: u64, degree: u32, poly: u64) -> u64 {
    // x^degree = poly, and poly has at most five terms, so folding the high
    // half back is a handful of shifts. Each fold lowers the degree.
    let mask = (1u128 << degree) - 1;
    let mut p = clmul(a, b);
    loop {
        let hi = p >> degree;
        if hi == 0 {
            return p as u64;
        }
        p &= mask;
        let mut r = poly;
        while r != 0 {
            p ^= hi << r.trailing_zeros();
            r &= r - 1;
        }
    }
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the first twelve prime bases cover all `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
