//! Hurwitz class numbers and weighted class numbers of imaginary
//! quadratic orders, by enumeration of reduced binary quadratic forms.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use thiserror::Error;

use crate::arith::{isqrt, ExactRational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassNumberError {
    #[error("discriminant {0} is not negative")]
    NonNegative(i64),
    #[error("{0} is not a discriminant (must be 0 or 1 mod 4)")]
    NotDiscriminant(i64),
}

/// The binary quadratic form `a x² + b xy + c y²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        let Self { a, b, c } = *self;
        a > 0
            && self.discriminant() < 0
            && b.abs() <= a
            && a <= c
            && (b >= 0 || (b.abs() != a && a != c))
    }

    pub fn is_primitive(&self) -> bool {
        num_integer::gcd(num_integer::gcd(self.a, self.b), self.c) == 1
    }

    /// Half the size of the automorphism group in SL₂(ℤ), i.e. the weight
    /// this form carries in the Hurwitz count.
    pub fn hurwitz_weight(&self) -> ExactRational {
        if self.a == self.b && self.b == self.c {
            ExactRational::new(1, 3)
        } else if self.b == 0 && self.a == self.c {
            ExactRational::new(1, 2)
        } else {
            ExactRational::from_integer(1)
        }
    }
}

fn is_discriminant(d: i64) -> bool {
    matches!(d.rem_euclid(4), 0 | 1)
}

/// Every reduced positive definite form of discriminant `d` (primitive or
/// not), sorted by `(a, b, c)`.
pub fn reduced_forms(d: i64) -> Result<Vec<QuadForm>, ClassNumberError> {
    if d >= 0 {
        return Err(ClassNumberError::NonNegative(d));
    }
    if !is_discriminant(d) {
        return Err(ClassNumberError::NotDiscriminant(d));
    }
    let n = d.unsigned_abs();
    let a_max = isqrt((n / 3) as u128) as i64;
    let mut forms = Vec::new();
    for a in 1..=a_max {
        // b has the parity of d; skip b = -a, it is equivalent to b = a.
        let start = if (a + 1 + d).rem_euclid(2) == 0 { -a + 1 } else { -a + 2 };
        let mut b = start;
        while b <= a {
            let num = b * b - d;
            if num % (4 * a) == 0 {
                let c = num / (4 * a);
                if c >= a && !(b < 0 && c == a) {
                    forms.push(QuadForm { a, b, c });
                }
            }
            b += 2;
        }
    }
    Ok(forms)
}

fn unit_index(d: i64) -> i128 {
    match d {
        -3 => 3,
        -4 => 2,
        _ => 1,
    }
}

/// Class number of the order of discriminant `d` divided by the unit index
/// `[O(d)^× : ℤ^×]`; zero when `d ≡ 2, 3 (mod 4)`.
pub fn h_weighted(d: i64) -> Result<ExactRational, ClassNumberError> {
    if d >= 0 {
        return Err(ClassNumberError::NonNegative(d));
    }
    if !is_discriminant(d) {
        return Ok(ExactRational::from_integer(0));
    }
    let primitive = reduced_forms(d)?.iter().filter(|f| f.is_primitive()).count() as i128;
    Ok(ExactRational::new(primitive, unit_index(d)))
}

/// Hurwitz class number `H(n)`, with `H(0) = -1/12`.
pub fn hurwitz(n: u64) -> ExactRational {
    if n == 0 {
        return ExactRational::new(-1, 12);
    }
    if matches!(n % 4, 1 | 2) {
        return ExactRational::from_integer(0);
    }
    reduced_forms(-(n as i64))
        .expect("n ≡ 0, 3 (mod 4) is a discriminant")
        .iter()
        .map(QuadForm::hurwitz_weight)
        .sum()
}

/// Memo table for `H(n)` and `h_w(D)`, safe for concurrent use.
///
/// Inserts stop once `capacity` entries are stored; lookups past that point
/// are computed on the fly.
#[derive(Debug)]
pub struct ClassNumberCache {
    capacity: usize,
    hurwitz: RwLock<HashMap<u64, ExactRational>>,
    weighted: RwLock<HashMap<i64, ExactRational>>,
}

pub const DEFAULT_CACHE_CAPACITY: usize = 10_000_000;

impl Default for ClassNumberCache {
    fn default() -> Self {
        Self::with_capacity(DEFAULT_CACHE_CAPACITY)
    }
}

impl ClassNumberCache {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            capacity,
            hurwitz: RwLock::default(),
            weighted: RwLock::default(),
        }
    }

    /// Process-wide shared table.
    pub fn global() -> &'static ClassNumberCache {
        static GLOBAL: OnceLock<ClassNumberCache> = OnceLock::new();
        GLOBAL.get_or_init(ClassNumberCache::default)
    }

    pub fn hurwitz(&self, n: u64) -> ExactRational {
        if let Some(v) = self.hurwitz.read().unwrap().get(&n) {
            return *v;
        }
        let v = hurwitz(n);
        let mut table = self.hurwitz.write().unwrap();
        if table.len() < self.capacity {
            table.insert(n, v);
        }
        v
    }

    pub fn h_weighted(&self, d: i64) -> Result<ExactRational, ClassNumberError> {
        if let Some(v) = self.weighted.read().unwrap().get(&d) {
            return Ok(*v);
        }
        let v = h_weighted(d)?;
        let mut table = self.weighted.write().unwrap();
        if table.len() < self.capacity {
            table.insert(d, v);
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.hurwitz.read().unwrap().len() + self.weighted.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `Σ_{f² | n} h_w(-n/f²)`, the independent route to `H(n)`.
pub fn hurwitz_by_divisor_sum(n: u64) -> ExactRational {
    let mut total = ExactRational::from_integer(0);
    let mut f = 1u64;
    while f * f <= n {
        if n.is_multiple_of(f * f) {
            total += h_weighted(-((n / (f * f)) as i64)).expect("negative argument");
        }
        f += 1;
    }
    total
}
