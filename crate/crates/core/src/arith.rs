//! Exact integer kernels: factorization, the basic multiplicative
//! functions and the Kronecker symbol.
//!
//! Everything here is a pure function. The prime table used for trial
//! division is built once on first use and shared afterwards.

use std::sync::OnceLock;

use num_rational::Ratio;
use thiserror::Error;

/// Exact rational used for class numbers and trace intermediates.
///
/// `Ratio` keeps its value normalized (coprime parts, positive
/// denominator), which is the invariant the trace code relies on.
pub type ExactRational = Ratio<i128>;

/// Trial division limit for the cached prime table.
const SIEVE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("argument must be positive")]
    Zero,
    #[error("modulus of the Kronecker symbol must be nonzero")]
    ZeroModulus,
}

fn primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut composite = vec![false; SIEVE_LIMIT + 1];
        let mut out = Vec::with_capacity(80_000);
        for i in 2..=SIEVE_LIMIT {
            if composite[i] {
                continue;
            }
            out.push(i as u32);
            let mut j = i * i;
            while j <= SIEVE_LIMIT {
                composite[j] = true;
                j += i;
            }
        }
        out
    })
}

/// Prime factorization as `(prime, exponent)` pairs with strictly
/// increasing primes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Factorization(Vec<(u64, u32)>);

impl Factorization {
    pub fn as_slice(&self) -> &[(u64, u32)] {
        &self.0
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().map(|&(p, _)| p)
    }

    pub fn is_squarefree(&self) -> bool {
        self.0.iter().all(|&(_, e)| e == 1)
    }

    /// Multiplies the factors back together.
    pub fn value(&self) -> u128 {
        self.0
            .iter()
            .map(|&(p, e)| (p as u128).pow(e))
            .product()
    }

    /// All positive divisors, unordered.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.0 {
            let len = divs.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs
    }
}

impl IntoIterator for Factorization {
    type Item = (u64, u32);
    type IntoIter = std::vec::IntoIter<(u64, u32)>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

/// Factors `n` by trial division against the cached prime table, falling
/// back to odd trial divisors beyond the table for very large cofactors.
pub fn factor(n: u64) -> Result<Factorization, ArithError> {
    if n == 0 {
        return Err(ArithError::Zero);
    }
    let mut m = n;
    let mut out = Vec::new();
    let mut push = |m: &mut u64, p: u64| {
        let mut e = 0;
        while (*m).is_multiple_of(p) {
            *m /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    };
    for &p in primes() {
        let p = p as u64;
        if p * p > m {
            break;
        }
        push(&mut m, p);
    }
    let mut d = SIEVE_LIMIT as u64 + 1;
    while d.checked_mul(d).is_some_and(|sq| sq <= m) {
        push(&mut m, d);
        d += 2;
    }
    if m > 1 {
        out.push((m, 1));
    }
    Ok(Factorization(out))
}

/// Sum of the positive divisors of `n`.
pub fn sigma1(n: u64) -> Result<u128, ArithError> {
    Ok(factor(n)?
        .as_slice()
        .iter()
        .map(|&(p, e)| {
            let p = p as u128;
            (p.pow(e + 1) - 1) / (p - 1)
        })
        .product())
}

/// μ(n), ω(n), φ(n) and squarefreeness, computed from one factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Multiplicative {
    pub mobius: i8,
    pub omega: u32,
    pub phi: u64,
    pub squarefree: bool,
}

pub fn mobius_omega_phi(n: u64) -> Result<Multiplicative, ArithError> {
    let f = factor(n)?;
    let squarefree = f.is_squarefree();
    let omega = f.as_slice().len() as u32;
    let phi = f
        .as_slice()
        .iter()
        .map(|&(p, e)| (p - 1) * p.pow(e - 1))
        .product();
    let mobius = match (squarefree, omega % 2) {
        (false, _) => 0,
        (true, 0) => 1,
        (true, _) => -1,
    };
    Ok(Multiplicative {
        mobius,
        omega,
        phi,
        squarefree,
    })
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factor(n).map(|f| f.as_slice() == [(n, 1)]).unwrap_or(false)
}

/// Kronecker symbol `(a/m)`.
///
/// Conventions: `(a/-1)` is `-1` for negative `a`; `(a/2)` is `0` for even
/// `a`, `+1` for `a ≡ ±1 (mod 8)` and `-1` for `a ≡ ±3 (mod 8)`.
pub fn kronecker(a: i64, m: i64) -> Result<i8, ArithError> {
    if m == 0 {
        return Err(ArithError::ZeroModulus);
    }
    let mut result: i8 = 1;
    let mut m = m as i128;
    let a = a as i128;
    if m < 0 {
        m = -m;
        if a < 0 {
            result = -result;
        }
    }
    // Strip the factors of two from the modulus.
    let twos = m.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return Ok(0);
        }
        if twos % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            result = -result;
        }
        m >>= twos;
    }
    // Jacobi symbol with odd positive modulus.
    let mut a = a.rem_euclid(m);
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && matches!(m % 8, 3 | 5) {
            result = -result;
        }
        if a % 4 == 3 && m % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut m);
        a %= m;
    }
    Ok(if m == 1 { result } else { 0 })
}

/// Integer square root (floor).
pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

pub fn is_square(n: u64) -> bool {
    let r = isqrt(n as u128);
    r * r == n as u128
}

pub fn gcd(a: u64, b: u64) -> u64 {
    num_integer::gcd(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn factor_examples() {
        assert_eq!(factor(1).unwrap().as_slice(), &[]);
        assert_eq!(factor(14).unwrap().as_slice(), &[(2, 1), (7, 1)]);
        assert_eq!(factor(88).unwrap().as_slice(), &[(2, 3), (11, 1)]);
        assert_eq!(factor(0), Err(ArithError::Zero));
    }

    #[test]
    fn factor_beyond_sieve() {
        // 1_000_003 and 1_000_033 are both prime.
        let n = 1_000_003u64 * 1_000_033;
        assert_eq!(factor(n).unwrap().as_slice(), &[(1_000_003, 1), (1_000_033, 1)]);
        let big = (1u64 << 63) - 25; // prime
        assert_eq!(factor(big).unwrap().as_slice().len(), 1);
    }

    #[test]
    fn factor_round_trip_up_to_a_million() {
        for n in 1..=1_000_000u64 {
            let f = factor(n).unwrap();
            assert_eq!(f.value(), n as u128);
            assert!(f.as_slice().windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn sigma1_examples() {
        assert_eq!(sigma1(1).unwrap(), 1);
        assert_eq!(sigma1(2).unwrap(), 3);
        assert_eq!(sigma1(6).unwrap(), 12);
    }

    #[test]
    fn multiplicative_examples() {
        let m = mobius_omega_phi(11).unwrap();
        assert_eq!((m.mobius, m.omega, m.phi, m.squarefree), (-1, 1, 10, true));
        let m = mobius_omega_phi(14).unwrap();
        assert_eq!((m.mobius, m.omega, m.phi, m.squarefree), (1, 2, 6, true));
        let m = mobius_omega_phi(12).unwrap();
        assert_eq!((m.mobius, m.omega, m.phi, m.squarefree), (0, 2, 4, false));
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(-12, 2).unwrap(), 0);
        assert_eq!(kronecker(-8, 11).unwrap(), 1);
        assert_eq!(kronecker(-11, 2).unwrap(), -1);
        assert_eq!(kronecker(3, 0), Err(ArithError::ZeroModulus));
        assert_eq!(kronecker(-1, -1).unwrap(), -1);
        assert_eq!(kronecker(5, -1).unwrap(), 1);
    }

    fn legendre_by_squares(a: i64, p: i64) -> i8 {
        let r = a.rem_euclid(p);
        if r == 0 {
            return 0;
        }
        if (1..p).any(|x| (x * x) % p == r) {
            1
        } else {
            -1
        }
    }

    #[test]
    fn kronecker_matches_square_enumeration() {
        for p in (3..300).filter(|&p| is_prime(p as u64)) {
            for a in -299..300 {
                assert_eq!(kronecker(a, p).unwrap(), legendre_by_squares(a, p), "({a}/{p})");
            }
        }
    }

    fn coprime_pair() -> impl Strategy<Value = (u64, u64)> {
        (1u64..=10_000, 1u64..=10_000).prop_filter("coprime", |&(a, b)| gcd(a, b) == 1)
    }

    proptest! {
        #[test]
        fn multiplicative_on_coprime_pairs((a, b) in coprime_pair()) {
            prop_assert_eq!(sigma1(a * b).unwrap(), sigma1(a).unwrap() * sigma1(b).unwrap());
            let (ma, mb, mab) = (
                mobius_omega_phi(a).unwrap(),
                mobius_omega_phi(b).unwrap(),
                mobius_omega_phi(a * b).unwrap(),
            );
            prop_assert_eq!(mab.phi, ma.phi * mb.phi);
            prop_assert_eq!(mab.mobius, ma.mobius * mb.mobius);
            prop_assert_eq!(mab.omega, ma.omega + mb.omega);
        }

        #[test]
        fn kronecker_is_multiplicative_in_the_top(a in -500i64..500, b in -500i64..500, m in 1i64..400) {
            let lhs = kronecker(a * b, m).unwrap();
            prop_assert_eq!(lhs, kronecker(a, m).unwrap() * kronecker(b, m).unwrap());
        }
    }
}
