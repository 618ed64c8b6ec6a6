//! Exact traces of Hecke operators on spaces of cusp forms of squarefree
//! level, split by the sign of the Fricke involution `W_N`.
//!
//! All sums run over [`ExactRational`] and are checked to be integral at
//! the end, so a wrong class number or polynomial value shows up as an
//! error rather than a silently rounded answer.

use std::collections::HashMap;
use std::sync::RwLock;

use num_traits::Signed;
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{self, factor, gcd, isqrt, is_square, kronecker, sigma1, ArithError, ExactRational};
use crate::bias::{BiasError, BiasSeries, CheckpointGrid, SeriesBuilder, Stratum, WeightFunction};
use crate::classno::{ClassNumberCache, ClassNumberError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("weight {0} must be even and at least 2")]
    BadWeight(u32),
    #[error("level {0} is not squarefree")]
    NotSquarefree(u64),
    #[error("Hecke index and level must be positive")]
    Zero,
    #[error("Hecke index {n} is not coprime to level {level}")]
    NotCoprime { n: u64, level: u64 },
    #[error("the newform trace formula is not valid at level 1")]
    LevelOne,
    #[error("Hecke index {0} is a square; the formula needs an extra term")]
    SquareIndex(u64),
    #[error("the bound needs level > 4n, got level {level} and n = {n}")]
    LevelTooSmall { level: u64, n: u64 },
    #[error("{what} came out as {value}, which is not an integer")]
    NonIntegral { what: &'static str, value: String },
    #[error("tr_new and tr_new(W_N) have different parity for {0:?}")]
    ParityMismatch(TraceQuery),
    #[error("integer overflow evaluating {0}")]
    Overflow(&'static str),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    ClassNumber(#[from] ClassNumberError),
    #[error("{0}")]
    Bias(String),
}

impl From<BiasError> for TraceError {
    fn from(e: BiasError) -> Self {
        Self::Bias(e.to_string())
    }
}

/// Weight `k`, level `N` and Hecke index `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TraceQuery {
    pub k: u32,
    pub level: u64,
    pub n: u64,
}

impl TraceQuery {
    pub fn new(k: u32, level: u64, n: u64) -> Result<Self, TraceError> {
        if k < 2 || k % 2 == 1 {
            return Err(TraceError::BadWeight(k));
        }
        if level == 0 || n == 0 {
            return Err(TraceError::Zero);
        }
        if !factor(level)?.is_squarefree() {
            return Err(TraceError::NotSquarefree(level));
        }
        if gcd(n, level) != 1 {
            return Err(TraceError::NotCoprime { n, level });
        }
        Ok(Self { k, level, n })
    }

    /// `(-1)^{k/2}`.
    pub fn weight_sign(&self) -> i128 {
        if self.k.is_multiple_of(4) {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedTraces {
    pub tr_plus: i128,
    pub tr_minus: i128,
    pub tr_new: i128,
    pub tr_new_wn: i128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimPair {
    pub dim_plus: i64,
    pub dim_minus: i64,
}

impl DimPair {
    pub fn total(&self) -> i64 {
        self.dim_plus + self.dim_minus
    }
}

/// `U_{k-1}(b, c)` where `b² = B`, for `U_0 = 0, U_1 = 1,
/// U_{m+1} = b U_m - c U_{m-1}`.
///
/// Odd-index terms only involve `b²`, so this stays in the integers even
/// when `b` is irrational.
pub fn u_poly_oddindex(k: u32, big_b: i128, c: i128) -> Result<i128, TraceError> {
    if k < 2 || k % 2 == 1 {
        return Err(TraceError::BadWeight(k));
    }
    let overflow = || TraceError::Overflow("p_k");
    let step = big_b.checked_sub(c.checked_mul(2).ok_or_else(overflow)?).ok_or_else(overflow)?;
    let c2 = c.checked_mul(c).ok_or_else(overflow)?;
    let (mut prev, mut cur) = (1i128, big_b - c);
    if k == 2 {
        return Ok(1);
    }
    for _ in 0..(k - 4) / 2 {
        let next = step
            .checked_mul(cur)
            .and_then(|x| x.checked_sub(c2.checked_mul(prev)?))
            .ok_or_else(overflow)?;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

fn to_integer(value: ExactRational, what: &'static str) -> Result<i128, TraceError> {
    if value.is_integer() {
        Ok(value.to_integer())
    } else {
        Err(TraceError::NonIntegral {
            what,
            value: value.to_string(),
        })
    }
}

fn half() -> ExactRational {
    ExactRational::new(1, 2)
}

fn kronecker_delta_sigma(k: u32, n: u64) -> Result<ExactRational, TraceError> {
    Ok(if k == 2 {
        ExactRational::from_integer(sigma1(n)? as i128)
    } else {
        ExactRational::from_integer(0)
    })
}

/// Trace of `T_n W_N` on the full space `S_k(Γ₀(N))`.
///
/// Sums `p_k(s/√N, n) H(4nN - s²)` over `s ≡ 0 (mod N)`. At level 1 the
/// hyperbolic terms `Σ_{dd'=n} min(d, d')^{k-1}` are added; for squarefree
/// `N > 1` coprime to `n` that sum is empty (no `dd' = nN` has `N | d + d'`).
pub fn trace_full_tnwn(q: TraceQuery) -> Result<i128, TraceError> {
    trace_full_with(q, ClassNumberCache::global())
}

fn trace_full_with(q: TraceQuery, cache: &ClassNumberCache) -> Result<i128, TraceError> {
    let TraceQuery { k, level, n } = TraceQuery::new(q.k, q.level, q.n)?;
    let four_nn = 4u128 * n as u128 * level as u128;
    let four_nn = u64::try_from(four_nn).map_err(|_| TraceError::Overflow("4nN"))?;
    let mut sum = ExactRational::from_integer(0);
    let mut m = 0u64;
    loop {
        let s = level as u128 * m as u128;
        if s * s > four_nn as u128 {
            break;
        }
        let pk = u_poly_oddindex(k, (m as i128) * (m as i128) * level as i128, n as i128)?;
        let h = cache.hurwitz(four_nn - (s * s) as u64);
        let mult = if m == 0 { 1 } else { 2 };
        sum += h * (pk * mult);
        m += 1;
    }
    let mut total = -sum * half() + kronecker_delta_sigma(k, n)?;
    if level == 1 {
        let mut hyperbolic = 0i128;
        for d in factor(n)?.divisors() {
            let m = d.min(n / d) as i128;
            hyperbolic = m
                .checked_pow(k - 1)
                .and_then(|x| x.checked_add(hyperbolic))
                .ok_or(TraceError::Overflow("hyperbolic term"))?;
        }
        total -= ExactRational::from_integer(hyperbolic) * half();
    }
    to_integer(total, "tr T_n W_N")
}

/// Trace of `T_n W_N` on the new subspace. For squarefree `N` coprime to
/// `n` the old part contributes nothing, so this equals the full trace.
pub fn trace_new_tnwn(q: TraceQuery) -> Result<i128, TraceError> {
    trace_full_tnwn(q)
}

/// Trace of `T_n` on `S_k^new(Γ₀(N))` for squarefree `N > 1` and
/// nonsquare `n`.
pub fn trace_new_tn(q: TraceQuery) -> Result<i128, TraceError> {
    trace_new_tn_with(q, ClassNumberCache::global())
}

fn trace_new_tn_with(q: TraceQuery, cache: &ClassNumberCache) -> Result<i128, TraceError> {
    let TraceQuery { k, level, n } = TraceQuery::new(q.k, q.level, q.n)?;
    if level == 1 {
        return Err(TraceError::LevelOne);
    }
    if is_square(n) {
        return Err(TraceError::SquareIndex(n));
    }
    let primes: Vec<i64> = factor(level)?.primes().map(|p| p as i64).collect();
    let four_n = 4 * n as i128;
    let t_max = isqrt(four_n as u128) as i128;
    let mut sum = ExactRational::from_integer(0);
    for t in -t_max..=t_max {
        let disc = t * t - four_n; // < 0 since n is not a square
        let disc64 = i64::try_from(disc).map_err(|_| TraceError::Overflow("t² - 4n"))?;
        let pk = u_poly_oddindex(k, t * t, n as i128)?;
        let mut inner = ExactRational::from_integer(0);
        let mut f = 1i64;
        while (f * f) as i128 <= -disc {
            if disc64 % (f * f) == 0 {
                let hw = cache.h_weighted(disc64 / (f * f))?;
                if *hw.numer() != 0 {
                    let mut b2 = 1i128;
                    for &p in &primes {
                        b2 *= if f % p == 0 {
                            (p - 1) as i128
                        } else {
                            kronecker(disc64, p)? as i128 - 1
                        };
                    }
                    inner += hw * b2;
                }
            }
            f += 1;
        }
        sum += inner * pk;
    }
    let mu = arith::mobius_omega_phi(level)?.mobius as i128;
    let total = -sum * half() + kronecker_delta_sigma(k, n)? * mu;
    to_integer(total, "tr T_n on the new space")
}

fn signed_from(q: TraceQuery, tr_new: i128, tr_new_wn: i128) -> Result<SignedTraces, TraceError> {
    let twisted = q.weight_sign() * tr_new_wn;
    let (plus2, minus2) = (tr_new + twisted, tr_new - twisted);
    if plus2 % 2 != 0 || minus2 % 2 != 0 {
        return Err(TraceError::ParityMismatch(q));
    }
    Ok(SignedTraces {
        tr_plus: plus2 / 2,
        tr_minus: minus2 / 2,
        tr_new,
        tr_new_wn,
    })
}

/// Traces of `T_n` on the subspaces of newforms with root number `±1`.
pub fn trace_signed(q: TraceQuery) -> Result<SignedTraces, TraceError> {
    signed_from(q, trace_new_tn(q)?, trace_new_tnwn(q)?)
}

/// Dimension of `S_k(Γ₀(N))` for any `N ≥ 1`, from the genus and the
/// counts of elliptic points and cusps.
pub fn dim_cusp_gamma0(k: u32, level: u64) -> Result<i64, TraceError> {
    if k < 2 || k % 2 == 1 {
        return Err(TraceError::BadWeight(k));
    }
    let f = factor(level)?;
    let mut index = level as i64;
    let (mut nu2, mut nu3) = (1i64, 1i64);
    for &(p, e) in f.as_slice() {
        index = index / p as i64 * (p as i64 + 1);
        nu2 *= match (p, e) {
            (2, 1) => 1,
            (2, _) => 0,
            _ => 1 + kronecker(-4, p as i64)? as i64,
        };
        nu3 *= match (p, e) {
            (3, 1) => 1,
            (3, _) => 0,
            _ => 1 + kronecker(-3, p as i64)? as i64,
        };
    }
    let cusps: i64 = f
        .divisors()
        .iter()
        .map(|&d| arith::mobius_omega_phi(gcd(d, level / d)).map(|m| m.phi as i64))
        .sum::<Result<_, _>>()?;
    let twelve_g = 12 + index - 3 * nu2 - 4 * nu3 - 6 * cusps;
    debug_assert_eq!(twelve_g % 12, 0);
    let g = twelve_g / 12;
    let k = k as i64;
    Ok(if k == 2 {
        g
    } else {
        (k - 1) * (g - 1) + (k / 2 - 1) * cusps + nu2 * (k / 4) + nu3 * (k / 3)
    })
}

/// Dimension of the new subspace for squarefree `N`.
pub fn dim_new(k: u32, level: u64) -> Result<i64, TraceError> {
    let q = TraceQuery::new(k, level, 1)?;
    let mut total = 0i64;
    for d in factor(q.level)?.divisors() {
        let omega = factor(level / d)?.as_slice().len() as u32;
        total += (-2i64).pow(omega) * dim_cusp_gamma0(k, d)?;
    }
    Ok(total)
}

/// Dimensions of the root number `±1` newform subspaces.
pub fn dim_new_signed(k: u32, level: u64) -> Result<DimPair, TraceError> {
    let q = TraceQuery::new(k, level, 1)?;
    let dim = dim_new(k, level)? as i128;
    let twisted = q.weight_sign() * trace_new_tnwn(q)?;
    if (dim + twisted) % 2 != 0 || (dim + twisted) < 0 || (dim - twisted) < 0 {
        return Err(TraceError::ParityMismatch(q));
    }
    Ok(DimPair {
        dim_plus: ((dim + twisted) / 2) as i64,
        dim_minus: ((dim - twisted) / 2) as i64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundCheck {
    pub residual: ExactRational,
    pub bound: ExactRational,
    pub ok: bool,
}

fn check_bound_preconditions(q: TraceQuery) -> Result<TraceQuery, TraceError> {
    let q = TraceQuery::new(q.k, q.level, q.n)?;
    if q.level <= 4 * q.n {
        return Err(TraceError::LevelTooSmall { level: q.level, n: q.n });
    }
    Ok(q)
}

/// `|tr^± ∓ ¼(-n)^{(k-2)/2} H(4nN)|` (the larger of the two signs) against
/// `(2^{ω(N)} (4n)^{k/2} + δ_{k,2}) σ₁(n)`. Needs `N > 4n`.
pub fn prop_bound_check(q: TraceQuery) -> Result<BoundCheck, TraceError> {
    let q = check_bound_preconditions(q)?;
    let signed = trace_signed(q)?;
    let center = bound_center(q, -(q.n as i128))?;
    let residual = [
        ExactRational::from_integer(signed.tr_plus) - center,
        ExactRational::from_integer(signed.tr_minus) + center,
    ]
    .into_iter()
    .map(|r| r.abs())
    .max()
    .expect("two entries");
    let omega = factor(q.level)?.as_slice().len() as u32;
    let bound = growth_bound(q, 2i128.pow(omega))?;
    Ok(BoundCheck {
        residual,
        bound,
        ok: residual < bound,
    })
}

/// `¼ c^{(k-2)/2} H(4nN)` for `c = ±n`.
pub fn bound_center(q: TraceQuery, c: i128) -> Result<ExactRational, TraceError> {
    let power = c.checked_pow((q.k - 2) / 2).ok_or(TraceError::Overflow("bound center"))?;
    let h = ClassNumberCache::global().hurwitz(4 * q.n * q.level);
    Ok(h * power * ExactRational::new(1, 4))
}

fn growth_bound(q: TraceQuery, factor2: i128) -> Result<ExactRational, TraceError> {
    let four_n = (4 * q.n as i128)
        .checked_pow(q.k / 2)
        .ok_or(TraceError::Overflow("(4n)^{k/2}"))?;
    let delta = i128::from(q.k == 2);
    Ok(ExactRational::from_integer((factor2 * four_n + delta) * sigma1(q.n)? as i128))
}

/// `|tr T_n|` on the new space against
/// `(2^{ω(N)+1} (4n)^{k/2} + δ_{k,2}) σ₁(n)`.
pub fn ms_bound_check(q: TraceQuery) -> Result<BoundCheck, TraceError> {
    let tr = trace_new_tn(q)?;
    let omega = factor(q.level)?.as_slice().len() as u32;
    let bound = growth_bound(q, 2i128.pow(omega + 1))?;
    let residual = ExactRational::from_integer(tr.abs());
    Ok(BoundCheck {
        residual,
        bound,
        ok: residual < bound,
    })
}

/// Memo table of signed traces and dimensions, shared across threads.
#[derive(Debug, Default)]
pub struct TraceTable {
    traces: RwLock<HashMap<TraceQuery, SignedTraces>>,
    dims: RwLock<HashMap<(u32, u64), DimPair>>,
}

impl TraceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn signed(&self, q: TraceQuery) -> Result<SignedTraces, TraceError> {
        if let Some(v) = self.traces.read().unwrap().get(&q) {
            return Ok(*v);
        }
        let v = trace_signed(q)?;
        self.traces.write().unwrap().insert(q, v);
        Ok(v)
    }

    pub fn dims(&self, k: u32, level: u64) -> Result<DimPair, TraceError> {
        if let Some(v) = self.dims.read().unwrap().get(&(k, level)) {
            return Ok(*v);
        }
        let v = dim_new_signed(k, level)?;
        self.dims.write().unwrap().insert((k, level), v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.traces.read().unwrap().len() + self.dims.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Signed traces of `T_p` and signed dimensions at one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelTerm {
    pub level: u64,
    pub traces: SignedTraces,
    pub dims: DimPair,
}

impl LevelTerm {
    fn is_trivial(&self) -> bool {
        self.dims.total() == 0 && self.traces.tr_plus == 0 && self.traces.tr_minus == 0
    }
}

/// Signed traces of `T_p` in weight `k` for every squarefree level
/// `N ≤ x_max` coprime to `p`, ascending. Levels whose new space is zero
/// are dropped.
pub fn mf_level_terms(k: u32, p: u64, x_max: u64) -> Result<Vec<LevelTerm>, TraceError> {
    if !arith::is_prime(p) {
        return Err(TraceError::NotPrime(p));
    }
    let levels: Vec<u64> = (1..=x_max)
        .filter(|&n| n % p != 0)
        .filter(|&n| arith::mobius_omega_phi(n).map(|m| m.squarefree).unwrap_or(false))
        .collect();
    let terms = levels
        .par_iter()
        .map(|&level| {
            let q = TraceQuery::new(k, level, p)?;
            let traces = if level == 1 {
                // W_1 is the identity and every form is new.
                let tr = trace_full_tnwn(q)?;
                signed_from(q, tr, tr)?
            } else {
                trace_signed(q)?
            };
            Ok(LevelTerm {
                level,
                traces,
                dims: dim_new_signed(k, level)?,
            })
        })
        .collect::<Result<Vec<_>, TraceError>>()?;
    Ok(terms.into_iter().filter(|t| !t.is_trivial()).collect())
}

/// Checkpointed `A^±(p, X; φ)` from precomputed level terms.
pub fn mf_bias_from_terms(
    terms: &[LevelTerm],
    p: u64,
    x_max: u64,
    weight: WeightFunction,
    checkpoints: usize,
) -> Result<(BiasSeries, BiasSeries), TraceError> {
    let grid = CheckpointGrid::new(x_max, checkpoints)?;
    let mut builder = SeriesBuilder::new(grid, p, weight.id());
    let (plus, minus) = (Stratum::RootNumber(1), Stratum::RootNumber(-1));
    builder.touch(plus);
    builder.touch(minus);
    for t in terms.iter().take_while(|t| t.level <= x_max) {
        let w = weight.eval(t.level)?;
        builder.add(t.level, plus, w * t.traces.tr_plus as f64, t.dims.dim_plus as u64);
        builder.add(t.level, minus, w * t.traces.tr_minus as f64, t.dims.dim_minus as u64);
    }
    let mut series = builder.finish().into_iter();
    // Strata come out ordered: RootNumber(-1) before RootNumber(1).
    let minus_series = series.next().expect("touched");
    let plus_series = series.next().expect("touched");
    Ok((plus_series, minus_series))
}

/// Weighted averages of the `p`-th coefficient over newforms of weight `k`
/// and squarefree level coprime to `p`, split by root number.
pub fn mf_bias_series(
    k: u32,
    p: u64,
    x_max: u64,
    weight: WeightFunction,
    checkpoints: usize,
) -> Result<(BiasSeries, BiasSeries), TraceError> {
    let terms = mf_level_terms(k, p, x_max)?;
    mf_bias_from_terms(&terms, p, x_max, weight, checkpoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classno::hurwitz;

    fn q(k: u32, level: u64, n: u64) -> TraceQuery {
        TraceQuery::new(k, level, n).unwrap()
    }

    fn r(n: i128) -> ExactRational {
        ExactRational::from_integer(n)
    }

    /// Weighted count of reduced forms by scanning a box, independent of
    /// the classno enumeration bounds.
    fn hurwitz_box(n: i64) -> ExactRational {
        let mut total = ExactRational::from_integer(0);
        for a in 1..=n {
            for b in -a..=a {
                if (b * b + n) % (4 * a) != 0 {
                    continue;
                }
                let c = (b * b + n) / (4 * a);
                if c < a || (b < 0 && (-b == a || a == c)) {
                    continue;
                }
                total += if a == b && b == c {
                    ExactRational::new(1, 3)
                } else if b == 0 && a == c {
                    ExactRational::new(1, 2)
                } else {
                    r(1)
                };
            }
        }
        total
    }

    #[test]
    fn u_poly_examples() {
        assert_eq!(u_poly_oddindex(2, 17, -4).unwrap(), 1);
        assert_eq!(u_poly_oddindex(4, 1, 2).unwrap(), -1);
        assert_eq!(u_poly_oddindex(6, 0, 5).unwrap(), 25);
        assert!(u_poly_oddindex(5, 0, 1).is_err());
        // Against the full recursion with integer b.
        for b in -6i128..=6 {
            for c in -5i128..=5 {
                let (mut u0, mut u1) = (0i128, 1i128);
                for m in 1..12u32 {
                    if m % 2 == 1 {
                        assert_eq!(u_poly_oddindex(m + 1, b * b, c).unwrap(), u1);
                    }
                    (u0, u1) = (u1, b * u1 - c * u0);
                }
            }
        }
    }

    #[test]
    fn p_k_at_zero_is_a_signed_power() {
        for k in (2..=12).step_by(2) {
            for n in 1..10i128 {
                assert_eq!(u_poly_oddindex(k, 0, n).unwrap(), (-n).pow((k - 2) / 2));
            }
        }
    }

    #[test]
    fn full_trace_examples() {
        assert_eq!(hurwitz(184), hurwitz_box(184));
        assert_eq!(hurwitz(136), hurwitz_box(136));
        assert_eq!(trace_full_tnwn(q(2, 11, 2)).unwrap(), 2);
        let expected = -hurwitz_box(184) / 2 + 3;
        assert_eq!(r(trace_full_tnwn(q(2, 23, 2)).unwrap()), expected);
        assert_eq!(r(trace_full_tnwn(q(4, 17, 2)).unwrap()), hurwitz_box(136));
        assert_eq!(trace_new_tnwn(q(2, 11, 1)).unwrap(), -1);
        assert_eq!(trace_new_tnwn(q(2, 1, 2)).unwrap(), 0);
    }

    #[test]
    fn level_one_traces() {
        // tr T_1 is the dimension; Δ has τ(2) = -24 and τ(3) = 252.
        for k in (2..=30).step_by(2) {
            assert_eq!(trace_full_tnwn(q(k, 1, 1)).unwrap() as i64, dim_cusp_gamma0(k, 1).unwrap(), "k = {k}");
        }
        assert_eq!(trace_full_tnwn(q(12, 1, 2)).unwrap(), -24);
        assert_eq!(trace_full_tnwn(q(12, 1, 3)).unwrap(), 252);
        assert_eq!(trace_full_tnwn(q(12, 1, 4)).unwrap(), -1472);
        // S_24(1) is 2-dimensional, tr T_2 = 1080.
        assert_eq!(trace_full_tnwn(q(24, 1, 2)).unwrap(), 1080);
    }

    #[test]
    fn new_trace_examples() {
        assert_eq!(trace_new_tn(q(2, 11, 2)).unwrap(), -2);
        assert_eq!(trace_new_tn(q(2, 14, 3)).unwrap(), -2);
        assert_eq!(trace_new_tn(q(2, 15, 2)).unwrap(), -1);
        assert_eq!(trace_new_tn(q(2, 1, 2)), Err(TraceError::LevelOne));
        assert_eq!(trace_new_tn(q(2, 11, 4)), Err(TraceError::SquareIndex(4)));
    }

    #[test]
    fn query_validation() {
        assert_eq!(TraceQuery::new(3, 11, 2), Err(TraceError::BadWeight(3)));
        assert_eq!(TraceQuery::new(2, 12, 5), Err(TraceError::NotSquarefree(12)));
        assert_eq!(TraceQuery::new(2, 14, 2), Err(TraceError::NotCoprime { n: 2, level: 14 }));
        assert_eq!(TraceQuery::new(2, 0, 2), Err(TraceError::Zero));
    }

    #[test]
    fn signed_examples() {
        let s = trace_signed(q(2, 11, 2)).unwrap();
        assert_eq!((s.tr_plus, s.tr_minus), (-2, 0));
        let s = trace_signed(q(2, 14, 3)).unwrap();
        assert_eq!(s.tr_plus + s.tr_minus, -2);
        for level in [11u64, 19, 43, 59, 67, 83] {
            let s = trace_signed(q(2, level, 2)).unwrap();
            let expected = hurwitz(8 * level) / 2 - 3;
            assert_eq!(r(s.tr_plus - s.tr_minus), expected, "N = {level}");
        }
    }

    #[test]
    fn dimension_examples() {
        assert_eq!(dim_cusp_gamma0(2, 11).unwrap(), 1);
        assert_eq!(dim_cusp_gamma0(2, 37).unwrap(), 2);
        assert_eq!(dim_cusp_gamma0(12, 1).unwrap(), 1);
        assert_eq!(dim_cusp_gamma0(4, 1).unwrap(), 0);
        assert_eq!(dim_cusp_gamma0(2, 1).unwrap(), 0);
        // Genus of X_0(N) for a few composite levels.
        for (n, g) in [(22, 2), (23, 2), (30, 3), (35, 3), (64, 3), (100, 7), (210, 41)] {
            assert_eq!(dim_cusp_gamma0(2, n).unwrap(), g, "N = {n}");
        }
        assert_eq!(dim_new_signed(2, 11).unwrap(), DimPair { dim_plus: 1, dim_minus: 0 });
        assert_eq!(dim_new_signed(2, 37).unwrap().total(), 2);
        assert_eq!(dim_new_signed(2, 37).unwrap(), DimPair { dim_plus: 1, dim_minus: 1 });
        assert_eq!(dim_new_signed(2, 1).unwrap(), DimPair { dim_plus: 0, dim_minus: 0 });
        assert_eq!(dim_new_signed(12, 1).unwrap(), DimPair { dim_plus: 1, dim_minus: 0 });
        // S_2^new(22) is 0; S_2(22) is two copies of 11a.
        assert_eq!(dim_new(2, 22).unwrap(), 0);
    }

    #[test]
    fn bound_examples() {
        let b = prop_bound_check(q(2, 11, 2)).unwrap();
        assert!(b.ok);
        assert_eq!(b.bound, r(51));
        let s = trace_signed(q(2, 11, 2)).unwrap();
        assert_eq!(
            ExactRational::from_integer(s.tr_plus) - bound_center(q(2, 11, 2), -2).unwrap(),
            ExactRational::new(-5, 2)
        );
        assert!(prop_bound_check(q(4, 29, 2)).unwrap().ok);
        assert!(matches!(
            prop_bound_check(TraceQuery { k: 2, level: 8, n: 2 }),
            Err(TraceError::LevelTooSmall { .. }) | Err(TraceError::NotSquarefree(8)) | Err(TraceError::NotCoprime { .. })
        ));
        assert!(matches!(prop_bound_check(q(2, 7, 2)), Err(TraceError::LevelTooSmall { level: 7, n: 2 })));
    }

    #[test]
    fn mf_series_small() {
        let (plus, minus) = mf_bias_series(2, 2, 11, WeightFunction::Constant, 200).unwrap();
        assert_eq!(plus.last().unwrap().value, -2.0);
        assert_eq!(plus.last().unwrap().x, 11);
        assert_eq!(plus.checkpoints.len(), 1);
        assert!(minus.checkpoints.is_empty());
        assert!(mf_bias_series(2, 4, 11, WeightFunction::Constant, 200).is_err());
    }

    #[test]
    fn table_memoizes() {
        let t = TraceTable::new();
        let a = t.signed(q(2, 11, 2)).unwrap();
        assert_eq!(t.signed(q(2, 11, 2)).unwrap(), a);
        assert_eq!(t.dims(2, 11).unwrap().dim_plus, 1);
        assert_eq!(t.len(), 2);
    }
}
