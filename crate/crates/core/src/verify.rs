//! Property suites run by `apbias verify`.
//!
//! Each suite is a list of named checks. A check either passes or carries
//! a short description of the first counterexample.

use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::arith::{self, factor, gcd, is_square, kronecker, sigma1, ExactRational};
use crate::bias::{ec_bias_series, format_value, Accumulator, StratumMode, WeightFunction, Stratum};
use crate::classno::{h_weighted, hurwitz, hurwitz_by_divisor_sum, ClassNumberCache};
use crate::curves::{
    ap, ap_by_enumeration, an, parse_dataset, CharTable, CurveRecord, DatasetFormat, DatasetOptions,
    WeierstrassCurve,
};
use crate::traces::{
    dim_new_signed, ms_bound_check, prop_bound_check, trace_new_tn, trace_new_tnwn, trace_signed,
    TraceQuery,
};

/// Curves of conductor 11, 14, 15, 17, 19, 21 and 37, one per isogeny
/// class. Their newforms span `S_2^new(N)` at those levels.
pub const LEVELS_FIXTURE: &str = include_str!("../../../data/levels.allcurves");

/// Default location of the bundled conductor ≤ 20000 extract.
pub fn default_allcurves_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/allcurves.00001-20000")
}

pub fn levels_fixture() -> Vec<CurveRecord> {
    parse_dataset(LEVELS_FIXTURE.as_bytes(), DatasetFormat::Allcurves, DatasetOptions::default())
        .expect("allcurves reader")
        .collect::<Result<_, _>>()
        .expect("fixture parses")
}

/// Reads the first curve of each isogeny class from an allcurves file.
pub fn load_isogeny_classes(path: &Path) -> std::io::Result<Vec<CurveRecord>> {
    let options = DatasetOptions {
        isogeny_classes: true,
        strict: true,
        ..Default::default()
    };
    let reader = parse_dataset(BufReader::new(File::open(path)?), DatasetFormat::Allcurves, options)
        .map_err(std::io::Error::other)?;
    reader.collect::<Result<_, _>>().map_err(std::io::Error::other)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Arith,
    Classno,
    Traces,
    Curves,
    Bias,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Arith, Suite::Classno, Suite::Traces, Suite::Curves, Suite::Bias];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Arith => "arith",
            Suite::Classno => "classno",
            Suite::Traces => "traces",
            Suite::Curves => "curves",
            Suite::Bias => "bias",
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite '{s}' (expected arith, classno, traces, curves or bias)"))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    /// `None` on success, otherwise the first failure.
    pub failure: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

/// Optional inputs for the data-driven checks.
#[derive(Debug, Clone, Default)]
pub struct VerifyContext {
    /// Allcurves extract used by the bias suite; skipped when absent.
    pub allcurves: Option<PathBuf>,
}

fn check(name: &'static str, result: Result<(), String>) -> Check {
    Check {
        name,
        failure: result.err(),
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn run_suite(suite: Suite, ctx: &VerifyContext) -> SuiteReport {
    let checks = match suite {
        Suite::Arith => arith_checks(),
        Suite::Classno => classno_checks(),
        Suite::Traces => trace_checks(),
        Suite::Curves => curve_checks(),
        Suite::Bias => bias_checks(ctx),
    };
    SuiteReport { suite, checks }
}

fn arith_checks() -> Vec<Check> {
    vec![
        check("factor round trip n <= 10^6", {
            (1..=1_000_000u64)
                .into_par_iter()
                .find_first(|&n| factor(n).map(|f| f.value() != n as u128).unwrap_or(true))
                .map_or(Ok(()), |n| Err(format!("n = {n}")))
        }),
        check("kronecker matches squares mod p < 300", {
            let mut bad = None;
            'outer: for p in (3..300i64).filter(|&p| arith::is_prime(p as u64)) {
                let squares: Vec<bool> = {
                    let mut s = vec![false; p as usize];
                    for x in 1..p {
                        s[((x * x) % p) as usize] = true;
                    }
                    s
                };
                for a in -299..300i64 {
                    let r = a.rem_euclid(p) as usize;
                    let expect = if r == 0 { 0 } else if squares[r] { 1 } else { -1 };
                    if kronecker(a, p) != Ok(expect) {
                        bad = Some(format!("({a}/{p})"));
                        break 'outer;
                    }
                }
            }
            bad.map_or(Ok(()), Err)
        }),
        check("multiplicativity on coprime pairs", {
            let mut res = Ok(());
            for a in (1..=10_000u64).step_by(97) {
                for b in (1..=10_000u64).step_by(89) {
                    if gcd(a, b) != 1 {
                        continue;
                    }
                    let (ma, mb, mab) = (
                        arith::mobius_omega_phi(a).unwrap(),
                        arith::mobius_omega_phi(b).unwrap(),
                        arith::mobius_omega_phi(a * b).unwrap(),
                    );
                    if sigma1(a * b) != Ok(sigma1(a).unwrap() * sigma1(b).unwrap())
                        || mab.phi != ma.phi * mb.phi
                        || mab.mobius != ma.mobius * mb.mobius
                    {
                        res = Err(format!("({a}, {b})"));
                    }
                }
            }
            res
        }),
    ]
}

/// First `n ≤ max` (n ≡ 0, 3 mod 4) where `H(n)` and the divisor sum of
/// `h_w` disagree.
pub fn divisor_sum_counterexample(max: u64) -> Option<u64> {
    (1..=max)
        .into_par_iter()
        .filter(|n| matches!(n % 4, 0 | 3))
        .find_first(|&n| hurwitz(n) != hurwitz_by_divisor_sum(n))
}

fn classno_checks() -> Vec<Check> {
    let r = ExactRational::new;
    vec![
        check("examples", {
            ensure(
                hurwitz(3) == r(1, 3)
                    && hurwitz(4) == r(1, 2)
                    && hurwitz(88) == r(2, 1)
                    && hurwitz(0) == r(-1, 12)
                    && h_weighted(-3) == Ok(r(1, 3))
                    && h_weighted(-4) == Ok(r(1, 2))
                    && h_weighted(-5) == Ok(r(0, 1)),
                || "example values differ".into(),
            )
        }),
        check("divisor-sum identity n <= 5000", {
            divisor_sum_counterexample(5000).map_or(Ok(()), |n| Err(format!("n = {n}")))
        }),
        check("12 H(n) integral n <= 5000", {
            (1..=5000u64)
                .find(|&n| !(hurwitz(n) * 12).is_integer())
                .map_or(Ok(()), |n| Err(format!("n = {n}")))
        }),
        check("sum bound 2 <= n <= 300", {
            sum_bound_counterexample(300).map_or(Ok(()), |n| Err(format!("n = {n}")))
        }),
    ]
}

/// First `2 ≤ n ≤ max` violating `Σ_{t² < 4n} H(4n - t²) < 2σ₁(n) - 1`.
pub fn sum_bound_counterexample(max: u64) -> Option<u64> {
    (2..=max).find(|&n| {
        let mut total = ExactRational::from_integer(0);
        let mut t = 0u64;
        while t * t < 4 * n {
            let h = hurwitz(4 * n - t * t);
            total += if t == 0 { h } else { h * 2 };
            t += 1;
        }
        total >= ExactRational::from_integer(2 * sigma1(n).unwrap() as i128 - 1)
    })
}

/// Compares `tr T_n` on `S_2^new(N)` with `Σ a_n` over the fixture curves
/// of conductor `N`, for nonsquare `n ≤ n_max` coprime to `N`. Returns the
/// number of comparisons made and every mismatch `(N, n, trace, sum)`.
pub fn trace_curve_oracle(
    records: &[CurveRecord],
    levels: &[u64],
    n_max: u64,
) -> (usize, Vec<(u64, u64, i128, i128)>) {
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for &level in levels {
        let curves: Vec<&WeierstrassCurve> =
            records.iter().filter(|r| r.conductor == level).map(|r| &r.curve).collect();
        for n in (2..=n_max).filter(|&n| !is_square(n) && gcd(n, level) == 1) {
            let trace = TraceQuery::new(2, level, n).and_then(trace_new_tn);
            let sum: Result<i128, _> = curves.iter().map(|c| an(c, n).map(i128::from)).sum();
            compared += 1;
            match (trace, sum) {
                (Ok(t), Ok(s)) if t == s => {}
                (t, s) => mismatches.push((level, n, t.unwrap_or(i128::MIN), s.unwrap_or(i128::MIN))),
            }
        }
    }
    (compared, mismatches)
}

/// Every valid query with `k ∈ ks`, squarefree `N ≤ max_level` (N > 1),
/// `n ∈ ns`, `gcd(n, N) = 1`.
pub fn trace_grid(ks: &[u32], max_level: u64, ns: &[u64]) -> Vec<TraceQuery> {
    let mut out = Vec::new();
    for &k in ks {
        for level in 2..=max_level {
            for &n in ns {
                if let Ok(q) = TraceQuery::new(k, level, n) {
                    out.push(q);
                }
            }
        }
    }
    out
}

/// Runs `f` over the grid in parallel and reports the first failing query.
pub fn first_failure<F>(grid: &[TraceQuery], f: F) -> Result<(), String>
where
    F: Fn(TraceQuery) -> Result<(), String> + Sync,
{
    grid.par_iter()
        .map(|&q| f(q).map_err(|e| format!("k={} N={} n={}: {e}", q.k, q.level, q.n)))
        .find_first(Result::is_err)
        .unwrap_or(Ok(()))
}

fn trace_checks() -> Vec<Check> {
    let grid = trace_grid(&[2, 4, 6, 8], 500, &[2, 3, 5, 6, 7]);
    let bound_grid: Vec<TraceQuery> = grid.iter().copied().filter(|q| q.level > 4 * q.n).collect();
    let fixture = levels_fixture();
    vec![
        check("examples", {
            let q = |k, n, m| TraceQuery::new(k, n, m).unwrap();
            let s = trace_signed(q(2, 11, 2));
            let d = dim_new_signed(2, 11);
            ensure(
                trace_new_tn(q(2, 11, 2)) == Ok(-2)
                    && trace_new_tn(q(2, 14, 3)) == Ok(-2)
                    && trace_new_tnwn(q(2, 11, 2)) == Ok(2)
                    && trace_new_tnwn(q(2, 11, 1)) == Ok(-1)
                    && s.map(|s| (s.tr_plus, s.tr_minus)) == Ok((-2, 0))
                    && d.map(|d| (d.dim_plus, d.dim_minus)) == Ok((1, 0)),
                || "example values differ".into(),
            )
        }),
        check("newform traces match fixture curves", {
            let (compared, bad) = trace_curve_oracle(&fixture, &[11, 14, 15, 17, 19, 21, 37], 50);
            ensure(bad.is_empty() && compared > 0, || format!("{:?}", bad.first()))
        }),
        check("integral signed traces with exact split", {
            first_failure(&grid, |q| {
                let s = trace_signed(q).map_err(|e| e.to_string())?;
                ensure(
                    s.tr_plus + s.tr_minus == s.tr_new
                        && s.tr_plus - s.tr_minus == q.weight_sign() * s.tr_new_wn,
                    || "split identity fails".into(),
                )
            })
        }),
        check("bound on tr T_n (N > 4n)", {
            first_failure(&bound_grid, |q| {
                let b = ms_bound_check(q).map_err(|e| e.to_string())?;
                ensure(b.ok, || format!("|tr| = {} >= {}", b.residual, b.bound))
            })
        }),
        check("signed bound around the class number term (N > 4n)", {
            first_failure(&bound_grid, |q| {
                let b = prop_bound_check(q).map_err(|e| e.to_string())?;
                ensure(b.ok, || format!("residual {} >= {}", b.residual, b.bound))
            })
        }),
        check("separation identity k = 2, N > 4n", {
            let cache = ClassNumberCache::global();
            first_failure(&bound_grid, |q| {
                if q.k != 2 {
                    return Ok(());
                }
                let s = trace_signed(q).map_err(|e| e.to_string())?;
                let expected = cache.hurwitz(4 * q.n * q.level) / 2 - sigma1(q.n).unwrap() as i128;
                ensure(ExactRational::from_integer(s.tr_plus - s.tr_minus) == expected, || {
                    format!("{} != {expected}", s.tr_plus - s.tr_minus)
                })
            })
        }),
    ]
}

fn curve_checks() -> Vec<Check> {
    let fixture = levels_fixture();
    let primes: Vec<u64> = (2..=50).filter(|&p| arith::is_prime(p)).collect();
    vec![
        check("examples", {
            let c11 = WeierstrassCurve::new([0, -1, 1, -10, -20]);
            let c14 = WeierstrassCurve::new([1, 0, 1, 4, -6]);
            let t = |p| CharTable::new(p).unwrap();
            ensure(
                ap(&c11, 2, &t(2)).ok() == Some(-2)
                    && ap(&c14, 3, &t(3)).ok() == Some(-2)
                    && ap(&c11, 11, &t(11)).is_err()
                    && c11.discriminant() == (-161_051i64).into(),
                || "example values differ".into(),
            )
        }),
        check("character sum matches enumeration, p <= 50", {
            let mut res = Ok(());
            for r in &fixture {
                for &p in &primes {
                    if !r.curve.has_good_reduction(p) {
                        continue;
                    }
                    let a = ap(&r.curve, p, &CharTable::new(p).unwrap()).unwrap();
                    if a != ap_by_enumeration(&r.curve, p) || (a * a) as u64 > 4 * p {
                        res = Err(format!("{} at p = {p}", r.curve));
                    }
                }
            }
            res
        }),
        check("a_p unchanged by coordinate changes", {
            let mut res = Ok(());
            for r in &fixture {
                let moved = r.curve.change_coordinates(3, -2, 5);
                for &p in &primes {
                    if r.curve.has_good_reduction(p)
                        && ap_by_enumeration(&r.curve, p) != ap_by_enumeration(&moved, p)
                    {
                        res = Err(format!("{} at p = {p}", r.curve));
                    }
                }
            }
            res
        }),
        check("allcurves round trip", {
            let lines: Vec<String> = fixture.iter().filter_map(CurveRecord::to_allcurves_line).collect();
            ensure(lines.join("\n") == LEVELS_FIXTURE.trim_end(), || "round trip differs".into())
        }),
    ]
}

fn bias_checks(ctx: &VerifyContext) -> Vec<Check> {
    let mut checks = vec![
        check("weight examples", {
            let log20 = WeightFunction::LogPower(1.0).eval(20).unwrap();
            ensure(
                WeightFunction::Constant.eval(11).ok() == Some(1.0)
                    && WeightFunction::Power(1.0).eval(37).ok() == Some(37.0)
                    && (log20 - 20f64.ln()).abs() < 1e-12,
                || "weight values differ".into(),
            )
        }),
        check("single record series", {
            let rec = CurveRecord::new(WeierstrassCurve::new([0, -1, 1, -10, -20]), 11, 0);
            let s = ec_bias_series([rec.clone()], 7, WeightFunction::Constant, StratumMode::ByRank, 100, 10);
            let excluded = ec_bias_series([rec], 11, WeightFunction::Constant, StratumMode::ByRank, 100, 10);
            ensure(
                s.map(|s| s[0].last().map(|c| c.value)).ok() == Some(Some(-2.0))
                    && excluded.map(|s| s.is_empty()).unwrap_or(false),
                || "series values differ".into(),
            )
        }),
        check("emission format", ensure(format_value(-2.0) == "-2.00000", || "format".into())),
        check("compensated accumulation", {
            let mut acc = Accumulator::default();
            for _ in 0..1000 {
                acc.push(1e16);
                acc.push(1.0);
                acc.push(-1e16);
            }
            ensure(acc.weighted_sum() == 1000.0, || format!("{}", acc.weighted_sum()))
        }),
    ];
    if let Some(path) = &ctx.allcurves {
        checks.push(check("rank ordering and decay on the extract", {
            load_isogeny_classes(path)
                .map_err(|e| format!("{}: {e}", path.display()))
                .and_then(|records| conjecture_checks(&records))
        }));
    }
    checks
}

/// `A_0 > A_1 > A_2` at the end of the log-weighted series for p = 7, 11,
/// and `|A_r|` shrinking from `X_max/4` to `X_max` with constant weight.
pub fn conjecture_checks(records: &[CurveRecord]) -> Result<(), String> {
    let x_max = records.iter().map(|r| r.conductor).max().unwrap_or(0);
    for p in [7u64, 11] {
        let finals = |weight| -> Result<Vec<(Stratum, f64, f64)>, String> {
            let series = ec_bias_series(records.iter().cloned(), p, weight, StratumMode::ByRank, x_max, 200)
                .map_err(|e| e.to_string())?;
            Ok(series
                .iter()
                .map(|s| {
                    let last = s.last().map_or(f64::NAN, |c| c.value);
                    let quarter = s.value_at(x_max / 4).unwrap_or(f64::NAN);
                    (s.key.stratum, last, quarter)
                })
                .collect())
        };
        let get = |v: &[(Stratum, f64, f64)], r| v.iter().find(|x| x.0 == Stratum::Rank(r)).copied();
        let log = finals(WeightFunction::LogPower(1.0))?;
        let (Some(a0), Some(a1), Some(a2)) = (get(&log, 0), get(&log, 1), get(&log, 2)) else {
            return Err(format!("p = {p}: missing rank strata"));
        };
        ensure(a0.1 > a1.1 && a1.1 > a2.1, || {
            format!("p = {p}: A0 = {}, A1 = {}, A2 = {}", a0.1, a1.1, a2.1)
        })?;
        let flat = finals(WeightFunction::Constant)?;
        for r in 0..=2 {
            let (_, last, quarter) = get(&flat, r).ok_or_else(|| format!("p = {p}: missing rank {r}"))?;
            ensure(last.abs() < quarter.abs(), || {
                format!("p = {p}, r = {r}: |{last}| >= |{quarter}|")
            })?;
        }
    }
    Ok(())
}
