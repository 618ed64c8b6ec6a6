//! Weighted averages of `a_p` stratified by rank or root number.
//!
//! Records stream through in order of their ordering key (conductor or
//! height). `a_p` is evaluated in parallel chunks, but every accumulator
//! is fed sequentially in input order, so the floating point sums and the
//! emitted series are identical for any worker count.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::is_prime;
use crate::curves::{batch_ap, CurveError, CurveRecord};

#[derive(Debug, Error)]
pub enum BiasError {
    #[error("weight function {kind} is not defined at N = {n} (needs N >= {min})")]
    Domain { kind: String, n: u64, min: u64 },
    #[error("invalid weight function: {0}")]
    InvalidWeight(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("records are not sorted: key {key} follows {previous}")]
    Unsorted { previous: u64, key: u64 },
    #[error("record with conductor {0} has no height")]
    MissingHeight(u64),
    #[error("series has no checkpoints")]
    EmptySeries,
    #[error("checkpoint grid needs X_max >= 1 and at least one point")]
    EmptyGrid,
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Positive, non-decreasing weight `φ(N)` of at most polynomial growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "delta", rename_all = "snake_case")]
pub enum WeightFunction {
    Constant,
    /// `N^δ`, `0 ≤ δ ≤ 8`.
    Power(f64),
    /// `(log N)^δ`, `0 ≤ δ ≤ 8`.
    LogPower(f64),
    /// `log log N`.
    LogLog,
}

const MAX_DELTA: f64 = 8.0;

impl WeightFunction {
    pub fn power(delta: f64) -> Result<Self, BiasError> {
        Self::Power(delta).validated()
    }

    pub fn log_power(delta: f64) -> Result<Self, BiasError> {
        Self::LogPower(delta).validated()
    }

    pub fn validated(self) -> Result<Self, BiasError> {
        match self {
            Self::Power(d) | Self::LogPower(d) if !(0.0..=MAX_DELTA).contains(&d) => Err(
                BiasError::InvalidWeight(format!("exponent {d} outside [0, {MAX_DELTA}]")),
            ),
            w => Ok(w),
        }
    }

    /// Parses the names used on the command line and in file names:
    /// `unwt`, `sqrt`, `x`, `x2`, `log`, `log2`, `loglog`, or `power` /
    /// `logpow` with an explicit exponent.
    pub fn from_name(name: &str, delta: Option<f64>) -> Result<Self, BiasError> {
        let w = match (name, delta) {
            ("unwt" | "constant" | "one", None) => Self::Constant,
            ("sqrt", None) => Self::Power(0.5),
            ("x" | "linear", None) => Self::Power(1.0),
            ("x2", None) => Self::Power(2.0),
            ("log", None) => Self::LogPower(1.0),
            ("log2", None) => Self::LogPower(2.0),
            ("loglog", None) => Self::LogLog,
            ("power" | "pow", Some(d)) => Self::Power(d),
            ("logpow" | "log_power", Some(d)) => Self::LogPower(d),
            (n, Some(_)) if !matches!(n, "power" | "pow" | "logpow" | "log_power") => {
                return Err(BiasError::InvalidWeight(format!("'{n}' takes no exponent")))
            }
            (n, _) => return Err(BiasError::InvalidWeight(format!("unknown weight '{n}'"))),
        };
        w.validated()
    }

    /// Short name used in output file names.
    pub fn id(&self) -> String {
        match *self {
            Self::Constant => "unwt".into(),
            Self::Power(0.5) => "sqrt".into(),
            Self::Power(1.0) => "x".into(),
            Self::Power(2.0) => "x2".into(),
            Self::Power(d) => format!("pow{d}"),
            Self::LogPower(1.0) => "log".into(),
            Self::LogPower(2.0) => "log2".into(),
            Self::LogPower(d) => format!("logpow{d}"),
            Self::LogLog => "loglog".into(),
        }
    }

    /// Smallest argument where the weight is positive.
    pub fn domain_min(&self) -> u64 {
        match self {
            Self::Constant | Self::Power(_) => 1,
            Self::LogPower(_) => 2,
            Self::LogLog => 3,
        }
    }

    pub fn eval(&self, n: u64) -> Result<f64, BiasError> {
        let min = self.domain_min();
        if n < min {
            return Err(BiasError::Domain {
                kind: self.id(),
                n,
                min,
            });
        }
        let x = n as f64;
        Ok(match *self {
            Self::Constant => 1.0,
            Self::Power(d) => x.powf(d),
            Self::LogPower(d) => x.ln().powf(d),
            Self::LogLog => x.ln().ln(),
        })
    }
}

impl fmt::Display for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// How records are grouped into series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StratumMode {
    ByRank,
    ByRootNumber,
    All,
}

impl FromStr for StratumMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "by-rank" | "rank" => Ok(Self::ByRank),
            "by-root-number" | "root-number" | "sign" => Ok(Self::ByRootNumber),
            "all" => Ok(Self::All),
            other => Err(format!("unknown stratification mode '{other}'")),
        }
    }
}

impl fmt::Display for StratumMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ByRank => "by-rank",
            Self::ByRootNumber => "by-root-number",
            Self::All => "all",
        })
    }
}

/// Ranks above this go to [`Stratum::RankOverflow`].
pub const MAX_STRATUM_RANK: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stratum {
    Rank(u32),
    /// Every rank above [`MAX_STRATUM_RANK`].
    RankOverflow,
    RootNumber(i8),
    All,
}

impl Stratum {
    pub fn of(record: &CurveRecord, mode: StratumMode) -> Self {
        match mode {
            StratumMode::ByRank if record.rank > MAX_STRATUM_RANK => Self::RankOverflow,
            StratumMode::ByRank => Self::Rank(record.rank),
            StratumMode::ByRootNumber => Self::RootNumber(record.root_number_proxy()),
            StratumMode::All => Self::All,
        }
    }

    /// The `r<..>` part of output file names.
    pub fn file_tag(&self) -> String {
        match self {
            Self::Rank(r) => format!("r{r}"),
            Self::RankOverflow => format!("r{}plus", MAX_STRATUM_RANK + 1),
            Self::RootNumber(s) if *s > 0 => "rplus".into(),
            Self::RootNumber(_) => "rminus".into(),
            Self::All => "rall".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StratumKey {
    pub stratum: Stratum,
    pub p: u64,
    pub weight_id: String,
}

impl StratumKey {
    /// `<family>_<weight>_r<r>_p<p>.dat`.
    pub fn file_name(&self, family: &str) -> String {
        format!("{family}_{}_{}_p{}.dat", self.weight_id, self.stratum.file_tag(), self.p)
    }
}

/// Neumaier-compensated running sum with an exact count.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    sum: f64,
    compensation: f64,
    count: u64,
}

impl Accumulator {
    pub fn push(&mut self, term: f64) {
        self.add(term, 1);
    }

    /// Adds `term` to the numerator and `count` to the denominator.
    pub fn add(&mut self, term: f64, count: u64) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.compensation += (self.sum - t) + term;
        } else {
            self.compensation += (term - t) + self.sum;
        }
        self.sum = t;
        self.count += count;
    }

    pub fn weighted_sum(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.weighted_sum() / self.count as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub x: u64,
    pub value: f64,
    pub count: u64,
    pub weighted_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasSeries {
    pub key: StratumKey,
    pub checkpoints: Vec<Checkpoint>,
}

impl BiasSeries {
    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }

    /// Value at the last checkpoint with `X <= x`.
    pub fn value_at(&self, x: u64) -> Option<f64> {
        self.checkpoints.iter().take_while(|c| c.x <= x).last().map(|c| c.value)
    }
}

/// Evenly spaced checkpoints `ceil(j·X_max / count)`, `j = 1..=count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointGrid(Vec<u64>);

pub const DEFAULT_CHECKPOINTS: usize = 200;

impl CheckpointGrid {
    pub fn new(x_max: u64, count: usize) -> Result<Self, BiasError> {
        if x_max == 0 || count == 0 {
            return Err(BiasError::EmptyGrid);
        }
        let c = count as u128;
        let mut xs: Vec<u64> = (1..=c)
            .map(|j| ((j * x_max as u128).div_ceil(c)) as u64)
            .collect();
        xs.dedup();
        Ok(Self(xs))
    }

    pub fn points(&self) -> &[u64] {
        &self.0
    }

    pub fn x_max(&self) -> u64 {
        *self.0.last().expect("grid is never empty")
    }
}

/// Feeds keyed contributions in key order and snapshots every stratum at
/// each checkpoint. Contributions with key `<= X` are included at `X`.
#[derive(Debug)]
pub struct SeriesBuilder {
    grid: CheckpointGrid,
    next: usize,
    p: u64,
    weight_id: String,
    strata: BTreeMap<Stratum, (Accumulator, Vec<Checkpoint>)>,
}

impl SeriesBuilder {
    pub fn new(grid: CheckpointGrid, p: u64, weight_id: impl Into<String>) -> Self {
        Self {
            grid,
            next: 0,
            p,
            weight_id: weight_id.into(),
            strata: BTreeMap::new(),
        }
    }

    /// Emits every checkpoint strictly below `key`.
    pub fn advance(&mut self, key: u64) {
        while let Some(&x) = self.grid.0.get(self.next) {
            if x >= key {
                break;
            }
            for (acc, out) in self.strata.values_mut() {
                if let Some(value) = acc.mean() {
                    out.push(Checkpoint {
                        x,
                        value,
                        count: acc.count(),
                        weighted_sum: acc.weighted_sum(),
                    });
                }
            }
            self.next += 1;
        }
    }

    pub fn add(&mut self, key: u64, stratum: Stratum, term: f64, count: u64) {
        self.advance(key);
        self.strata.entry(stratum).or_default().0.add(term, count);
    }

    /// Registers a stratum so it appears in the output even if empty.
    pub fn touch(&mut self, stratum: Stratum) {
        self.strata.entry(stratum).or_default();
    }

    pub fn finish(mut self) -> Vec<BiasSeries> {
        self.advance(u64::MAX);
        let (p, weight_id) = (self.p, self.weight_id);
        self.strata
            .into_iter()
            .map(|(stratum, (_, checkpoints))| BiasSeries {
                key: StratumKey {
                    stratum,
                    p,
                    weight_id: weight_id.clone(),
                },
                checkpoints,
            })
            .collect()
    }
}

/// Which record field orders the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderKey {
    #[default]
    Conductor,
    Height,
}

/// Which record field the weight is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightArgument {
    #[default]
    Conductor,
    Height,
}

#[derive(Debug, Clone)]
pub struct EcBiasOptions {
    pub primes: Vec<u64>,
    pub weight: WeightFunction,
    pub mode: StratumMode,
    pub x_max: u64,
    pub checkpoints: usize,
    pub order_by: OrderKey,
    pub weight_argument: WeightArgument,
    /// Records buffered per parallel `a_p` batch.
    pub chunk_size: usize,
}

impl EcBiasOptions {
    pub fn new(primes: Vec<u64>, weight: WeightFunction, mode: StratumMode, x_max: u64) -> Self {
        Self {
            primes,
            weight,
            mode,
            x_max,
            checkpoints: DEFAULT_CHECKPOINTS,
            order_by: OrderKey::Conductor,
            weight_argument: WeightArgument::Conductor,
            chunk_size: 16_384,
        }
    }
}

/// Running tallies reported back to callers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EcBiasStats {
    pub records: u64,
    /// (record, prime) pairs that entered some average.
    pub admitted: u64,
    /// (record, prime) pairs excluded because `p | N_E` or bad reduction.
    pub excluded: u64,
    /// Records with rank above [`MAX_STRATUM_RANK`].
    pub overflow_ranks: u64,
}

fn order_key(record: &CurveRecord, order: OrderKey) -> Result<u64, BiasError> {
    match order {
        OrderKey::Conductor => Ok(record.conductor),
        OrderKey::Height => record.height.ok_or(BiasError::MissingHeight(record.conductor)),
    }
}

/// Multi-prime driver behind [`ec_bias_series`]: one series per
/// (prime, occupied stratum), primes in the order given.
///
/// `progress` is called after each processed chunk with the running stats.
pub fn ec_bias_multi<I, E>(
    records: I,
    options: &EcBiasOptions,
    mut progress: impl FnMut(&EcBiasStats),
) -> Result<(Vec<BiasSeries>, EcBiasStats), E>
where
    I: IntoIterator<Item = Result<CurveRecord, E>>,
    E: From<BiasError>,
{
    for &p in &options.primes {
        if !is_prime(p) {
            return Err(BiasError::NotPrime(p).into());
        }
    }
    let grid = CheckpointGrid::new(options.x_max, options.checkpoints)?;
    let weight_id = options.weight.id();
    let mut builders: Vec<SeriesBuilder> = options
        .primes
        .iter()
        .map(|&p| SeriesBuilder::new(grid.clone(), p, weight_id.clone()))
        .collect();
    let mut stats = EcBiasStats::default();
    let mut previous = 0u64;
    let mut chunk = Vec::with_capacity(options.chunk_size.max(1));
    let mut iter = records.into_iter();
    let mut exhausted = false;
    while !exhausted {
        chunk.clear();
        while chunk.len() < options.chunk_size.max(1) {
            let Some(record) = iter.next() else {
                exhausted = true;
                break;
            };
            let record = record?;
            let key = order_key(&record, options.order_by)?;
            if key < previous {
                return Err(BiasError::Unsorted { previous, key }.into());
            }
            previous = key;
            if key > options.x_max {
                exhausted = true;
                break;
            }
            chunk.push(record);
        }
        if chunk.is_empty() {
            break;
        }
        let weights = chunk
            .par_iter()
            .map(|r| {
                let arg = match options.weight_argument {
                    WeightArgument::Conductor => r.conductor,
                    WeightArgument::Height => r.height.ok_or(BiasError::MissingHeight(r.conductor))?,
                };
                options.weight.eval(arg)
            })
            .collect::<Result<Vec<f64>, BiasError>>()?;
        let table = batch_ap(&chunk, &options.primes).map_err(BiasError::from)?;
        for (i, record) in chunk.iter().enumerate() {
            let key = order_key(record, options.order_by)?;
            let stratum = Stratum::of(record, options.mode);
            if stratum == Stratum::RankOverflow {
                stats.overflow_ranks += 1;
            }
            for (builder, entry) in builders.iter_mut().zip(table.row(i)) {
                match entry.value() {
                    Some(a) => {
                        builder.add(key, stratum, a as f64 * weights[i], 1);
                        stats.admitted += 1;
                    }
                    None => {
                        builder.advance(key);
                        stats.excluded += 1;
                    }
                }
            }
        }
        stats.records += chunk.len() as u64;
        progress(&stats);
    }
    let series = builders.into_iter().flat_map(SeriesBuilder::finish).collect();
    Ok((series, stats))
}

/// Weighted averages `A_r(p, X; φ)` of `a_p(E) φ(N_E)` over records with
/// `(N_E, p) = 1`, one series per occupied stratum.
pub fn ec_bias_series<I>(
    records: I,
    p: u64,
    weight: WeightFunction,
    mode: StratumMode,
    x_max: u64,
    checkpoints: usize,
) -> Result<Vec<BiasSeries>, BiasError>
where
    I: IntoIterator<Item = CurveRecord>,
{
    let mut options = EcBiasOptions::new(vec![p], weight, mode, x_max);
    options.checkpoints = checkpoints;
    ec_bias_multi(records.into_iter().map(Ok::<_, BiasError>), &options, |_| {}).map(|(s, _)| s)
}

/// Same as [`ec_bias_series`] with `φ(H_E)` in place of `φ(N_E)`.
/// Records are still ordered by conductor.
pub fn weighted_height_variant<I>(
    records: I,
    p: u64,
    weight: WeightFunction,
    mode: StratumMode,
    x_max: u64,
    checkpoints: usize,
) -> Result<Vec<BiasSeries>, BiasError>
where
    I: IntoIterator<Item = CurveRecord>,
{
    let mut options = EcBiasOptions::new(vec![p], weight, mode, x_max);
    options.checkpoints = checkpoints;
    options.weight_argument = WeightArgument::Height;
    ec_bias_multi(records.into_iter().map(Ok::<_, BiasError>), &options, |_| {}).map(|(s, _)| s)
}

/// Six significant digits in plain decimal notation.
pub fn format_value(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{:.5}", if v.is_finite() { 0.0 } else { v });
    }
    let digits = |x: f64| x.abs().log10().floor() as i32 + 1;
    let mut decimals = (6 - digits(v)).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    // Rounding can carry into a new leading digit (9.999996 -> 10.00000).
    let rounded: f64 = s.parse().unwrap_or(v);
    if rounded != 0.0 && digits(rounded) > digits(v) && decimals > 0 {
        decimals -= 1;
        s = format!("{v:.decimals$}");
    }
    s
}

/// Writes `X value` lines, one per checkpoint.
pub fn emit_dat(series: &BiasSeries, mut sink: impl Write) -> Result<(), BiasError> {
    if series.checkpoints.is_empty() {
        return Err(BiasError::EmptySeries);
    }
    for c in &series.checkpoints {
        writeln!(sink, "{} {}", c.x, format_value(c.value))?;
    }
    Ok(())
}
