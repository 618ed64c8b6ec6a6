//! Weierstrass curves, `a_p` by point counting, and dataset ingestion.
//!
//! Point counting at odd primes uses the character sum over the
//! completed-square model `(2y + a1 x + a3)² = 4x³ + b2 x² + 2b4 x + b6`
//! with one quadratic-character table per prime shared by every curve.
//! `p = 2, 3` are counted directly.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Lines};
use std::str::FromStr;

use num_bigint::BigInt;
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{factor, is_prime, kronecker};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CurveError {
    #[error("bad reduction at {p}: skip this (curve, prime) pair")]
    BadReduction { p: u64 },
    #[error("character table is for {table}, not {p}")]
    TableMismatch { p: u64, table: u64 },
    #[error("{0} is not prime")]
    NotPrime(u64),
}

/// Long Weierstrass model `y² + a1 xy + a3 y = x³ + a2 x² + a4 x + a6`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeierstrassCurve {
    pub a: [i64; 5],
    pub label: Option<String>,
}

impl WeierstrassCurve {
    pub fn new(a: [i64; 5]) -> Self {
        Self { a, label: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// `(b2, b4, b6, b8)`.
    pub fn b_invariants(&self) -> (i128, i128, i128, i128) {
        let [a1, a2, a3, a4, a6] = self.a.map(i128::from);
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        (b2, b4, b6, b8)
    }

    pub fn discriminant(&self) -> BigInt {
        let (b2, b4, b6, b8) = self.b_invariants();
        let (b2, b4, b6, b8) = (BigInt::from(b2), BigInt::from(b4), BigInt::from(b6), BigInt::from(b8));
        -(&b2 * &b2 * &b8) - 8 * (&b4 * &b4 * &b4) - 27 * (&b6 * &b6) + 9 * (&b2 * &b4 * &b6)
    }

    /// `Δ mod p`, computed without forming `Δ`.
    pub fn discriminant_mod(&self, p: u64) -> u64 {
        let m = p as i128;
        let [a1, a2, a3, a4, a6] = self.a.map(|x| (x as i128).rem_euclid(m));
        let r = |x: i128| x.rem_euclid(m);
        let b2 = r(a1 * a1 + 4 * a2);
        let b4 = r(2 * a4 + a1 * a3);
        let b6 = r(a3 * a3 + 4 * a6);
        let b8 = r(r(a1 * a1 * a6) + 4 * a2 * a6 - r(a1 * a3 * a4) + r(a2 * a3 * a3) - a4 * a4);
        let d = -r(b2 * b2 * b8) - 8 * r(b4 * b4 * b4) - 27 * r(b6 * b6) + 9 * r(b2 * b4 * b6);
        r(d) as u64
    }

    pub fn has_good_reduction(&self, p: u64) -> bool {
        self.discriminant_mod(p) != 0
    }

    /// The model after substituting `x = x' + r`, `y = y' + s x' + t`.
    /// The curve is unchanged up to isomorphism over ℚ.
    pub fn change_coordinates(&self, r: i64, s: i64, t: i64) -> Self {
        let [a1, a2, a3, a4, a6] = self.a;
        let a = [
            a1 + 2 * s,
            a2 - s * a1 + 3 * r - s * s,
            a3 + r * a1 + 2 * t,
            a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t,
            a6 + r * a4 + r * r * a2 + r * r * r - t * a3 - t * t - r * t * a1,
        ];
        Self { a, label: self.label.clone() }
    }
}

impl fmt::Display for WeierstrassCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a1, a2, a3, a4, a6] = self.a;
        write!(f, "[{a1},{a2},{a3},{a4},{a6}]")
    }
}

/// Quadratic character table `table[x] = (x / p)`.
#[derive(Debug, Clone)]
pub struct CharTable {
    p: u64,
    table: Vec<i8>,
}

impl CharTable {
    pub fn new(p: u64) -> Result<Self, CurveError> {
        if !is_prime(p) {
            return Err(CurveError::NotPrime(p));
        }
        let mut table = vec![-1i8; p as usize];
        table[0] = 0;
        if p == 2 {
            table[1] = 1;
        }
        for x in 1..p {
            table[((x * x) % p) as usize] = 1;
        }
        Ok(Self { p, table })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn get(&self, x: u64) -> i8 {
        self.table[x as usize]
    }
}

/// `a_p = p + 1 - #E(F_p)` at a prime of good reduction for the model.
pub fn ap(curve: &WeierstrassCurve, p: u64, table: &CharTable) -> Result<i64, CurveError> {
    if table.p != p {
        return Err(CurveError::TableMismatch { p, table: table.p });
    }
    if !curve.has_good_reduction(p) {
        return Err(CurveError::BadReduction { p });
    }
    Ok(if p <= 3 {
        ap_by_enumeration(curve, p)
    } else {
        ap_by_character_sum(curve, table)
    })
}

/// Counts affine solutions directly; `O(p²)`.
pub fn ap_by_enumeration(curve: &WeierstrassCurve, p: u64) -> i64 {
    let m = p as i128;
    let [a1, a2, a3, a4, a6] = curve.a.map(|x| (x as i128).rem_euclid(m));
    let mut affine = 0i64;
    for x in 0..m {
        let rhs = (((x + a2) * x + a4) * x + a6).rem_euclid(m);
        for y in 0..m {
            if (y * y + a1 * x * y + a3 * y - rhs).rem_euclid(m) == 0 {
                affine += 1;
            }
        }
    }
    p as i64 - affine
}

/// `-Σ_x (f(x) / p)` for `f = 4x³ + b2 x² + 2b4 x + b6`, odd `p`.
///
/// `f` is stepped by forward differences so the inner loop is additions
/// and a table lookup.
fn ap_by_character_sum(curve: &WeierstrassCurve, table: &CharTable) -> i64 {
    let p = table.p;
    let m = p as i128;
    let (b2, b4, b6, _) = curve.b_invariants();
    let r = |x: i128| x.rem_euclid(m) as u64;
    let (c3, c2, c1, c0) = (r(4), r(b2), r(2 * b4), r(b6));
    let f = |x: u64| (((c3 * x + c2) % p * x + c1) % p * x + c0) % p;
    // Forward differences at 0; the third difference is 6·4 = 24.
    let (f0, f1, f2) = (f(0), f(1), f(2));
    let mut val = f0;
    let mut d1 = (f1 + p - f0) % p;
    let mut d2 = (f2 + 2 * p - 2 * f1 + f0) % p;
    let d3 = 24 % p;
    let mut sum = 0i64;
    for _ in 0..p {
        sum += table.table[val as usize] as i64;
        val += d1;
        if val >= p {
            val -= p;
        }
        d1 += d2;
        if d1 >= p {
            d1 -= p;
        }
        d2 += d3;
        if d2 >= p {
            d2 -= p;
        }
    }
    -sum
}

/// `a_n` for `n` coprime to the conductor, from the `a_p` via
/// multiplicativity and `a_{p^{e+1}} = a_p a_{p^e} - p a_{p^{e-1}}`.
pub fn an(curve: &WeierstrassCurve, n: u64) -> Result<i64, CurveError> {
    let mut out = 1i64;
    for (p, e) in factor(n).map_err(|_| CurveError::NotPrime(0))? {
        let a_p = ap(curve, p, &CharTable::new(p)?)?;
        let (mut prev, mut cur) = (1i64, a_p);
        for _ in 1..e {
            let next = a_p * cur - p as i64 * prev;
            prev = cur;
            cur = next;
        }
        out *= cur;
    }
    Ok(out)
}

/// One curve as ingested from a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveRecord {
    pub curve: WeierstrassCurve,
    pub conductor: u64,
    pub rank: u32,
    pub height: Option<u64>,
    /// Isogeny class letters, e.g. `"a"` for 11a1.
    pub class_id: Option<String>,
    /// Index within the isogeny class.
    pub number: Option<u32>,
    pub torsion: Option<u32>,
}

impl CurveRecord {
    pub fn new(curve: WeierstrassCurve, conductor: u64, rank: u32) -> Self {
        Self {
            curve,
            conductor,
            rank,
            height: None,
            class_id: None,
            number: None,
            torsion: None,
        }
    }

    /// `(-1)^rank`, standing in for the root number.
    pub fn root_number_proxy(&self) -> i8 {
        root_number_proxy(self)
    }

    /// Allcurves line, when the record carries class, number and torsion.
    pub fn to_allcurves_line(&self) -> Option<String> {
        Some(format!(
            "{} {} {} {} {} {}",
            self.conductor,
            self.class_id.as_ref()?,
            self.number?,
            self.curve,
            self.rank,
            self.torsion?
        ))
    }
}

pub fn root_number_proxy(record: &CurveRecord) -> i8 {
    if record.rank.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Marker for an (record, prime) pair that was not evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApEntry {
    Value(i64),
    /// `p` divides the conductor or the model's discriminant.
    Skip,
}

impl ApEntry {
    pub fn value(self) -> Option<i64> {
        match self {
            ApEntry::Value(v) => Some(v),
            ApEntry::Skip => None,
        }
    }
}

/// Dense `records × primes` table of `a_p` values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApTable {
    primes: Vec<u64>,
    entries: Vec<ApEntry>,
}

impl ApTable {
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        if self.primes.is_empty() {
            0
        } else {
            self.entries.len() / self.primes.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, record: usize, p: u64) -> Option<ApEntry> {
        let j = self.primes.iter().position(|&q| q == p)?;
        self.entries.get(record * self.primes.len() + j).copied()
    }

    pub fn row(&self, record: usize) -> &[ApEntry] {
        let w = self.primes.len();
        &self.entries[record * w..(record + 1) * w]
    }
}

/// Evaluates `a_p` for every record and prime.
///
/// Records are split into contiguous shards on the current rayon pool;
/// each shard writes its own rows, so the table does not depend on the
/// number of workers.
pub fn batch_ap(records: &[CurveRecord], primes: &[u64]) -> Result<ApTable, CurveError> {
    let tables = primes
        .iter()
        .map(|&p| CharTable::new(p))
        .collect::<Result<Vec<_>, _>>()?;
    let width = primes.len();
    let mut entries = vec![ApEntry::Skip; records.len() * width];
    if width > 0 {
        entries
            .par_chunks_mut(width * 256)
            .zip(records.par_chunks(256))
            .for_each(|(out, shard)| {
                for (row, record) in out.chunks_mut(width).zip(shard) {
                    for (slot, table) in row.iter_mut().zip(&tables) {
                        let p = table.prime();
                        *slot = if record.conductor % p == 0 {
                            ApEntry::Skip
                        } else {
                            ap(&record.curve, p, table).map_or(ApEntry::Skip, ApEntry::Value)
                        };
                    }
                }
            });
    }
    Ok(ApTable {
        primes: primes.to_vec(),
        entries,
    })
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("unknown dataset format '{0}' (expected allcurves or csv)")]
    UnknownFormat(String),
    #[error("missing mandatory column '{0}'")]
    MissingColumn(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Allcurves,
    Csv,
}

impl FromStr for DatasetFormat {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "allcurves" => Ok(Self::Allcurves),
            "csv" => Ok(Self::Csv),
            other => Err(DatasetError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Allcurves => "allcurves",
            Self::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct DatasetOptions {
    /// Yield only the first curve of each isogeny class.
    pub isogeny_classes: bool,
    /// Stop at the first malformed line instead of skipping it.
    pub strict: bool,
    /// CSV only: canonical column name -> header name in the file.
    pub csv_mapping: HashMap<String, String>,
}

const CSV_MANDATORY: [&str; 7] = ["conductor", "rank", "a1", "a2", "a3", "a4", "a6"];
const CSV_OPTIONAL: [&str; 4] = ["height", "label", "class", "torsion"];
const MAX_RANK: u32 = 28;

enum Source<R: BufRead> {
    Allcurves(Lines<R>),
    Csv {
        records: csv::StringRecordsIntoIter<R>,
        columns: HashMap<&'static str, usize>,
    },
}

/// Lazy record iterator over a dataset stream.
///
/// In lenient mode malformed lines are skipped and listed in
/// [`DatasetReader::skipped`]; in strict mode the first one is yielded as
/// an error and iteration ends.
pub struct DatasetReader<R: BufRead> {
    source: Source<R>,
    options: DatasetOptions,
    line: usize,
    last_class: Option<(u64, String)>,
    skipped: Vec<(usize, String)>,
    done: bool,
}

pub fn parse_dataset<R: BufRead>(
    reader: R,
    format: DatasetFormat,
    options: DatasetOptions,
) -> Result<DatasetReader<R>, DatasetError> {
    let source = match format {
        DatasetFormat::Allcurves => Source::Allcurves(reader.lines()),
        DatasetFormat::Csv => {
            let mut csv = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .flexible(true)
                .from_reader(reader);
            let headers = csv.headers()?.clone();
            let mut columns = HashMap::new();
            for name in CSV_MANDATORY.iter().chain(CSV_OPTIONAL.iter()) {
                let wanted = options.csv_mapping.get(*name).map(String::as_str).unwrap_or(name);
                match headers.iter().position(|h| h == wanted) {
                    Some(i) => {
                        columns.insert(*name, i);
                    }
                    None if CSV_MANDATORY.contains(name) => {
                        return Err(DatasetError::MissingColumn(wanted.to_string()))
                    }
                    None => {}
                }
            }
            Source::Csv {
                records: csv.into_records(),
                columns,
            }
        }
    };
    Ok(DatasetReader {
        source,
        options,
        line: if format == DatasetFormat::Csv { 1 } else { 0 },
        last_class: None,
        skipped: Vec::new(),
        done: false,
    })
}

impl<R: BufRead> DatasetReader<R> {
    /// Malformed lines skipped so far, with 1-based line numbers.
    pub fn skipped(&self) -> &[(usize, String)] {
        &self.skipped
    }

    fn next_raw(&mut self) -> Option<Result<Result<CurveRecord, String>, DatasetError>> {
        match &mut self.source {
            Source::Allcurves(lines) => loop {
                let line = match lines.next()? {
                    Ok(l) => l,
                    Err(e) => return Some(Err(e.into())),
                };
                self.line += 1;
                if line.trim().is_empty() || line.trim_start().starts_with('#') {
                    continue;
                }
                return Some(Ok(parse_allcurves_line(&line)));
            },
            Source::Csv { records, columns } => {
                let row = match records.next()? {
                    Ok(r) => r,
                    Err(e) => return Some(Err(e.into())),
                };
                self.line += 1;
                Some(Ok(parse_csv_row(&row, columns)))
            }
        }
    }
}

impl<R: BufRead> Iterator for DatasetReader<R> {
    type Item = Result<CurveRecord, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let record = match self.next_raw()? {
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Ok(Err(reason)) => {
                    if self.options.strict {
                        self.done = true;
                        return Some(Err(DatasetError::Malformed {
                            line: self.line,
                            reason,
                        }));
                    }
                    self.skipped.push((self.line, reason));
                    continue;
                }
                Ok(Ok(r)) => r,
            };
            if self.options.isogeny_classes {
                if let Some(class) = &record.class_id {
                    let key = (record.conductor, class.clone());
                    if self.last_class.as_ref() == Some(&key) {
                        continue;
                    }
                    self.last_class = Some(key);
                }
            }
            return Some(Ok(record));
        }
    }
}

fn validate(record: CurveRecord) -> Result<CurveRecord, String> {
    if record.conductor < 11 {
        return Err(format!("conductor {} below 11", record.conductor));
    }
    if record.rank > MAX_RANK {
        return Err(format!("rank {} above {MAX_RANK}", record.rank));
    }
    if record.curve.discriminant() == BigInt::from(0) {
        return Err(format!("singular model {}", record.curve));
    }
    Ok(record)
}

fn parse_field<T: FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("bad {what} '{s}'"))
}

fn parse_ainvariants(s: &str) -> Result<[i64; 5], String> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| format!("a-invariants '{s}' not bracketed"))?;
    let values = inner
        .split(',')
        .map(|t| parse_field::<i64>(t, "a-invariant"))
        .collect::<Result<Vec<_>, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<i64>| format!("expected 5 a-invariants, got {}", v.len()))
}

/// `N class number [a1,a2,a3,a4,a6] rank torsion`.
pub fn parse_allcurves_line(line: &str) -> Result<CurveRecord, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 6 {
        return Err(format!("expected 6 fields, got {}", fields.len()));
    }
    let conductor: u64 = parse_field(fields[0], "conductor")?;
    let class = fields[1];
    if class.is_empty() || !class.chars().all(|c| c.is_ascii_lowercase()) {
        return Err(format!("bad isogeny class '{class}'"));
    }
    let number: u32 = parse_field(fields[2], "curve number")?;
    let a = parse_ainvariants(fields[3])?;
    let rank: u32 = parse_field(fields[4], "rank")?;
    let torsion: u32 = parse_field(fields[5], "torsion")?;
    let curve = WeierstrassCurve::new(a).with_label(format!("{conductor}{class}{number}"));
    validate(CurveRecord {
        curve,
        conductor,
        rank,
        height: None,
        class_id: Some(class.to_string()),
        number: Some(number),
        torsion: Some(torsion),
    })
}

fn parse_csv_row(row: &csv::StringRecord, columns: &HashMap<&'static str, usize>) -> Result<CurveRecord, String> {
    let get = |name: &str| -> Option<&str> {
        columns
            .get(name)
            .and_then(|&i| row.get(i))
            .filter(|s| !s.is_empty())
    };
    let need = |name: &str| get(name).ok_or_else(|| format!("empty '{name}'"));
    let mut a = [0i64; 5];
    for (slot, name) in a.iter_mut().zip(["a1", "a2", "a3", "a4", "a6"]) {
        *slot = parse_field(need(name)?, name)?;
    }
    let conductor = parse_field(need("conductor")?, "conductor")?;
    let rank = parse_field(need("rank")?, "rank")?;
    let height = get("height").map(|s| parse_field(s, "height")).transpose()?;
    let torsion = get("torsion").map(|s| parse_field(s, "torsion")).transpose()?;
    let mut curve = WeierstrassCurve::new(a);
    if let Some(label) = get("label") {
        curve.label = Some(label.to_string());
    }
    validate(CurveRecord {
        curve,
        conductor,
        rank,
        height,
        class_id: get("class").map(str::to_string),
        number: None,
        torsion,
    })
}

/// Independent `a_p` by brute force, shared by tests and `verify`.
pub fn ap_oracle(curve: &WeierstrassCurve, p: u64) -> i64 {
    ap_by_enumeration(curve, p)
}

/// `(d / p)` lookups through the arith kernel; used to audit tables.
pub fn char_table_is_consistent(table: &CharTable) -> bool {
    (0..table.p).all(|x| table.get(x) == kronecker(x as i64, table.p as i64).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c11a1() -> WeierstrassCurve {
        WeierstrassCurve::new([0, -1, 1, -10, -20])
    }

    fn ap_of(c: &WeierstrassCurve, p: u64) -> Result<i64, CurveError> {
        ap(c, p, &CharTable::new(p).unwrap())
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(WeierstrassCurve::new([0, 0, 0, 0, 0]).discriminant(), BigInt::from(0));
        assert_eq!(WeierstrassCurve::new([0, 0, 0, 0, 1]).discriminant(), BigInt::from(-432));
        assert_eq!(c11a1().discriminant(), BigInt::from(-161051));
        assert_eq!(c11a1().discriminant_mod(11), 0);
        assert_eq!(c11a1().discriminant_mod(7), (-161051i64).rem_euclid(7) as u64);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(ap_of(&c11a1(), 2).unwrap(), -2);
        assert_eq!(ap_of(&c11a1(), 3).unwrap(), -1);
        assert_eq!(ap_of(&c11a1(), 7).unwrap(), -2);
        assert_eq!(ap_of(&WeierstrassCurve::new([1, 0, 1, 4, -6]), 3).unwrap(), -2);
        assert_eq!(ap_of(&c11a1(), 11), Err(CurveError::BadReduction { p: 11 }));
        assert!(matches!(
            ap(&c11a1(), 5, &CharTable::new(7).unwrap()),
            Err(CurveError::TableMismatch { .. })
        ));
        assert_eq!(CharTable::new(9).unwrap_err(), CurveError::NotPrime(9));
    }

    #[test]
    fn char_tables_match_kronecker() {
        for p in [2, 3, 5, 7, 11, 101, 293] {
            assert!(char_table_is_consistent(&CharTable::new(p).unwrap()));
        }
    }

    #[test]
    fn character_sum_matches_enumeration() {
        let curves = [
            c11a1(),
            WeierstrassCurve::new([1, 0, 1, 4, -6]),
            WeierstrassCurve::new([0, 0, 1, -1, 0]),
            WeierstrassCurve::new([0, 0, 1, -7, 6]),
            WeierstrassCurve::new([1, -1, 1, -1, -14]),
        ];
        for c in &curves {
            for p in (5..=50).filter(|&p| is_prime(p)) {
                if c.has_good_reduction(p) {
                    assert_eq!(ap_of(c, p).unwrap(), ap_oracle(c, p), "{c} at {p}");
                }
            }
        }
    }

    #[test]
    fn an_uses_hecke_recursion() {
        // 11a1: a_4 = a_2² - 2 = 2, a_6 = a_2 a_3 = 2.
        assert_eq!(an(&c11a1(), 4).unwrap(), 2);
        assert_eq!(an(&c11a1(), 6).unwrap(), 2);
        assert_eq!(an(&c11a1(), 1).unwrap(), 1);
    }

    #[test]
    fn batch_examples() {
        let rec = CurveRecord::new(c11a1(), 11, 0);
        let t = batch_ap(std::slice::from_ref(&rec), &[2, 3, 11]).unwrap();
        assert_eq!(t.get(0, 2), Some(ApEntry::Value(-2)));
        assert_eq!(t.get(0, 3), Some(ApEntry::Value(-1)));
        assert_eq!(t.get(0, 11), Some(ApEntry::Skip));
        assert!(batch_ap(&[], &[2, 3]).unwrap().is_empty());
    }

    #[test]
    fn allcurves_line_parses() {
        let r = parse_allcurves_line("11 a 1 [0,-1,1,-10,-20] 0 5").unwrap();
        assert_eq!(r.conductor, 11);
        assert_eq!(r.rank, 0);
        assert_eq!(r.curve.a, [0, -1, 1, -10, -20]);
        assert_eq!(r.curve.label.as_deref(), Some("11a1"));
        assert_eq!(r.to_allcurves_line().unwrap(), "11 a 1 [0,-1,1,-10,-20] 0 5");
        assert!(parse_allcurves_line("11 a 1 [0,-1,1,-10] 0 5").is_err());
        assert!(parse_allcurves_line("11 a 1 [0,0,0,0,0] 0 1").is_err());
    }

    #[test]
    fn empty_stream_is_empty() {
        let r = parse_dataset(&b""[..], DatasetFormat::Allcurves, DatasetOptions::default()).unwrap();
        assert_eq!(r.count(), 0);
    }

    #[test]
    fn csv_with_header() {
        let data = "conductor,rank,a1,a2,a3,a4,a6\n37,1,0,0,1,-1,0\n";
        let recs: Vec<_> = parse_dataset(data.as_bytes(), DatasetFormat::Csv, DatasetOptions::default())
            .unwrap()
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].conductor, 37);
        assert_eq!(recs[0].rank, 1);
        assert_eq!(recs[0].curve.a, [0, 0, 1, -1, 0]);
    }

    #[test]
    fn csv_mapping_and_missing_columns() {
        let data = "N,r,a1,a2,a3,a4,a6,H\n37,1,0,0,1,-1,0,48\n";
        let mut opts = DatasetOptions::default();
        assert!(matches!(
            parse_dataset(data.as_bytes(), DatasetFormat::Csv, opts.clone()),
            Err(DatasetError::MissingColumn(c)) if c == "conductor"
        ));
        for (k, v) in [("conductor", "N"), ("rank", "r"), ("height", "H")] {
            opts.csv_mapping.insert(k.into(), v.into());
        }
        let rec = parse_dataset(data.as_bytes(), DatasetFormat::Csv, opts)
            .unwrap()
            .next()
            .unwrap()
            .unwrap();
        assert_eq!(rec.height, Some(48));
        assert!("json".parse::<DatasetFormat>().is_err());
    }

    #[test]
    fn strictness_and_isogeny_classes() {
        let data = "11 a 1 [0,-1,1,-10,-20] 0 5\n11 a 2 [0,-1,1,-7820,-263580] 0 1\nbroken\n14 a 1 [1,0,1,4,-6] 0 6\n";
        let mut lenient = parse_dataset(
            data.as_bytes(),
            DatasetFormat::Allcurves,
            DatasetOptions {
                isogeny_classes: true,
                ..Default::default()
            },
        )
        .unwrap();
        let labels: Vec<_> = lenient
            .by_ref()
            .map(|r| r.unwrap().curve.label.unwrap())
            .collect();
        assert_eq!(labels, ["11a1", "14a1"]);
        assert_eq!(lenient.skipped().len(), 1);
        assert_eq!(lenient.skipped()[0].0, 3);

        let strict: Vec<_> = parse_dataset(
            data.as_bytes(),
            DatasetFormat::Allcurves,
            DatasetOptions {
                strict: true,
                ..Default::default()
            },
        )
        .unwrap()
        .collect();
        assert_eq!(strict.len(), 3);
        assert!(matches!(strict[2], Err(DatasetError::Malformed { line: 3, .. })));
    }

    #[test]
    fn root_number_from_parity() {
        let mut r = CurveRecord::new(c11a1(), 11, 0);
        assert_eq!(r.root_number_proxy(), 1);
        r.rank = 1;
        assert_eq!(r.root_number_proxy(), -1);
        r.rank = 4;
        assert_eq!(r.root_number_proxy(), 1);
    }

    fn small_curve() -> impl Strategy<Value = WeierstrassCurve> {
        prop::array::uniform5(-30i64..30).prop_map(WeierstrassCurve::new)
    }

    proptest! {
        #[test]
        fn hasse_bound(c in small_curve(), pi in 0usize..20) {
            let p = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71][pi];
            prop_assume!(c.has_good_reduction(p));
            let a = ap_of(&c, p).unwrap();
            prop_assert!((a * a) as u64 <= 4 * p);
        }

        #[test]
        fn invariant_under_coordinate_shifts(c in small_curve(), s in -3i64..3, t in -3i64..3, r in -3i64..3) {
            prop_assume!(c.discriminant() != BigInt::from(0));
            let moved = c.change_coordinates(r, s, t);
            prop_assert_eq!(moved.discriminant(), c.discriminant());
            for p in [2u64, 3, 5, 7, 13, 31] {
                if c.has_good_reduction(p) {
                    prop_assert_eq!(ap_of(&moved, p).unwrap(), ap_of(&c, p).unwrap());
                }
            }
        }
    }
}
