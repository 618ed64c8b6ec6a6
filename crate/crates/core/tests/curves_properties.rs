use std::fs::File;
use std::io::{BufRead, BufReader};

use apbias_core::arith::is_prime;
use apbias_core::curves::{ap, ap_by_enumeration, batch_ap, CharTable, CurveRecord, WeierstrassCurve};
use apbias_core::verify::{default_allcurves_path, load_isogeny_classes};
use apbias_core::{parse_dataset, DatasetFormat, DatasetOptions};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};


fn hasse(a: i64, p: u64) -> bool {
    (a * a) as u64 <= 4 * p
}

#[test]
fn hasse_bound_on_the_extract() {
    let records = load_isogeny_classes(&default_allcurves_path()).unwrap();
    let primes: Vec<u64> = (2..=300).filter(|&p| is_prime(p)).collect();
    let table = batch_ap(&records[..10_000], &primes).unwrap();
    for (i, record) in records.iter().enumerate().take(table.len()) {
        for (entry, &p) in table.row(i).iter().zip(&primes) {
            if let Some(a) = entry.value() {
                assert!(hasse(a, p), "{} p = {p}", record.curve);
            }
        }
    }
}

#[test]
fn random_curves_agree_with_enumeration_and_hasse() {
    let mut rng = StdRng::seed_from_u64(20_000);
    let primes: Vec<u64> = (2..=97).filter(|&p| is_prime(p)).collect();
    let tables: Vec<CharTable> = primes.iter().map(|&p| CharTable::new(p).unwrap()).collect();
    let mut checked = 0;
    while checked < 10_000 {
        let a = [0; 5].map(|_| rng.random_range(-1000i64..=1000));
        let curve = WeierstrassCurve::new(a);
        let i = rng.random_range(0..primes.len());
        let p = primes[i];
        if !curve.has_good_reduction(p) {
            continue;
        }
        let fast = ap(&curve, p, &tables[i]).unwrap();
        assert!(hasse(fast, p));
        if p <= 50 {
            assert_eq!(fast, ap_by_enumeration(&curve, p), "{curve} p = {p}");
        }
        checked += 1;
    }
}

/// Reading the extract and writing each record back reproduces every line.
#[test]
fn allcurves_round_trip_is_lossless() {
    let path = default_allcurves_path();
    let reader = parse_dataset(
        BufReader::new(File::open(&path).unwrap()),
        DatasetFormat::Allcurves,
        DatasetOptions { strict: true, ..Default::default() },
    )
    .unwrap();
    let records: Vec<CurveRecord> = reader.collect::<Result<_, _>>().unwrap();
    let lines: Vec<String> = BufReader::new(File::open(&path).unwrap()).lines().map(Result::unwrap).collect();
    assert_eq!(records.len(), lines.len());
    for (r, line) in records.iter().zip(&lines) {
        assert_eq!(r.to_allcurves_line().as_deref(), Some(line.as_str()));
    }
    // Every curve in a class shares a_p at good primes.
    let table = batch_ap(&records[..5000], &[2, 3, 5, 7, 11, 13]).unwrap();
    for w in 0..4999 {
        let (a, b) = (&records[w], &records[w + 1]);
        if a.conductor == b.conductor && a.class_id == b.class_id {
            assert_eq!(table.row(w), table.row(w + 1), "{} vs {}", a.curve, b.curve);
        }
    }
}
