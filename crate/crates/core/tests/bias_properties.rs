use apbias_core::bias::{ec_bias_multi, ec_bias_series, EcBiasOptions, Stratum, StratumMode, WeightFunction};
use apbias_core::curves::{batch_ap, CurveRecord};
use apbias_core::verify::{default_allcurves_path, load_isogeny_classes};
use apbias_core::BiasError;

fn extract() -> Vec<CurveRecord> {
    load_isogeny_classes(&default_allcurves_path()).unwrap()
}

#[test]
fn value_times_count_matches_numerator() {
    let records = extract();
    for mode in [StratumMode::ByRank, StratumMode::ByRootNumber, StratumMode::All] {
        let series = ec_bias_series(records.iter().cloned(), 5, WeightFunction::Power(2.0), mode, 20_000, 200).unwrap();
        for s in &series {
            assert!(s.checkpoints.windows(2).all(|w| w[0].x < w[1].x));
            for c in &s.checkpoints {
                let rel = (c.value * c.count as f64 - c.weighted_sum).abs() / c.weighted_sum.abs().max(1e-300);
                assert!(rel < 1e-9, "{:?} {c:?}", s.key);
                assert!(c.count > 0);
            }
        }
    }
}

#[test]
fn excluded_records_never_count() {
    let records = extract();
    for p in [2u64, 7, 11] {
        let series = ec_bias_series(records.iter().cloned(), p, WeightFunction::Constant, StratumMode::All, 20_000, 10).unwrap();
        let counted = series[0].last().unwrap().count;
        let admissible = records.iter().filter(|r| r.conductor % p != 0).count() as u64;
        assert_eq!(counted, admissible, "p = {p}");
        // And the unweighted sum is the plain sum of a_p over those records.
        let table = batch_ap(&records, &[p]).unwrap();
        let direct: i64 = (0..table.len()).filter_map(|i| table.row(i)[0].value()).sum();
        assert_eq!(series[0].last().unwrap().weighted_sum, direct as f64);
    }
}

#[test]
fn root_number_strata_partition_rank_strata() {
    let records = extract();
    let by_rank = ec_bias_series(records.iter().cloned(), 3, WeightFunction::Constant, StratumMode::ByRank, 20_000, 5).unwrap();
    let by_sign = ec_bias_series(records.iter().cloned(), 3, WeightFunction::Constant, StratumMode::ByRootNumber, 20_000, 5).unwrap();
    let total = |sign: i8| -> (u64, f64) {
        by_rank
            .iter()
            .filter(|s| matches!(s.key.stratum, Stratum::Rank(r) if (r % 2 == 0) == (sign > 0)))
            .map(|s| s.last().unwrap())
            .fold((0, 0.0), |(c, w), x| (c + x.count, w + x.weighted_sum))
    };
    for s in &by_sign {
        let Stratum::RootNumber(sign) = s.key.stratum else { panic!() };
        let last = s.last().unwrap();
        assert_eq!((last.count, last.weighted_sum), total(sign));
    }
}

#[test]
fn chunking_and_pool_size_do_not_change_results() {
    let records = extract();
    let run = |chunk: usize, threads: usize| {
        let mut opts = EcBiasOptions::new(vec![2, 13, 293], WeightFunction::LogPower(2.0), StratumMode::ByRank, 20_000);
        opts.chunk_size = chunk;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| ec_bias_multi(records.iter().cloned().map(Ok::<_, BiasError>), &opts, |_| {}))
            .unwrap()
            .0
    };
    let reference = run(16_384, 1);
    assert_eq!(run(1000, 4), reference);
    assert_eq!(run(77, 3), reference);
}
