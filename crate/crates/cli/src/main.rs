mod config;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use apbias_core::arith::is_prime;
use apbias_core::bias::{ec_bias_multi, EcBiasOptions, EcBiasStats, WeightArgument};
use apbias_core::classno::hurwitz;
use apbias_core::traces::{dim_new_signed, mf_bias_from_terms, mf_level_terms, trace_signed};
use apbias_core::verify::{default_allcurves_path, run_suite, VerifyContext};
use apbias_core::{emit_dat, parse_dataset, BiasSeries, DatasetOptions};
use clap::Parser;
use serde_json::json;

use config::{Cli, EcJob, Job, RunConfig, SeriesJob};

const PROGRESS_EVERY: u64 = 1_000_000;

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let config = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    if cli.print_config {
        return match config.to_toml() {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => usage_error(e),
        };
    }
    let job = match config.validate() {
        Ok(j) => j,
        Err(e) => return usage_error(e),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .expect("thread pool");
    match pool.install(|| run(&job)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn usage_error(e: anyhow::Error) -> ExitCode {
    eprintln!("usage error: {e:#}");
    ExitCode::from(2)
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let base = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    Ok(base.overlay(RunConfig::from_cli(&cli.command)))
}

/// Returns `Ok(false)` when a verification check failed.
fn run(job: &Job) -> Result<bool> {
    let start = Instant::now();
    match job {
        Job::Trace(q) => {
            let s = trace_signed(*q)?;
            let d = dim_new_signed(q.k, q.level)?;
            println!("k = {}, N = {}, n = {}", q.k, q.level, q.n);
            for (name, value) in [
                ("tr+", s.tr_plus),
                ("tr-", s.tr_minus),
                ("tr_new", s.tr_new),
                ("tr_new_WN", s.tr_new_wn),
                ("dim+", d.dim_plus as i128),
                ("dim-", d.dim_minus as i128),
            ] {
                println!("{name:<10} {value:>12}");
            }
            summary(json!({
                "command": "trace", "k": q.k, "level": q.level, "n": q.n,
                "tr_plus": s.tr_plus, "tr_minus": s.tr_minus, "tr_new": s.tr_new, "tr_new_wn": s.tr_new_wn,
                "dim_plus": d.dim_plus, "dim_minus": d.dim_minus,
            }));
            Ok(true)
        }
        Job::ClassNumber(n) => {
            let h = hurwitz(*n);
            println!("H({n}) = {h}");
            summary(json!({"command": "class-number", "n": n, "value": h.to_string()}));
            Ok(true)
        }
        Job::MfBias(job) => {
            let mut files = Vec::new();
            for &p in &job.primes {
                let terms = mf_level_terms(job.k, p, job.x_max)?;
                let (plus, minus) = mf_bias_from_terms(&terms, p, job.x_max, job.weight, job.checkpoints)?;
                files.extend(write_series(job, &[plus, minus])?);
            }
            summary(json!({
                "command": "mf-bias", "k": job.k, "primes": job.primes, "weight": job.weight.id(),
                "X_max": job.x_max, "files": files, "elapsed_s": start.elapsed().as_secs_f64(),
            }));
            Ok(true)
        }
        Job::EcBias(job) => run_ec_bias(job, start),
        Job::Verify { suites, allcurves } => {
            let allcurves = allcurves.clone().or_else(|| Some(default_allcurves_path()).filter(|p| p.exists()));
            let ctx = VerifyContext { allcurves };
            let mut all_ok = true;
            let mut results = Vec::new();
            for &suite in suites {
                let report = run_suite(suite, &ctx);
                let passed = report.checks.iter().filter(|c| c.passed()).count();
                let verdict = if report.passed() { "PASS" } else { "FAIL" };
                println!("{verdict} {suite} ({passed}/{})", report.checks.len());
                for c in report.checks.iter().filter(|c| !c.passed()) {
                    println!("  FAIL {}: {}", c.name, c.failure.as_deref().unwrap_or(""));
                }
                all_ok &= report.passed();
                results.push(json!({"suite": suite.name(), "passed": report.passed()}));
            }
            summary(json!({"command": "verify", "passed": all_ok, "suites": results}));
            Ok(all_ok)
        }
    }
}

fn run_ec_bias(job: &EcJob, start: Instant) -> Result<bool> {
    let file = File::open(&job.input).with_context(|| format!("opening {}", job.input.display()))?;
    let options = DatasetOptions {
        isogeny_classes: job.isogeny_classes,
        strict: job.strict,
        csv_mapping: job.csv_columns.clone().into_iter().collect(),
    };
    let mut reader = parse_dataset(BufReader::new(file), job.format, options)?;
    let prime_only = job.series.family == "prime";
    let records = reader
        .by_ref()
        .map(|r| r.map_err(anyhow::Error::from))
        .filter(|r| !prime_only || r.as_ref().map_or(true, |r| is_prime(r.conductor)));
    let mut opts = EcBiasOptions::new(job.series.primes.clone(), job.series.weight, job.mode, job.series.x_max);
    opts.checkpoints = job.series.checkpoints;
    opts.order_by = job.order_by;
    if job.height_weight {
        opts.weight_argument = WeightArgument::Height;
    }
    let mut next_report = PROGRESS_EVERY;
    let (series, stats) = ec_bias_multi(records, &opts, |s: &EcBiasStats| {
        if s.records >= next_report {
            eprintln!("{} records, {} admitted pairs", s.records, s.admitted);
            next_report = (s.records / PROGRESS_EVERY + 1) * PROGRESS_EVERY;
        }
    })?;
    let files = write_series(&job.series, &series)?;
    let skipped = reader.skipped();
    for (line, reason) in skipped.iter().take(10) {
        eprintln!("skipped line {line}: {reason}");
    }
    if stats.overflow_ranks > 0 {
        eprintln!("{} records with rank above 8 went to the overflow stratum", stats.overflow_ranks);
    }
    summary(json!({
        "command": "ec-bias", "input": job.input, "primes": job.series.primes, "weight": job.series.weight.id(),
        "mode": job.mode.to_string(), "X_max": job.series.x_max, "records": stats.records,
        "admitted": stats.admitted, "excluded": stats.excluded, "overflow_ranks": stats.overflow_ranks,
        "skipped_lines": skipped.len(), "files": files, "elapsed_s": start.elapsed().as_secs_f64(),
    }));
    Ok(true)
}

/// Writes every non-empty series into the output directory and returns
/// the file names.
fn write_series(job: &SeriesJob, series: &[BiasSeries]) -> Result<Vec<String>> {
    fs::create_dir_all(&job.out).with_context(|| format!("creating {}", job.out.display()))?;
    let mut names = Vec::new();
    for s in series.iter().filter(|s| !s.checkpoints.is_empty()) {
        let name = s.key.file_name(&job.family);
        let path: PathBuf = Path::new(&job.out).join(&name);
        let mut sink = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        emit_dat(s, &mut sink)?;
        sink.flush()?;
        names.push(name);
    }
    Ok(names)
}

fn summary(value: serde_json::Value) {
    println!("{value}");
}
