//! Run configuration: command-line flags layered over an optional TOML
//! file, then validated into a [`Job`] before anything is computed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use apbias_core::arith::{is_prime, is_square};
use apbias_core::bias::{OrderKey, DEFAULT_CHECKPOINTS};
use apbias_core::verify::Suite;
use apbias_core::{DatasetFormat, StratumMode, TraceQuery, WeightFunction};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "apbias", version, about = "Root-number refined Hecke traces and a_p bias averages")]
pub struct Cli {
    /// TOML file with default values; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: CommandFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Trace,
    MfBias,
    EcBias,
    ClassNumber,
    Verify,
}

#[derive(Debug, Subcommand)]
pub enum CommandFlags {
    /// Signed traces of T_n and signed dimensions at one level.
    Trace(Flags),
    /// Weighted averages of newform coefficients by root number.
    MfBias(Flags),
    /// Rank or root-number stratified averages of a_p over a curve dataset.
    EcBias(Flags),
    /// Hurwitz class number H(n).
    ClassNumber {
        number: Option<u64>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run the property suites.
    Verify(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Weight k (even).
    #[arg(long)]
    pub k: Option<u32>,
    /// Level N (squarefree).
    #[arg(long)]
    pub level: Option<u64>,
    /// Hecke index n.
    #[arg(long)]
    pub hecke: Option<u64>,
    /// Primes p, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub primes: Option<Vec<u64>>,
    /// unwt, sqrt, x, x2, log, log2, loglog, power or logpow.
    #[arg(long)]
    pub weight: Option<String>,
    /// Exponent for the power and logpow weights.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "X-max")]
    pub x_max: Option<u64>,
    /// Number of evenly spaced checkpoints.
    #[arg(long)]
    pub checkpoints: Option<usize>,
    /// Curve dataset (ec-bias), or allcurves extract for verify.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// allcurves or csv.
    #[arg(long)]
    pub format: Option<DatasetFormat>,
    /// by-rank, by-root-number or all.
    #[arg(long)]
    pub mode: Option<StratumMode>,
    /// Keep only the first curve of each isogeny class.
    #[arg(long)]
    pub isogeny_classes: bool,
    /// Abort on the first malformed input line.
    #[arg(long)]
    pub strict: bool,
    /// Output directory for .dat files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Suites to run, comma separated (default: all).
    #[arg(long, value_delimiter = ',')]
    pub suite: Option<Vec<String>>,
    /// File name prefix: all, prime (prime conductors only) or ht
    /// (ordered by height).
    #[arg(long)]
    pub family: Option<String>,
    /// Weight by height instead of conductor.
    #[arg(long)]
    pub height_weight: bool,
}

/// Everything a run can be configured with. Unset fields fall back to
/// per-command defaults during validation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hecke: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub number: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primes: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", rename = "X-max")]
    pub x_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<DatasetFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<StratumMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isogeny_classes: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height_weight: Option<bool>,
    /// CSV column mapping: canonical name -> header in the file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv_columns: Option<BTreeMap<String, String>>,
}

fn flag(set: bool) -> Option<bool> {
    set.then_some(true)
}

impl RunConfig {
    pub fn from_cli(command: &CommandFlags) -> Self {
        let (name, flags, number) = match command {
            CommandFlags::Trace(f) => (CommandName::Trace, f, None),
            CommandFlags::MfBias(f) => (CommandName::MfBias, f, None),
            CommandFlags::EcBias(f) => (CommandName::EcBias, f, None),
            CommandFlags::ClassNumber { number, flags } => (CommandName::ClassNumber, flags, *number),
            CommandFlags::Verify(f) => (CommandName::Verify, f, None),
        };
        let f = flags.clone();
        Self {
            command: Some(name),
            k: f.k,
            level: f.level,
            hecke: f.hecke,
            number,
            primes: f.primes,
            weight: f.weight,
            delta: f.delta,
            x_max: f.x_max,
            checkpoints: f.checkpoints,
            input: f.input,
            format: f.format,
            mode: f.mode,
            isogeny_classes: flag(f.isogeny_classes),
            strict: flag(f.strict),
            out: f.out,
            workers: f.workers,
            suite: f.suite,
            family: f.family,
            height_weight: flag(f.height_weight),
            csv_columns: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: RunConfig) -> Self {
        macro_rules! pick {
            ($($f:ident),*) => { Self { $($f: top.$f.or(self.$f)),* } };
        }
        pick!(
            command, k, level, hecke, number, primes, weight, delta, x_max, checkpoints, input, format, mode,
            isogeny_classes, strict, out, workers, suite, family, height_weight, csv_columns
        )
    }

    pub fn validate(&self) -> Result<Job> {
        let command = self.command.context("no command given")?;
        if let Some(w) = self.workers {
            ensure!(w >= 1, "--workers must be at least 1");
        }
        let job = match command {
            CommandName::Trace => {
                let q = TraceQuery::new(
                    self.k.unwrap_or(2),
                    self.level.context("trace needs --level")?,
                    self.hecke.context("trace needs --hecke")?,
                )?;
                ensure!(q.level > 1, "trace needs --level > 1");
                ensure!(!is_square(q.n), "--hecke must not be a square");
                Job::Trace(q)
            }
            CommandName::ClassNumber => Job::ClassNumber(self.number.context("class-number needs a value n")?),
            CommandName::MfBias => {
                let k = self.k.unwrap_or(2);
                TraceQuery::new(k, 1, 1)?;
                let x_max = self.x_max.context("mf-bias needs --X-max")?;
                ensure!(x_max >= 10, "--X-max must be at least 10");
                Job::MfBias(SeriesJob {
                    k,
                    primes: self.checked_primes()?,
                    weight: self.weight_function()?,
                    x_max,
                    checkpoints: self.checkpoint_count()?,
                    out: self.out_dir(),
                    family: self.family_name("mf")?,
                })
            }
            CommandName::EcBias => {
                let family = self.family_name("all")?;
                let order_by = if family == "ht" { OrderKey::Height } else { OrderKey::Conductor };
                let input = self.input.clone().context("ec-bias needs --input")?;
                let format = match self.format {
                    Some(f) => f,
                    None if input.extension().is_some_and(|e| e == "csv") => DatasetFormat::Csv,
                    None => DatasetFormat::Allcurves,
                };
                Job::EcBias(EcJob {
                    series: SeriesJob {
                        k: 2,
                        primes: self.checked_primes()?,
                        weight: self.weight_function()?,
                        x_max: self.x_max.context("ec-bias needs --X-max")?,
                        checkpoints: self.checkpoint_count()?,
                        out: self.out_dir(),
                        family,
                    },
                    input,
                    format,
                    mode: self.mode.unwrap_or(StratumMode::ByRank),
                    isogeny_classes: self.isogeny_classes.unwrap_or(false),
                    strict: self.strict.unwrap_or(false),
                    order_by,
                    height_weight: self.height_weight.unwrap_or(false),
                    csv_columns: self.csv_columns.clone().unwrap_or_default(),
                })
            }
            CommandName::Verify => {
                let suites = match &self.suite {
                    None => Suite::ALL.to_vec(),
                    Some(names) => names.iter().map(|s| s.parse::<Suite>()).collect::<Result<_, _>>().map_err(anyhow::Error::msg)?,
                };
                Job::Verify {
                    suites,
                    allcurves: self.input.clone(),
                }
            }
        };
        Ok(job)
    }

    fn checked_primes(&self) -> Result<Vec<u64>> {
        let primes = self.primes.clone().context("--primes is required")?;
        ensure!(!primes.is_empty(), "--primes is empty");
        for &p in &primes {
            ensure!(is_prime(p), "{p} is not prime");
            ensure!(p <= 1000, "primes above 1000 are not supported ({p})");
        }
        Ok(primes)
    }

    fn weight_function(&self) -> Result<WeightFunction> {
        let name = self.weight.as_deref().unwrap_or("unwt");
        Ok(WeightFunction::from_name(name, self.delta)?)
    }

    fn checkpoint_count(&self) -> Result<usize> {
        let c = self.checkpoints.unwrap_or(DEFAULT_CHECKPOINTS);
        ensure!(c >= 1, "--checkpoints must be at least 1");
        Ok(c)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn family_name(&self, default: &str) -> Result<String> {
        let family = self.family.clone().unwrap_or_else(|| default.to_string());
        if !family.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') || family.is_empty() {
            bail!("--family must be alphanumeric, got '{family}'");
        }
        Ok(family)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesJob {
    pub k: u32,
    pub primes: Vec<u64>,
    pub weight: WeightFunction,
    pub x_max: u64,
    pub checkpoints: usize,
    pub out: PathBuf,
    pub family: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcJob {
    pub series: SeriesJob,
    pub input: PathBuf,
    pub format: DatasetFormat,
    pub mode: StratumMode,
    pub isogeny_classes: bool,
    pub strict: bool,
    pub order_by: OrderKey,
    pub height_weight: bool,
    pub csv_columns: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Trace(TraceQuery),
    ClassNumber(u64),
    MfBias(SeriesJob),
    EcBias(EcJob),
    Verify { suites: Vec<Suite>, allcurves: Option<PathBuf> },
}
