//! Parametric bootstrap testing and the warp-speed Monte Carlo engine.
//!
//! The bootstrap calibrates critical values for the composite null: fit
//! `s` on the data, resample from `Zeta(s_hat)` with re-estimation per
//! resample, and take the empirical upper order statistic of the resampled
//! statistics.
//!
//! The power study replaces the nested bootstrap with the warp-speed
//! scheme: one resample per Monte Carlo replication, with the pooled
//! resample statistics of a cell supplying that cell's critical value.
//! Every replication draws from its own `(master_seed, alternative,
//! replication, phase)` stream, so the result is a pure function of the
//! configuration no matter how the replications are scheduled.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::competitors::CompetitorKind;
use crate::distributions::{AlternativeSpec, RngStream, Sample, ZetaModel};
use crate::error::{Error, Result};
use crate::estimation::mle_fit;
use crate::stein::{statistic_closed_form, WeightBeta};

const MLE_TOL: f64 = 1e-10;

/// Identifier for any statistic the engine can run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StatisticKind {
    Stein { beta: f64 },
    Competitor(CompetitorKind),
}

impl StatisticKind {
    pub fn evaluate(&self, sample: &Sample, s_hat: f64) -> Result<f64> {
        match self {
            StatisticKind::Stein { beta } => {
                Ok(statistic_closed_form(sample, s_hat, WeightBeta::new(*beta)?)?.value)
            }
            StatisticKind::Competitor(kind) => kind.evaluate(sample, s_hat),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StatisticKind::Stein { beta } => WeightBeta::new(*beta).map(|_| ()),
            StatisticKind::Competitor(kind) => kind.validate(),
        }
    }
}

fn format_number(x: f64) -> String {
    if (x - x.round()).abs() < 1e-12 {
        format!("{}", x.round() as i64)
    } else {
        format!("{x}")
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatisticKind::Stein { beta } => write!(f, "stein:{}", format_number(*beta)),
            StatisticKind::Competitor(CompetitorKind::CvmHenze) => write!(f, "cvm"),
            StatisticKind::Competitor(CompetitorKind::KsdYang) => write!(f, "ksd"),
            StatisticKind::Competitor(CompetitorKind::Meintanis { beta }) => {
                write!(f, "meintanis:{}", format_number(*beta))
            }
            StatisticKind::Competitor(CompetitorKind::Ben) => write!(f, "ben"),
        }
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("unknown statistic identifier: {s:?}"));
        let kind = match s {
            "cvm" => StatisticKind::Competitor(CompetitorKind::CvmHenze),
            "ksd" => StatisticKind::Competitor(CompetitorKind::KsdYang),
            "ben" => StatisticKind::Competitor(CompetitorKind::Ben),
            _ => {
                let (name, arg) = s.split_once(':').ok_or_else(bad)?;
                let value: f64 = arg.parse().map_err(|_| bad())?;
                match name {
                    "stein" => StatisticKind::Stein { beta: value },
                    "meintanis" => {
                        StatisticKind::Competitor(CompetitorKind::Meintanis { beta: value })
                    }
                    _ => return Err(bad()),
                }
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl TryFrom<String> for StatisticKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StatisticKind> for String {
    fn from(kind: StatisticKind) -> String {
        kind.to_string()
    }
}

/// Bootstrap test settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap resamples.
    pub b: usize,
    /// Nominal level in (0, 1).
    pub alpha: f64,
    pub master_seed: u64,
    /// Shape cap used when a resample is all ones and the refit has no
    /// finite root.
    pub s_max: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            b: 500,
            alpha: 0.05,
            master_seed: 0,
            s_max: 50.0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.b < 1 {
            return Err(Error::Domain("need at least one resample".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.s_max > 1.0) {
            return Err(Error::Domain(format!(
                "s_max must exceed 1, got {}",
                self.s_max
            )));
        }
        Ok(())
    }
}

/// Result of one bootstrap test.
#[derive(Debug, Clone, Serialize)]
pub struct TestOutcome {
    pub kind: String,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub s_hat: f64,
    pub reject: bool,
    pub n: usize,
    pub b: usize,
    pub alpha: f64,
    pub seed: u64,
}

/// Empirical upper `(1 - alpha)`-quantile by the order-statistic rule:
/// index `b(1-alpha)` when that is an integer, `floor(b(1-alpha)) + 1`
/// otherwise (1-based order statistics).
pub fn critical_value(sorted: &[f64], alpha: f64) -> f64 {
    let b = sorted.len();
    let q = b as f64 * (1.0 - alpha);
    let idx = if (q - q.round()).abs() < 1e-9 {
        q.round() as usize
    } else {
        q.floor() as usize + 1
    };
    sorted[idx.clamp(1, b) - 1]
}

fn fit_or_cap(sample: &Sample, s_max: f64) -> Result<(f64, bool)> {
    match mle_fit(sample, s_max, MLE_TOL) {
        Ok(fit) => Ok((fit.s_hat, false)),
        Err(Error::DegenerateSample) => Ok((s_max, true)),
        Err(e) => Err(e),
    }
}

/// Parametric bootstrap test of the composite Zeta hypothesis.
///
/// Rejects when the data statistic exceeds the empirical `(1 - alpha)`
/// upper order statistic of the resampled statistics; the reported p-value
/// uses the `(1 + #{T* >= T}) / (b + 1)` convention so it never vanishes.
pub fn bootstrap_test(
    sample: &Sample,
    kind: StatisticKind,
    config: &BootstrapConfig,
) -> Result<TestOutcome> {
    config.validate()?;
    kind.validate()?;
    let fit = mle_fit(sample, config.s_max, MLE_TOL)?;
    let statistic = kind.evaluate(sample, fit.s_hat)?;
    let n = sample.len();
    let model = ZetaModel::new(fit.s_hat)?;
    let resampled: Vec<f64> = (0..config.b)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = RngStream::with_path(config.master_seed, [u64::MAX, i as u64, 0]);
            let resample = model.sample(n, &mut rng);
            let (s_star, _) = fit_or_cap(&resample, config.s_max)?;
            kind.evaluate(&resample, s_star)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut sorted = resampled.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let crit = critical_value(&sorted, config.alpha);
    let exceed = resampled.iter().filter(|&&t| t >= statistic).count();
    Ok(TestOutcome {
        kind: kind.to_string(),
        statistic,
        critical_value: crit,
        p_value: (1 + exceed) as f64 / (config.b + 1) as f64,
        s_hat: fit.s_hat,
        reject: statistic > crit,
        n,
        b: config.b,
        alpha: config.alpha,
        seed: config.master_seed,
    })
}

/// Power-study settings; deserializable from the study config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Sample size per replication.
    pub n: usize,
    /// Monte Carlo replications per cell (desk scale); ignored when
    /// `full_scale` is set.
    #[serde(default = "default_replications")]
    pub m: usize,
    pub alternatives: Vec<AlternativeSpec>,
    pub statistics: Vec<StatisticKind>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub master_seed: u64,
    /// Estimator cap for degenerate (re)samples.
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    /// Worker-count hint for the caller; the engine itself runs in
    /// whatever pool it is invoked from.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Bump replications to the full 10^4 study scale.
    #[serde(default)]
    pub full_scale: bool,
}

fn default_replications() -> usize {
    2000
}

fn default_alpha() -> f64 {
    0.05
}

fn default_s_max() -> f64 {
    50.0
}

impl SimulationConfig {
    pub fn replications(&self) -> usize {
        if self.full_scale {
            10_000
        } else {
            self.m
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Domain("sample size must be at least 2".into()));
        }
        if self.replications() < 1 {
            return Err(Error::Domain("need at least one replication".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.alternatives.is_empty() || self.statistics.is_empty() {
            return Err(Error::Domain(
                "the study needs at least one alternative and one statistic".into(),
            ));
        }
        for alt in &self.alternatives {
            alt.validate()?;
        }
        for kind in &self.statistics {
            kind.validate()?;
        }
        Ok(())
    }
}

/// One cell of the power table.
#[derive(Debug, Clone, Serialize)]
pub struct PowerCell {
    /// Empirical rejection rate, percent.
    pub rate: f64,
    /// Binomial Monte Carlo standard error, percent.
    pub se: f64,
    pub rejections: usize,
    /// Replications whose data sample had no finite MLE (shape capped).
    pub degenerate_data: usize,
    /// Replications whose bootstrap resample had no finite MLE.
    pub degenerate_boot: usize,
    /// Set when more than 1% of replications were degenerate.
    pub flagged: bool,
    /// Time spent evaluating this statistic across the cell, milliseconds.
    pub eval_ms: u64,
}

/// Rejection-rate matrix produced by [`warp_speed_study`].
#[derive(Debug, Clone, Serialize)]
pub struct PowerTable {
    pub schema: u32,
    pub version: String,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub alternatives: Vec<String>,
    pub statistics: Vec<String>,
    /// `cells[row][col]` for alternative `row`, statistic `col`.
    pub cells: Vec<Vec<PowerCell>>,
    pub duration_ms: u64,
}

impl PowerTable {
    /// Deterministic CSV: one row per alternative, cells as `rate±se`
    /// percent with two decimals, dot decimal separator.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alternative");
        for stat in &self.statistics {
            out.push(',');
            out.push_str(stat);
        }
        out.push('\n');
        for (row, alt) in self.alternatives.iter().enumerate() {
            out.push_str(alt);
            for cell in &self.cells[row] {
                out.push_str(&format!(",{:.2}±{:.2}", cell.rate, cell.se));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn cell(&self, alternative: &str, statistic: &str) -> Option<&PowerCell> {
        let row = self.alternatives.iter().position(|a| a == alternative)?;
        let col = self.statistics.iter().position(|s| s == statistic)?;
        Some(&self.cells[row][col])
    }
}

struct Replication {
    t_data: Vec<f64>,
    t_boot: Vec<f64>,
    degenerate_data: bool,
    degenerate_boot: bool,
    eval_ns: Vec<u64>,
}

/// Warp-speed power study: per replication, one sample from the
/// alternative and one bootstrap resample from the fitted null; the pooled
/// resample statistics give each cell its critical value.
pub fn warp_speed_study(config: &SimulationConfig) -> Result<PowerTable> {
    config.validate()?;
    let started = Instant::now();
    let kinds = &config.statistics;
    let m = config.replications();
    let mut cells: Vec<Vec<PowerCell>> = Vec::with_capacity(config.alternatives.len());
    for (alt_index, alt) in config.alternatives.iter().enumerate() {
        let sampler = alt.prepared()?;
        let reps: Vec<Replication> = (0..m)
            .into_par_iter()
            .map(|rep| -> Result<Replication> {
                let path_data = [alt_index as u64, rep as u64, 0];
                let path_boot = [alt_index as u64, rep as u64, 1];
                let data =
                    sampler.sample(config.n, &mut RngStream::with_path(config.master_seed, path_data));
                let (s_hat, degenerate_data) = fit_or_cap(&data, config.s_max)?;
                let mut eval_ns = vec![0u64; kinds.len()];
                let mut t_data = Vec::with_capacity(kinds.len());
                for (k, kind) in kinds.iter().enumerate() {
                    let t0 = Instant::now();
                    t_data.push(kind.evaluate(&data, s_hat)?);
                    eval_ns[k] += t0.elapsed().as_nanos() as u64;
                }
                let model = ZetaModel::new(s_hat)?;
                let boot =
                    model.sample(config.n, &mut RngStream::with_path(config.master_seed, path_boot));
                let (s_boot, degenerate_boot) = fit_or_cap(&boot, config.s_max)?;
                let mut t_boot = Vec::with_capacity(kinds.len());
                for (k, kind) in kinds.iter().enumerate() {
                    let t0 = Instant::now();
                    t_boot.push(kind.evaluate(&boot, s_boot)?);
                    eval_ns[k] += t0.elapsed().as_nanos() as u64;
                }
                Ok(Replication {
                    t_data,
                    t_boot,
                    degenerate_data,
                    degenerate_boot,
                    eval_ns,
                })
            })
            .collect::<Result<Vec<Replication>>>()?;

        let degenerate_data = reps.iter().filter(|r| r.degenerate_data).count();
        let degenerate_boot = reps.iter().filter(|r| r.degenerate_boot).count();
        let flagged = (degenerate_data + degenerate_boot) as f64 > 0.01 * m as f64;
        let mut row = Vec::with_capacity(kinds.len());
        for k in 0..kinds.len() {
            let mut pool: Vec<f64> = reps.iter().map(|r| r.t_boot[k]).collect();
            pool.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let crit = critical_value(&pool, config.alpha);
            let rejections = reps.iter().filter(|r| r.t_data[k] > crit).count();
            let p = rejections as f64 / m as f64;
            row.push(PowerCell {
                rate: 100.0 * p,
                se: 100.0 * (p * (1.0 - p) / m as f64).sqrt(),
                rejections,
                degenerate_data,
                degenerate_boot,
                flagged,
                eval_ms: reps.iter().map(|r| r.eval_ns[k]).sum::<u64>() / 1_000_000,
            });
        }
        cells.push(row);
    }
    Ok(PowerTable {
        schema: 1,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.master_seed,
        n: config.n,
        m,
        alpha: config.alpha,
        alternatives: config.alternatives.iter().map(|a| a.label()).collect(),
        statistics: kinds.iter().map(|k| k.to_string()).collect(),
        cells,
        duration_ms: started.elapsed().as_millis() as u64,
    })
}
