use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::{run_frame_experiment, run_throughput_experiment, Scheme};
use crate::error::{invalid_input, Error, Result};
use crate::scenario::{build_schedule, ScenarioConfig};

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Passengers per cluster; the number of served clusters is held fixed.
    UsersPerCluster,
    IrsElements,
    /// Rician K-factor, dB.
    KFactor,
    QuantBits,
    /// Train speed, km/h. Reports window throughput.
    Speed,
}

impl Axis {
    pub const ALL: [Axis; 5] = [
        Axis::UsersPerCluster,
        Axis::IrsElements,
        Axis::KFactor,
        Axis::QuantBits,
        Axis::Speed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::UsersPerCluster => "users_per_cluster",
            Axis::IrsElements => "irs_elements",
            Axis::KFactor => "k_factor",
            Axis::QuantBits => "quant_bits",
            Axis::Speed => "speed",
        }
    }

    pub fn metric(self) -> Metric {
        match self {
            Axis::Speed => Metric::Throughput,
            _ => Metric::SumRate,
        }
    }

    /// `base` with the axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let count = |what: &str| -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(invalid_input(format!("{what} must be a positive integer, got {value}")))
            }
        };
        let mut cfg = base.clone();
        match self {
            Axis::UsersPerCluster => {
                let n = count("users per cluster")?;
                cfg.total_users = base.served_clusters() * n;
                cfg.users_per_cluster = n;
            }
            Axis::IrsElements => cfg.irs_elements = count("IRS elements")?,
            Axis::KFactor => cfg.rician_kf = value,
            Axis::QuantBits => cfg.quant_bits = count("quantization bits")? as u32,
            Axis::Speed => cfg.train_speed = value,
        }
        cfg.validate()?;
        build_schedule(&cfg)?;
        Ok(cfg)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s || (s == "users" && *a == Axis::UsersPerCluster))
            .ok_or_else(|| {
                let names: Vec<_> = Axis::ALL.iter().map(|a| a.name()).collect();
                invalid_input(format!("unknown axis '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// Reported quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Frame sum rate at equal power, bit/s/Hz.
    SumRate,
    /// Duration-weighted throughput over the served window, bit/s/Hz.
    Throughput,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::SumRate => "sum_rate",
            Metric::Throughput => "throughput",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum_rate" => Ok(Metric::SumRate),
            "throughput" => Ok(Metric::Throughput),
            _ => Err(invalid_input(format!("unknown metric '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    pub seed: u64,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(invalid_input("a sweep needs at least one axis value"));
        }
        if self.values.iter().any(|v| !v.is_finite()) || self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid_input("axis values must be finite and strictly increasing"));
        }
        if self.trials == 0 {
            return Err(invalid_input("a sweep needs at least one trial"));
        }
        if self.schemes.is_empty() {
            return Err(invalid_input("a sweep needs at least one scheme"));
        }
        if self.workers == Some(0) {
            return Err(invalid_input("worker count must be at least 1"));
        }
        Ok(())
    }
}

/// Aggregate of one `(value, scheme)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub scheme: Scheme,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`.
    pub stderr: f64,
    pub trials: usize,
}

/// An axis value that could not be run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepError {
    pub value: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub metric: Metric,
    pub seed: u64,
    /// Sorted by value, then scheme name.
    pub rows: Vec<SweepRow>,
    pub errors: Vec<SweepError>,
}

impl SweepResult {
    pub fn row(&self, value: f64, scheme: Scheme) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.value == value && r.scheme == scheme)
    }

    pub(crate) fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then_with(|| a.scheme.name().cmp(b.scheme.name()))
        });
    }
}

/// Mean and standard error of `xs` (zero error for a single sample).
pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn trial_metrics(cfg: &ScenarioConfig, spec: &SweepSpec, trial: u64) -> Result<Vec<f64>> {
    Ok(match spec.axis.metric() {
        Metric::SumRate => run_frame_experiment(cfg, &spec.schemes, spec.seed, trial)?
            .iter()
            .map(|o| o.rate)
            .collect(),
        Metric::Throughput => run_throughput_experiment(cfg, &spec.schemes, true, spec.seed, trial)?
            .iter()
            .map(|o| o.throughput())
            .collect(),
    })
}

/// Runs every trial at every axis value and aggregates per scheme.
///
/// Trials run on a worker pool but are reduced in trial order, so the result
/// does not depend on the worker count. Trial `t` uses the same random
/// streams at every axis value. A value whose configuration is invalid, or
/// whose trials fail, is recorded in `errors` and skipped.
pub fn run_sweep(spec: &SweepSpec, cfg: &ScenarioConfig) -> Result<SweepResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.unwrap_or(0))
        .build()
        .map_err(|e| invalid_input(format!("cannot start worker pool: {e}")))?;
    let mut result = SweepResult {
        axis: spec.axis,
        metric: spec.axis.metric(),
        seed: spec.seed,
        rows: Vec::new(),
        errors: Vec::new(),
    };
    for &value in &spec.values {
        let run = spec.axis.apply(cfg, value).and_then(|cfg_v| {
            pool.install(|| {
                (0..spec.trials as u64)
                    .into_par_iter()
                    .map(|t| trial_metrics(&cfg_v, spec, t))
                    .collect::<Result<Vec<_>>>()
            })
        });
        match run {
            Ok(per_trial) => {
                for (j, &scheme) in spec.schemes.iter().enumerate() {
                    let xs: Vec<f64> = per_trial.iter().map(|m| m[j]).collect();
                    let (mean, stderr) = mean_stderr(&xs);
                    result.rows.push(SweepRow {
                        value,
                        scheme,
                        mean,
                        stderr,
                        trials: xs.len(),
                    });
                }
            }
            Err(e) => result.errors.push(SweepError {
                value,
                message: e.to_string(),
            }),
        }
    }
    result.sort_rows();
    Ok(result)
}
