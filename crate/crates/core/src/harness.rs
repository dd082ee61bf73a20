//! Monte-Carlo trials, parameter sweeps and the result CSV.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::baselines::{self, BinaryMode, FixedBeamforming, SchemeId};
use crate::channel::{composite_channel, fixed_antenna_channel};
use crate::dynamic_opt::{self, DynamicOptions};
use crate::error::{Error, Result};
use crate::kvfile;
use crate::metrics::{self, RateReport};
use crate::scenario::{sample_scenario_with_seed, ScenarioConfig};
use crate::static_opt::{self, StaticOptions};
use crate::trace::OptimizerTrace;

pub const CSV_HEADER: &str = "sweep_variable,sweep_value,scheme,mean_sum_rate,mean_outage,trials,seed_base";

pub const DEFAULT_TRIALS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    TransmitPowerDbm,
    TargetRate,
    RegionYM,
    NumUsers,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::TransmitPowerDbm => "transmit_power_dbm",
            SweepVariable::TargetRate => "target_rate",
            SweepVariable::RegionYM => "region_y_m",
            SweepVariable::NumUsers => "num_users",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [
            SweepVariable::TransmitPowerDbm,
            SweepVariable::TargetRate,
            SweepVariable::RegionYM,
            SweepVariable::NumUsers,
        ]
        .into_iter()
        .find(|v| v.name() == s.trim())
        .ok_or_else(|| Error::Config(format!("unknown sweep variable '{s}'")))
    }

    /// `base` with this variable set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        match self {
            SweepVariable::TransmitPowerDbm => cfg.transmit_power_dbm = value,
            SweepVariable::TargetRate => cfg.target_rate_bps_hz = value,
            SweepVariable::RegionYM => cfg.region_y_m = value,
            SweepVariable::NumUsers => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Config(format!("num_users sweep value {value} is not a positive integer")));
                }
                cfg.num_users = value as usize;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub trials: usize,
    pub base: ScenarioConfig,
    pub schemes: Vec<SchemeId>,
    pub seed_base: u64,
}

impl SweepSpec {
    pub fn new(
        variable: SweepVariable,
        values: Vec<f64>,
        trials: usize,
        base: ScenarioConfig,
        schemes: Vec<SchemeId>,
    ) -> Result<Self> {
        let seed_base = base.rng_seed;
        let spec = SweepSpec {
            variable,
            values,
            trials,
            base,
            schemes,
            seed_base,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep has no values".into()));
        }
        let increasing = self.values.windows(2).all(|w| w[0] < w[1]);
        let decreasing = self.values.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep values must be finite and strictly monotone".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        for &v in &self.values {
            self.variable.apply(&self.base, v)?;
        }
        Ok(())
    }

    /// Parses a sweep file (`variable`, `values`, optional `trials`).
    pub fn from_kv_str(text: &str, origin: &str, base: ScenarioConfig) -> Result<Self> {
        let mut variable = None;
        let mut values = None;
        let mut trials = DEFAULT_TRIALS;
        for e in kvfile::parse(text, origin)? {
            let bad = |msg: String| Error::Parse {
                path: origin.to_string(),
                line: e.line,
                msg,
            };
            match e.key.as_str() {
                "variable" => variable = Some(SweepVariable::parse(&e.value).map_err(|err| bad(err.to_string()))?),
                "values" => {
                    values = Some(
                        e.value
                            .split(',')
                            .map(|v| v.trim().parse::<f64>().map_err(|err| bad(format!("bad value '{v}': {err}"))))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "trials" => trials = kvfile::parse_value(&e, origin)?,
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let variable = variable.ok_or_else(|| Error::Config(format!("{origin}: missing `variable`")))?;
        let values = values.ok_or_else(|| Error::Config(format!("{origin}: missing `values`")))?;
        SweepSpec::new(variable, values, trials, base, SchemeId::ALL.to_vec())
    }

    pub fn from_file(path: &Path, base: ScenarioConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv_str(&text, &path.display().to_string(), base)
    }
}

/// Optimizer traces kept from a trial on request.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTraces {
    pub static_trace: Option<OptimizerTrace>,
    pub dynamic_traces: Vec<OptimizerTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    /// Set when the trial belongs to a sweep.
    pub sweep_value: Option<f64>,
    /// One entry per requested scheme, in request order. A failed scheme
    /// carries its error message instead of a report.
    pub reports: Vec<(SchemeId, std::result::Result<RateReport, String>)>,
    pub traces: Option<TrialTraces>,
}

impl TrialResult {
    pub fn report(&self, scheme: SchemeId) -> Option<&RateReport> {
        self.reports
            .iter()
            .find(|(id, _)| *id == scheme)
            .and_then(|(_, r)| r.as_ref().ok())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrialOptions {
    pub static_opts: StaticOptions,
    pub dynamic_opts: DynamicOptions,
    pub fixed_beamforming: FixedBeamforming,
    pub keep_traces: bool,
}

/// Samples one instance from `config` and `seed` and evaluates every scheme
/// on it. Scheme failures are recorded, not propagated.
pub fn run_trial(
    config: &ScenarioConfig,
    seed: u64,
    schemes: &[SchemeId],
    options: &TrialOptions,
) -> Result<TrialResult> {
    let instance = sample_scenario_with_seed(config, seed)?;
    let cable = if schemes.iter().any(|s| s.uses_cable()) {
        Some(composite_channel(&instance)?)
    } else {
        None
    };
    let mut traces = options.keep_traces.then(|| TrialTraces {
        static_trace: None,
        dynamic_traces: Vec::new(),
    });

    let mut reports = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let outcome: Result<RateReport> = match (scheme, &cable) {
            (SchemeId::FixedAntenna, _) => {
                fixed_antenna_channel(&instance)
                    .map(|ch| baselines::fixed_antenna_rates_with(&ch, config, options.fixed_beamforming))
            }
            (_, None) => unreachable!("cable channel is built whenever a cable scheme is requested"),
            (SchemeId::ConventionalLcx, Some(ch)) => baselines::conventional_lcx_rates(ch, config),
            (SchemeId::StaticBinary, Some(ch)) => {
                baselines::binary_activation_optimize(ch, config, BinaryMode::Static).map(|o| o.report)
            }
            (SchemeId::DynamicBinary, Some(ch)) => {
                baselines::binary_activation_optimize(ch, config, BinaryMode::Dynamic).map(|o| o.report)
            }
            (SchemeId::StaticAperture, Some(ch)) => {
                static_opt::optimize_static(ch, config, &options.static_opts).and_then(|r| {
                    let rates = static_opt::static_rates(ch, &r.alpha, config)?;
                    if let Some(t) = traces.as_mut() {
                        t.static_trace = Some(r.trace);
                    }
                    Ok(metrics::build_report(rates, config))
                })
            }
            (SchemeId::DynamicAperture, Some(ch)) => {
                let results = dynamic_opt::optimize_dynamic(ch, config, &options.dynamic_opts);
                let rates = dynamic_opt::dynamic_rates(&results, config);
                if let Some(t) = traces.as_mut() {
                    t.dynamic_traces = results.into_iter().map(|r| r.trace).collect();
                }
                Ok(metrics::build_report(rates, config))
            }
        };
        reports.push((scheme, outcome.map_err(|e| e.to_string())));
    }
    Ok(TrialResult {
        seed,
        sweep_value: None,
        reports,
        traces,
    })
}

/// Aggregate of one scheme at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub scheme: SchemeId,
    pub mean_sum_rate: f64,
    /// Standard error of `mean_sum_rate`.
    pub sum_rate_std_err: f64,
    pub mean_outage: f64,
    /// Trials that produced a report.
    pub trials: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub summaries: Vec<SchemeSummary>,
    /// Per-trial results ordered by trial index.
    pub trials: Vec<TrialResult>,
}

impl SweepPoint {
    pub fn summary(&self, scheme: SchemeId) -> Option<&SchemeSummary> {
        self.summaries.iter().find(|s| s.scheme == scheme)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub seed_base: u64,
    pub trials: usize,
    pub points: Vec<SweepPoint>,
}

fn summarize(scheme: SchemeId, trials: &[TrialResult]) -> SchemeSummary {
    let reports: Vec<&RateReport> = trials.iter().filter_map(|t| t.report(scheme)).collect();
    let n = reports.len();
    let sums: Vec<f64> = reports.iter().map(|r| r.sum_rate_qos_filtered).collect();
    let mean = sums.iter().sum::<f64>() / n as f64;
    let std_err = if n > 1 {
        let var = sums.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    SchemeSummary {
        scheme,
        mean_sum_rate: mean,
        sum_rate_std_err: std_err,
        mean_outage: reports.iter().map(|r| r.outage_fraction).sum::<f64>() / n as f64,
        trials: n,
        failures: trials.len() - n,
    }
}

/// Runs every (value, trial) pair on `threads` workers (0 = all cores).
/// Trial `t` uses seed `seed_base + t` at every sweep value.
pub fn run_sweep(spec: &SweepSpec, threads: usize, options: &TrialOptions) -> Result<SweepTable> {
    spec.validate()?;
    let configs = spec
        .values
        .iter()
        .map(|&v| spec.variable.apply(&spec.base, v))
        .collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|v| (0..spec.trials).map(move |t| (v, t)))
        .collect();
    // collect() on an indexed parallel iterator keeps job order, so the
    // result does not depend on scheduling
    let results: Vec<Result<TrialResult>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(v, t)| {
                let seed = spec.seed_base.wrapping_add(t as u64);
                // traces are kept for the first trial of each value only
                let opts = TrialOptions {
                    keep_traces: options.keep_traces && t == 0,
                    ..*options
                };
                run_trial(&configs[v], seed, &spec.schemes, &opts).map(|mut r| {
                    r.sweep_value = Some(spec.values[v]);
                    r
                })
            })
            .collect()
    });
    let mut results = results.into_iter();
    let mut points = Vec::with_capacity(configs.len());
    for &value in &spec.values {
        let trials = results
            .by_ref()
            .take(spec.trials)
            .collect::<Result<Vec<_>>>()?;
        let summaries = spec.schemes.iter().map(|&s| summarize(s, &trials)).collect();
        points.push(SweepPoint {
            value,
            summaries,
            trials,
        });
    }
    Ok(SweepTable {
        variable: spec.variable,
        seed_base: spec.seed_base,
        trials: spec.trials,
        points,
    })
}

/// Decimal rendering with 9 significant digits and no exponent.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let point = exp + 1; // digits before the decimal point
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (int, frac) = digits.split_at(point as usize);
        format!("{int}.{frac}")
    };
    format!("{sign}{body}")
}

pub fn csv_string(table: &SweepTable) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in &table.points {
        for sum in &p.summaries {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                table.variable.name(),
                format_sig9(p.value),
                sum.scheme,
                format_sig9(sum.mean_sum_rate),
                format_sig9(sum.mean_outage),
                sum.trials,
                table.seed_base
            );
        }
    }
    s
}

pub fn emit_csv(table: &SweepTable, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(table)).map_err(|e| Error::io(path, e))
}

/// One data row of the result CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub sweep_variable: String,
    pub sweep_value: f64,
    pub scheme: SchemeId,
    pub mean_sum_rate: f64,
    pub mean_outage: f64,
    pub trials: usize,
    pub seed_base: u64,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("result CSV header mismatch".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |msg: &str| Error::Parse {
                path: "<csv>".into(),
                line: i + 2,
                msg: msg.into(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad("expected 7 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            Ok(CsvRow {
                sweep_variable: f[0].to_string(),
                sweep_value: num(f[1])?,
                scheme: f[2].parse()?,
                mean_sum_rate: num(f[3])?,
                mean_outage: num(f[4])?,
                trials: f[5].parse().map_err(|_| bad("bad trial count"))?,
                seed_base: f[6].parse().map_err(|_| bad("bad seed"))?,
            })
        })
        .collect()
}
