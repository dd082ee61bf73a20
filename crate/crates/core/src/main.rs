use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lcx_aperture::baselines::{parse_scheme_list, FixedBeamforming};
use lcx_aperture::channel::{composite_channel, fixed_antenna_channel};
use lcx_aperture::harness::{self, SweepSpec, TrialOptions};
use lcx_aperture::scenario::{sample_scenario_with_seed, ScenarioConfig};
use lcx_aperture::{verify, Error};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "lcx-aperture", version, about = "Leaky-cable slot-aperture downlink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a parameter sweep and write the aggregated CSV.
    Simulate {
        /// Scenario config (key = value); defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Sweep file with `variable`, `values` and `trials`.
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Base seed; trial t uses seed + t.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the sweep file's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated scheme list (default: all six).
        #[arg(long)]
        schemes: Option<String>,
        /// Worker threads, 0 for one per core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// `uniform` or `mrt`.
        #[arg(long, default_value = "uniform")]
        fixed_beamforming: String,
        /// Write optimizer traces of the first trial at each sweep value here.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
    /// Run the property suites and report pass/fail per check.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Sample one instance and write its channel matrix as CSV.
    ChannelDump {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Instance seed (default: the config's rng_seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Dump the fixed-array channel instead of the cable channel.
        #[arg(long)]
        fixed: bool,
    },
}

/// Error tagged with the exit code it maps to.
struct Failure(u8, Error);

fn config_err(e: Error) -> Failure {
    Failure(EXIT_CONFIG, e)
}

fn runtime_err(e: Error) -> Failure {
    Failure(EXIT_RUNTIME, e)
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, Failure> {
    match path {
        Some(p) => ScenarioConfig::from_file(p).map_err(config_err),
        None => Ok(ScenarioConfig::default()),
    }
}

fn write_traces(dir: &Path, table: &harness::SweepTable) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    for (i, point) in table.points.iter().enumerate() {
        let Some(traces) = point.trials.first().and_then(|t| t.traces.as_ref()) else {
            continue;
        };
        if let Some(t) = &traces.static_trace {
            t.write_csv(&dir.join(format!("static_value{i}.csv")))?;
        }
        for (n, t) in traces.dynamic_traces.iter().enumerate() {
            t.write_csv(&dir.join(format!("dynamic_value{i}_user{}.csv", n + 1)))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            config,
            sweep,
            out,
            seed,
            trials,
            schemes,
            threads,
            fixed_beamforming,
            trace_dir,
        } => {
            let base = load_config(config.as_deref())?;
            let mut spec = SweepSpec::from_file(&sweep, base).map_err(config_err)?;
            if let Some(seed) = seed {
                spec.seed_base = seed;
            }
            if let Some(trials) = trials {
                spec.trials = trials;
            }
            if let Some(list) = schemes {
                spec.schemes = parse_scheme_list(&list).map_err(config_err)?;
            }
            spec.validate().map_err(config_err)?;
            let options = TrialOptions {
                fixed_beamforming: fixed_beamforming
                    .parse::<FixedBeamforming>()
                    .map_err(config_err)?,
                keep_traces: trace_dir.is_some(),
                ..Default::default()
            };
            let table = harness::run_sweep(&spec, threads, &options).map_err(runtime_err)?;
            for point in &table.points {
                for s in point.summaries.iter().filter(|s| s.failures > 0) {
                    eprintln!(
                        "warning: {} failed in {} trial(s) at {} = {}",
                        s.scheme,
                        s.failures,
                        table.variable.name(),
                        point.value
                    );
                }
            }
            harness::emit_csv(&table, &out).map_err(runtime_err)?;
            if let Some(dir) = trace_dir {
                write_traces(&dir, &table).map_err(runtime_err)?;
            }
            Ok(())
        }
        Command::Verify { seed } => {
            let outcomes = verify::run_all(seed).map_err(runtime_err)?;
            let mut all = true;
            for o in &outcomes {
                println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
                all &= o.passed;
            }
            if all {
                Ok(())
            } else {
                Err(Failure(
                    EXIT_VERIFY,
                    Error::Optimizer("property verification failed".into()),
                ))
            }
        }
        Command::ChannelDump {
            config,
            out,
            seed,
            fixed,
        } => {
            let cfg = load_config(config.as_deref())?;
            let seed = seed.unwrap_or(cfg.rng_seed);
            let instance = sample_scenario_with_seed(&cfg, seed).map_err(runtime_err)?;
            let matrix = if fixed {
                fixed_antenna_channel(&instance)
            } else {
                composite_channel(&instance)
            }
            .map_err(runtime_err)?;
            matrix.write_csv(&out).map_err(runtime_err)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, e)) => {
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
