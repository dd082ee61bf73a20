//! Reduced-size property suites behind the `verify` subcommand.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analysis::{self, ImprovementKind};
use crate::channel::composite_channel;
use crate::dynamic_opt::{optimize_dynamic_user, DynamicOptions};
use crate::error::Result;
use crate::metrics::{self, ApertureVector};
use crate::scenario::{sample_scenario_with_seed, ScenarioConfig};
use crate::static_opt::{self, StaticOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, failures: usize, total: usize) -> Self {
        CheckOutcome {
            name,
            passed: failures == 0,
            detail: format!("{}/{} cases hold", total - failures, total),
        }
    }
}

fn circular_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Single-user cable channel of a sampled instance.
fn user_channel(config: &ScenarioConfig, seed: u64) -> Result<Vec<Complex64>> {
    let instance = sample_scenario_with_seed(config, seed)?;
    Ok(composite_channel(&instance)?.column(0).to_vec())
}

fn single_user(num_slots: usize) -> ScenarioConfig {
    ScenarioConfig {
        num_slots,
        num_users: 1,
        slot_spacing_m: ScenarioConfig::default().region_x_m / num_slots as f64,
        ..Default::default()
    }
}

/// Continuous optimum never below the best binary pattern.
pub fn check_dominance(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let cfg = single_user(10);
    let mut failures = 0;
    for i in 0..instances {
        let h = user_channel(&cfg, seed.wrapping_add(i as u64))?;
        let (_, best) = analysis::exhaustive_binary_max(&h)?;
        let gamma = optimize_dynamic_user(&h, 0.0, &DynamicOptions::default()).gamma;
        if gamma < best - 1e-6 * best {
            failures += 1;
        }
    }
    Ok(CheckOutcome::new("continuous apertures dominate binary activation", failures, instances))
}

/// Certified perturbations strictly improve the normalized SNR.
pub fn check_strict_improvement(seed: u64, pairs: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut found = 0;
    while found < pairs {
        let k = rng.random_range(2..=12);
        let h: Vec<Complex64> = (0..k).map(|_| circular_normal(&mut rng)).collect();
        let pattern: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
        if !pattern.iter().any(|b| *b) {
            continue;
        }
        let cert = analysis::strict_improvement_check(&h, &pattern)?;
        if cert.kind == ImprovementKind::None {
            continue;
        }
        found += 1;
        let base = metrics::normalized_snr(&h, &analysis::binary_to_aperture(&pattern))?;
        match analysis::improve_by_perturbation(&h, &pattern, &cert) {
            Ok((alpha, _)) if metrics::normalized_snr(&h, &alpha)? > base => {}
            _ => failures += 1,
        }
    }
    Ok(CheckOutcome::new("certified perturbations strictly improve", failures, pairs))
}

/// High-SNR gain over all-open slots within the coherence bound.
pub fn check_rate_gain_bound(seed: u64, channels: usize) -> Result<CheckOutcome> {
    let cfg = ScenarioConfig {
        transmit_power_dbm: ScenarioConfig::default().noise_power_dbm + 80.0,
        ..single_user(50)
    };
    let rho = cfg.snr_linear();
    let mut failures = 0;
    for i in 0..channels {
        let h = user_channel(&cfg, seed.wrapping_add(i as u64))?;
        let ones = metrics::normalized_snr(&h, &ApertureVector::ones(h.len()))?;
        let best = optimize_dynamic_user(&h, 0.0, &DynamicOptions::default()).gamma;
        let gain = metrics::rate_from_snr(best, rho, 1) - metrics::rate_from_snr(ones, rho, 1);
        if gain > analysis::rate_gain_bound(&h)? + 0.05 || gain < -1e-9 {
            failures += 1;
        }
    }
    Ok(CheckOutcome::new("rate gain within the coherence bound", failures, channels))
}

/// The quadratic transform is tight at its optimal auxiliary and a lower
/// bound elsewhere.
pub fn check_quadratic_transform(seed: u64, pairs: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..pairs {
        let k = rng.random_range(1..=20);
        let h: Vec<Complex64> = (0..k).map(|_| circular_normal(&mut rng)).collect();
        let alpha = ApertureVector::clamped((0..k).map(|_| rng.random_range(0.05..=1.0)).collect());
        let gamma = metrics::normalized_snr(&h, &alpha)?;
        let beta = static_opt::beta_update(&h, &alpha)?;
        let tight = static_opt::qt_surrogate(&h, &alpha, beta)?;
        let mut ok = (tight - gamma).abs() <= 1e-10 * gamma.max(f64::MIN_POSITIVE);
        for _ in 0..20 {
            let other = circular_normal(&mut rng) * 2.0;
            ok &= static_opt::qt_surrogate(&h, &alpha, other)? <= gamma * (1.0 + 1e-12);
        }
        failures += usize::from(!ok);
    }
    Ok(CheckOutcome::new("quadratic transform is a tight minorant", failures, pairs))
}

/// Optimizer traces never decrease.
pub fn check_monotone_traces(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let cfg = ScenarioConfig::default();
    let mut failures = 0;
    for i in 0..instances {
        let instance = sample_scenario_with_seed(&cfg, seed.wrapping_add(i as u64))?;
        let channel = composite_channel(&instance)?;
        let stat = static_opt::optimize_static(&channel, &cfg, &StaticOptions::default())?;
        let mut ok = stat.trace.max_decrease() <= 1e-9;
        for h in channel.columns() {
            let r = optimize_dynamic_user(h, 0.0, &DynamicOptions::default());
            ok &= r.converged && r.trace.max_decrease() <= 1e-10;
        }
        failures += usize::from(!ok);
    }
    Ok(CheckOutcome::new("optimizer traces are monotone", failures, instances))
}

pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_dominance(seed, 20)?,
        check_strict_improvement(seed, 100)?,
        check_rate_gain_bound(seed, 40)?,
        check_quadratic_transform(seed, 200)?,
        check_monotone_traces(seed, 5)?,
    ])
}
