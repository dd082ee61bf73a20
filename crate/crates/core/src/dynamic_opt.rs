//! Dynamic (per-user) aperture optimization.
//!
//! With one aperture vector per TDMA slot the sum-rate problem splits into
//! independent single-user problems `max |h^T a|^2 / ||a||^2` over the box.
//! Each is solved by alternating the closed-form auxiliary update
//! `beta = h^T a / ||a||^2` with the separable clamp
//! `a_k = min(1, max(0, Re{conj(beta) h_k} / |beta|^2))`. Both half-steps
//! maximize the same surrogate, so the normalized SNR never decreases.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metrics::{self, ApertureVector, EPS_FLOOR};
use crate::scenario::ScenarioConfig;
use crate::trace::{OptimizerTrace, TraceEntry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicOptions {
    pub max_iters: usize,
    /// Stop once the relative normalized-SNR gain of an iteration drops below this.
    pub rel_tol: f64,
}

impl Default for DynamicOptions {
    fn default() -> Self {
        DynamicOptions {
            max_iters: 500,
            rel_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicState {
    pub alpha: ApertureVector,
    pub beta: Complex64,
    /// `Re{conj(beta) h_k}`.
    pub a_vec: Vec<f64>,
    /// `|beta|^2`.
    pub b_scalar: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicUserResult {
    pub alpha: ApertureVector,
    pub gamma: f64,
    pub trace: OptimizerTrace,
    pub qos_feasible: bool,
    pub converged: bool,
    /// The clamp produced an all-closed vector and the previous iterate was kept.
    pub degenerate: bool,
    /// A restart beat the all-open run.
    pub restart_improved: bool,
}

/// `alpha_k = clamp(a_k / b, 0, 1)`.
pub fn closed_form_alpha(a_vec: &[f64], b_scalar: f64) -> Result<ApertureVector> {
    if !(b_scalar.is_finite() && b_scalar > 0.0) {
        return Err(Error::Domain(format!("clamp divisor b = {b_scalar} must be positive")));
    }
    Ok(ApertureVector::clamped(
        a_vec.iter().map(|a| (a / b_scalar).clamp(0.0, 1.0)).collect(),
    ))
}

/// One auxiliary update: returns `(beta, a, b)` for the current aperture.
fn auxiliary(h: &[Complex64], alpha: &[f64]) -> (Complex64, Vec<f64>, f64) {
    let beta = metrics::dot(h, alpha) / metrics::energy(alpha);
    let a_vec = h.iter().map(|z| (beta.conj() * z).re).collect();
    (beta, a_vec, beta.norm_sqr())
}

fn surrogate(h: &[Complex64], alpha: &[f64], beta: Complex64) -> f64 {
    2.0 * (beta.conj() * metrics::dot(h, alpha)).re - beta.norm_sqr() * metrics::energy(alpha)
}

/// Outcome of one alternating run from a given start.
#[derive(Debug, Clone, PartialEq)]
struct Run {
    alpha: Vec<f64>,
    gamma: f64,
    trace: OptimizerTrace,
    converged: bool,
    degenerate: bool,
}

fn alternate_from(h: &[Complex64], start: Vec<f64>, gamma_min: f64, options: &DynamicOptions) -> Run {
    let mut alpha = start;
    let mut trace = OptimizerTrace::default();
    let mut gamma = metrics::snr_unchecked(h, &alpha);
    trace.push(TraceEntry {
        iteration: 0,
        objective: gamma,
        surrogate: gamma,
        max_violation: (gamma_min - gamma).max(0.0),
        step_norm: 0.0,
        inner_iterations: 0,
    });

    let mut converged = false;
    let mut degenerate = false;
    for t in 1..=options.max_iters {
        let (beta, a_vec, b) = auxiliary(h, &alpha);
        if b == 0.0 {
            degenerate = true;
            converged = true;
            break;
        }
        let next = closed_form_alpha(&a_vec, b).expect("b > 0 checked above");
        // an all-closed clamp output means no slot projects positively;
        // keep the previous iterate
        if next.energy() < EPS_FLOOR {
            degenerate = true;
            converged = true;
            break;
        }
        let next = next.into_inner();
        let next_gamma = metrics::snr_unchecked(h, &next);
        let step_norm = next
            .iter()
            .zip(&alpha)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        trace.push(TraceEntry {
            iteration: t,
            objective: next_gamma,
            surrogate: surrogate(h, &next, beta),
            max_violation: (gamma_min - next_gamma).max(0.0),
            step_norm,
            inner_iterations: 1,
        });
        let gain = next_gamma - gamma;
        alpha = next;
        gamma = next_gamma;
        if gain < options.rel_tol * gamma {
            converged = true;
            break;
        }
    }
    Run {
        alpha,
        gamma,
        trace,
        converged,
        degenerate,
    }
}

/// Start aligned with the phase of slot `k`: the best aperture for a
/// combining phase equal to `arg h_k`, scaled so its largest entry is 1.
fn phase_aligned_start(h: &[Complex64], k: usize) -> Option<Vec<f64>> {
    let mag = h[k].norm();
    if mag == 0.0 {
        return None;
    }
    let rot = h[k].conj() / mag;
    let v: Vec<f64> = h.iter().map(|z| (rot * z).re.max(0.0)).collect();
    let peak = v.iter().cloned().fold(0.0, f64::max);
    (peak > 0.0).then(|| v.iter().map(|x| (x / peak).min(1.0)).collect())
}

/// Alternating optimization for one user.
///
/// The first run starts from all slots open and its trace is the one
/// returned. The alternation only finds a stationary point, so it is
/// repeated from each slot-phase-aligned start and the best normalized SNR
/// is kept; ties keep the earlier run.
pub fn optimize_dynamic_user(
    h: &[Complex64],
    gamma_min: f64,
    options: &DynamicOptions,
) -> DynamicUserResult {
    let k = h.len();
    let power: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    if k == 0 || power == 0.0 {
        let mut trace = OptimizerTrace::default();
        trace.push(TraceEntry {
            iteration: 0,
            objective: 0.0,
            surrogate: 0.0,
            max_violation: gamma_min,
            step_norm: 0.0,
            inner_iterations: 0,
        });
        return DynamicUserResult {
            alpha: ApertureVector::ones(k),
            gamma: 0.0,
            trace,
            qos_feasible: false,
            converged: true,
            degenerate: true,
            restart_improved: false,
        };
    }

    let primary = alternate_from(h, vec![1.0; k], gamma_min, options);
    let mut best: Option<Run> = None;
    for slot in 0..k {
        let Some(start) = phase_aligned_start(h, slot) else {
            continue;
        };
        let run = alternate_from(h, start, gamma_min, options);
        let current = best.as_ref().map_or(primary.gamma, |b| b.gamma);
        if run.gamma > current {
            best = Some(run);
        }
    }

    let restart_improved = best.is_some();
    let chosen = best.as_ref().unwrap_or(&primary);
    DynamicUserResult {
        alpha: ApertureVector::clamped(chosen.alpha.clone()),
        gamma: chosen.gamma,
        qos_feasible: chosen.gamma >= gamma_min,
        converged: primary.converged,
        degenerate: primary.degenerate,
        trace: primary.trace,
        restart_improved,
    }
}

/// Solves every user's subproblem independently.
pub fn optimize_dynamic(
    channel: &crate::channel::ChannelMatrix,
    config: &ScenarioConfig,
    options: &DynamicOptions,
) -> Vec<DynamicUserResult> {
    let gamma_min = metrics::qos_threshold(config);
    channel
        .columns()
        .map(|h| optimize_dynamic_user(h, gamma_min, options))
        .collect()
}

/// Per-user dynamic rates from optimizer results.
pub fn dynamic_rates(results: &[DynamicUserResult], config: &ScenarioConfig) -> Vec<f64> {
    let rho = config.snr_linear();
    results
        .iter()
        .map(|r| metrics::rate_from_snr(r.gamma, rho, config.num_users))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::exhaustive_binary_max;
    use crate::channel::ChannelMatrix;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_channel(rng: &mut ChaCha8Rng, k: usize) -> Vec<Complex64> {
        (0..k)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(closed_form_alpha(&[0.5], 1.0).unwrap().as_slice(), &[0.5]);
        assert_eq!(closed_form_alpha(&[2.0, -1.0], 1.0).unwrap().as_slice(), &[1.0, 0.0]);
        let a = closed_form_alpha(&[0.3, -0.1, 1.5, 0.0], 0.5).unwrap();
        assert_eq!(a.as_slice(), &[0.6, 0.0, 1.0, 0.0]);
        assert!(closed_form_alpha(&[1.0], 0.0).is_err());
        assert!(closed_form_alpha(&[1.0], -2.0).is_err());
    }

    #[test]
    fn clamp_is_idempotent_on_interior_points() {
        let a = closed_form_alpha(&[0.1, 0.4, 0.2], 0.5).unwrap();
        let again = closed_form_alpha(a.as_slice(), 1.0).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn single_slot_fixed_point() {
        let r = optimize_dynamic_user(&[c(0.3, -0.8)], 0.0, &DynamicOptions::default());
        assert_eq!(r.alpha.as_slice(), &[1.0]);
        assert_relative_eq!(r.gamma, 0.73, max_relative = 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn coherent_channel_stays_open() {
        let h = [c(1.0, 0.0); 3];
        let r = optimize_dynamic_user(&h, 0.0, &DynamicOptions::default());
        assert_eq!(r.alpha.as_slice(), &[1.0; 3]);
        assert_relative_eq!(r.gamma, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_channel_is_infeasible() {
        let r = optimize_dynamic_user(&[c(0.0, 0.0); 4], 0.0, &DynamicOptions::default());
        assert_eq!(r.gamma, 0.0);
        assert!(!r.qos_feasible);
    }

    #[test]
    fn monotone_and_dominates_binary() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let h = random_channel(&mut rng, 8);
            let r = optimize_dynamic_user(&h, 0.0, &DynamicOptions::default());
            assert!(r.trace.max_decrease() <= 1e-10 * r.gamma);
            let (_, best_bin) = exhaustive_binary_max(&h).unwrap();
            assert!(r.gamma >= best_bin - 1e-6 * best_bin.max(1.0), "{} < {best_bin}", r.gamma);
            let cap: f64 = h.iter().map(|z| z.norm_sqr()).sum();
            assert!(r.gamma <= cap * (1.0 + 1e-12));
        }
    }

    #[test]
    fn surrogate_is_tight_lower_bound_along_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_channel(&mut rng, 10);
        let r = optimize_dynamic_user(&h, 0.0, &DynamicOptions::default());
        for e in &r.trace.entries[1..] {
            assert!(e.surrogate <= e.objective * (1.0 + 1e-12));
        }
    }

    #[test]
    fn users_are_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cols: Vec<Vec<Complex64>> = (0..3).map(|_| random_channel(&mut rng, 6)).collect();
        let cfg = ScenarioConfig {
            num_users: 3,
            num_slots: 6,
            ..Default::default()
        };
        let forward = optimize_dynamic(
            &ChannelMatrix::from_columns(cols.clone()).unwrap(),
            &cfg,
            &DynamicOptions::default(),
        );
        let mut reversed_cols = cols.clone();
        reversed_cols.reverse();
        let backward = optimize_dynamic(
            &ChannelMatrix::from_columns(reversed_cols).unwrap(),
            &cfg,
            &DynamicOptions::default(),
        );
        for (i, r) in forward.iter().enumerate() {
            assert_eq!(r, &backward[2 - i]);
        }
        let single = optimize_dynamic_user(&cols[1], metrics::qos_threshold(&cfg), &DynamicOptions::default());
        assert_eq!(single, forward[1]);
    }
}
