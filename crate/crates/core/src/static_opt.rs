//! Static (shared-aperture) sum-rate maximization.
//!
//! Outer loop: successive convex approximation of each user's rate by a
//! weighted normalized SNR, with the fraction replaced by its quadratic
//! transform. Each outer step leaves a concave quadratic program over the box
//! with one convex quadratic QoS constraint per user.
//!
//! Every surrogate `2 a^T x - b ||x||^2` is an isotropic quadratic, so after
//! dividing the objective by `d` and each constraint by `b_n` the subproblem
//! reads
//!
//! ```text
//! maximize  -||x - p||^2
//! s.t.      ||x - u_n||^2 <= r_n   for every user,   0 <= x <= 1
//! ```
//!
//! with `p = c / 2d`, `u_n = a_n / b_n` and `r_n = ||u_n||^2 - gamma_min / b_n`.
//! The scaled multipliers are dimensionless, which keeps the augmented
//! Lagrangian well conditioned whatever the channel magnitude.

use num_complex::Complex64;

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::metrics::{self, ApertureVector, EPS_FLOOR};
use crate::scenario::ScenarioConfig;
use crate::trace::{OptimizerTrace, TraceEntry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticOptions {
    pub max_iters: usize,
    /// Stop once the sum-rate gain of an iteration drops below `rel_tol` times the sum rate.
    pub rel_tol: f64,
    /// KKT tolerance of the subproblem, in scaled units.
    pub kkt_tol: f64,
    pub max_inner_iters: usize,
    pub multiplier_cap: f64,
}

impl Default for StaticOptions {
    fn default() -> Self {
        StaticOptions {
            max_iters: 50,
            rel_tol: 1e-4,
            kkt_tol: 1e-6,
            max_inner_iters: 5000,
            multiplier_cap: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticState {
    pub alpha: ApertureVector,
    pub weights: Vec<f64>,
    pub betas: Vec<Complex64>,
    /// Scaled QoS multipliers, one per user.
    pub multipliers: Vec<f64>,
    pub iteration: usize,
}

impl StaticState {
    /// Weights and auxiliaries evaluated at `alpha`.
    pub fn at(channel: &ChannelMatrix, alpha: ApertureVector, rho: f64) -> Result<Self> {
        let mut betas = Vec::with_capacity(channel.num_users());
        let mut weights = Vec::with_capacity(channel.num_users());
        for h in channel.columns() {
            let f = metrics::normalized_snr(h, &alpha)?;
            weights.push(sca_weight(f, rho));
            betas.push(beta_update(h, &alpha)?);
        }
        Ok(StaticState {
            alpha,
            weights,
            betas,
            multipliers: vec![0.0; channel.num_users()],
            iteration: 0,
        })
    }
}

/// Slope of `log2(1 + rho f)` at `f`: `rho / (ln 2 (1 + rho f))`.
pub fn sca_weight(f_val: f64, rho: f64) -> f64 {
    rho / (std::f64::consts::LN_2 * (1.0 + rho * f_val))
}

/// `2 Re{conj(beta) h^T alpha} - |beta|^2 ||alpha||^2`.
pub fn qt_surrogate(h: &[Complex64], alpha: &ApertureVector, beta: Complex64) -> Result<f64> {
    let eff = metrics::effective_channel(h, alpha)?;
    Ok(2.0 * (beta.conj() * eff).re - beta.norm_sqr() * alpha.energy())
}

/// Maximizer of the surrogate over `beta`: `h^T alpha / ||alpha||^2`.
pub fn beta_update(h: &[Complex64], alpha: &ApertureVector) -> Result<Complex64> {
    let eff = metrics::effective_channel(h, alpha)?;
    let energy = alpha.energy();
    if energy < EPS_FLOOR {
        return Err(Error::ApertureFloor {
            energy,
            floor: EPS_FLOOR,
        });
    }
    Ok(eff / energy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub alpha: ApertureVector,
    /// Scaled multipliers at exit, reusable as a warm start.
    pub multipliers: Vec<f64>,
    /// False when the QoS constraints could not be met.
    pub feasible: bool,
    /// Weighted surrogate objective `sum_n w_n g_n` at the returned point.
    pub surrogate: f64,
    pub inner_iterations: usize,
}

/// Scaled subproblem data.
struct Scaled {
    p: Vec<f64>,
    centers: Vec<Vec<f64>>,
    radii: Vec<f64>,
}

impl Scaled {
    /// `r_n - ||x - u_n||^2`, nonnegative when constraint `n` holds.
    fn slack(&self, x: &[f64], n: usize) -> f64 {
        self.radii[n] - dist_sq(x, &self.centers[n])
    }

    /// Augmented Lagrangian (to be minimized) and its gradient.
    fn lagrangian(&self, x: &[f64], lambda: &[f64], penalty: f64, grad: &mut [f64]) -> f64 {
        let mut value = 0.0;
        for (k, g) in grad.iter_mut().enumerate() {
            let e = x[k] - self.p[k];
            value += e * e;
            *g = 2.0 * e;
        }
        for n in 0..self.centers.len() {
            let shifted = (lambda[n] - penalty * self.slack(x, n)).max(0.0);
            value += (shifted * shifted - lambda[n] * lambda[n]) / (2.0 * penalty);
            if shifted > 0.0 {
                for (k, g) in grad.iter_mut().enumerate() {
                    *g += 2.0 * shifted * (x[k] - self.centers[n][k]);
                }
            }
        }
        value
    }
}

fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn project_box(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Accelerated projected gradient on the augmented Lagrangian with
/// backtracking on the step. Returns the iterations used.
fn minimize_inner(
    s: &Scaled,
    x: &mut Vec<f64>,
    lambda: &[f64],
    penalty: f64,
    tol: f64,
    max_iters: usize,
) -> usize {
    let k = x.len();
    let mut grad = vec![0.0; k];
    let mut y = x.clone();
    let mut momentum = 1.0_f64;
    let mut lip = 2.0;
    let mut fx = s.lagrangian(x, lambda, penalty, &mut grad);
    let mut candidate = vec![0.0; k];
    let mut cand_grad = vec![0.0; k];
    for it in 1..=max_iters {
        let fy = s.lagrangian(&y, lambda, penalty, &mut grad);
        let fc = loop {
            for i in 0..k {
                candidate[i] = (y[i] - grad[i] / lip).clamp(0.0, 1.0);
            }
            let model: f64 = (0..k)
                .map(|i| {
                    let d = candidate[i] - y[i];
                    grad[i] * d + 0.5 * lip * d * d
                })
                .sum();
            let fc = s.lagrangian(&candidate, lambda, penalty, &mut cand_grad);
            if fc <= fy + model + 1e-15 * fy.abs().max(1.0) || lip > 1e15 {
                break fc;
            }
            lip *= 2.0;
        };
        // restart the momentum whenever the objective goes up
        if fc > fx && momentum > 1.0 {
            y.clone_from(x);
            momentum = 1.0;
            continue;
        }
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let ratio = (momentum - 1.0) / next_momentum;
        for i in 0..k {
            y[i] = candidate[i] + ratio * (candidate[i] - x[i]);
        }
        x.clone_from(&candidate);
        fx = fc;
        momentum = next_momentum;

        // natural residual of the box-constrained stationarity condition
        let residual = (0..k)
            .map(|i| (x[i] - (x[i] - cand_grad[i]).clamp(0.0, 1.0)).abs())
            .fold(0.0, f64::max);
        if residual <= tol {
            return it;
        }
        lip = (lip * 0.9).max(2.0);
    }
    max_iters
}

/// Solves the convexified subproblem around `state` by an augmented
/// Lagrangian over the QoS constraints with an inner projected-gradient
/// solver, warm-started at `state.alpha`.
pub fn solve_subproblem(
    channel: &ChannelMatrix,
    state: &StaticState,
    gamma_min: f64,
    options: &StaticOptions,
) -> Result<SubproblemSolution> {
    let k = channel.num_slots();
    let users = channel.num_users();
    if state.alpha.len() != k {
        return Err(Error::Dimension {
            expected: k,
            got: state.alpha.len(),
        });
    }
    if state.betas.len() != users || state.weights.len() != users {
        return Err(Error::Dimension {
            expected: users,
            got: state.betas.len().min(state.weights.len()),
        });
    }
    if state.betas.iter().any(|b| !b.is_finite()) || gamma_min.is_nan() || gamma_min < 0.0 {
        return Err(Error::Domain("non-finite auxiliary or negative QoS level".into()));
    }

    let surrogate_at = |alpha: &ApertureVector| -> Result<f64> {
        let mut total = 0.0;
        for (n, h) in channel.columns().enumerate() {
            total += state.weights[n] * qt_surrogate(h, alpha, state.betas[n])?;
        }
        Ok(total)
    };

    let a: Vec<Vec<f64>> = channel
        .columns()
        .zip(&state.betas)
        .map(|(h, beta)| h.iter().map(|z| (beta.conj() * z).re).collect())
        .collect();
    let b: Vec<f64> = state.betas.iter().map(|beta| beta.norm_sqr()).collect();
    let d: f64 = state.weights.iter().zip(&b).map(|(w, b)| w * b).sum();
    if d.is_nan() || d <= 0.0 {
        return Ok(SubproblemSolution {
            surrogate: surrogate_at(&state.alpha)?,
            alpha: state.alpha.clone(),
            multipliers: state.multipliers.clone(),
            feasible: gamma_min == 0.0,
            inner_iterations: 0,
        });
    }

    let mut p = vec![0.0; k];
    for (w, a_n) in state.weights.iter().zip(&a) {
        for (pk, ak) in p.iter_mut().zip(a_n) {
            *pk += w * ak / d;
        }
    }
    // A small margin keeps returned points strictly inside the QoS sets so
    // that the solver tolerance cannot leave a user a hair below target.
    let margin = if gamma_min > 0.0 { 10.0 * options.kkt_tol } else { 0.0 };
    let mut centers = Vec::with_capacity(users);
    let mut radii = Vec::with_capacity(users);
    let mut empty = false;
    for n in 0..users {
        if b[n] > 0.0 {
            let u: Vec<f64> = a[n].iter().map(|x| x / b[n]).collect();
            let r = metrics::energy(&u) - gamma_min / b[n] - margin;
            empty |= r < 0.0;
            centers.push(u);
            radii.push(r);
        } else {
            // a zero auxiliary makes the surrogate identically zero
            empty |= gamma_min > 0.0;
            centers.push(vec![0.0; k]);
            radii.push(f64::INFINITY);
        }
    }
    let scaled = Scaled { p, centers, radii };
    let mut x = state.alpha.as_slice().to_vec();
    let mut lambda: Vec<f64> = state.multipliers.iter().map(|m| m.max(0.0)).collect();
    lambda.resize(users, 0.0);
    let mut inner_total = 0;
    let mut feasible = !empty;

    if feasible {
        let tol = options.kkt_tol;
        let mut penalty = 10.0;
        let mut last_violation = f64::INFINITY;
        feasible = false;
        for _ in 0..200 {
            inner_total +=
                minimize_inner(&scaled, &mut x, &lambda, penalty, 0.1 * tol, options.max_inner_iters);
            let mut violation = 0.0_f64;
            let mut complementarity = 0.0_f64;
            for n in 0..users {
                let q = scaled.slack(&x, n);
                if q.is_finite() {
                    lambda[n] = (lambda[n] - penalty * q).max(0.0);
                    violation = violation.max(-q);
                    complementarity = complementarity.max(q.min(lambda[n]).abs());
                }
            }
            if violation <= tol && complementarity <= tol {
                feasible = true;
                break;
            }
            if lambda.iter().any(|&l| l > options.multiplier_cap) {
                break;
            }
            if violation > 0.25 * last_violation {
                penalty = (penalty * 5.0).min(1e8);
            }
            last_violation = violation;
        }
    }

    // Enforce the energy floor by rescaling; an all-closed point becomes
    // the floor-level vector on the most attractive slot.
    let energy = metrics::energy(&x);
    if energy < EPS_FLOOR {
        if energy > 0.0 {
            let scale = (EPS_FLOOR / energy).sqrt() * (1.0 + 1e-12);
            for v in &mut x {
                *v *= scale;
            }
        } else {
            let best = (0..k)
                .max_by(|&i, &j| scaled.p[i].total_cmp(&scaled.p[j]))
                .unwrap_or(0);
            x[best] = EPS_FLOOR.sqrt() * (1.0 + 1e-12);
        }
        project_box(&mut x);
    }

    let alpha = ApertureVector::clamped(x);
    Ok(SubproblemSolution {
        surrogate: surrogate_at(&alpha)?,
        alpha,
        multipliers: lambda,
        feasible,
        inner_iterations: inner_total,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticResult {
    pub alpha: ApertureVector,
    pub trace: OptimizerTrace,
    /// The QoS constraints were dropped after the subproblem proved infeasible.
    pub qos_relaxed: bool,
    pub converged: bool,
}

/// Sum of per-user rates, per-user normalized SNRs.
fn evaluate(channel: &ChannelMatrix, alpha: &ApertureVector, rho: f64) -> Result<(f64, Vec<f64>)> {
    let users = channel.num_users();
    let mut gammas = Vec::with_capacity(users);
    for h in channel.columns() {
        gammas.push(metrics::normalized_snr(h, alpha)?);
    }
    let sum = gammas.iter().map(|&g| metrics::rate_from_snr(g, rho, users)).sum();
    Ok((sum, gammas))
}

fn run(
    channel: &ChannelMatrix,
    rho: f64,
    gamma_min: f64,
    options: &StaticOptions,
) -> Result<Option<(ApertureVector, OptimizerTrace, bool)>> {
    let violation = |gammas: &[f64]| gammas.iter().map(|g| gamma_min - g).fold(0.0, f64::max);
    let mut alpha = ApertureVector::ones(channel.num_slots());
    let (mut objective, gammas) = evaluate(channel, &alpha, rho)?;
    let mut current_violation = violation(&gammas);
    let mut trace = OptimizerTrace::default();
    trace.push(TraceEntry {
        iteration: 0,
        objective,
        surrogate: f64::NAN,
        max_violation: current_violation,
        step_norm: 0.0,
        inner_iterations: 0,
    });
    let mut multipliers = vec![0.0; channel.num_users()];
    let mut converged = false;

    for t in 1..=options.max_iters {
        let mut state = StaticState::at(channel, alpha.clone(), rho)?;
        state.iteration = t;
        state.multipliers.clone_from(&multipliers);
        let sol = solve_subproblem(channel, &state, gamma_min, options)?;
        if !sol.feasible {
            return Ok(None);
        }
        multipliers = sol.multipliers;
        let (next_objective, gammas) = evaluate(channel, &sol.alpha, rho)?;
        let next_violation = violation(&gammas);

        // Keep the iterate unless the step helps: while QoS is unmet a step
        // that reduces the violation counts, afterwards only rate gains do.
        let improves = if current_violation > 0.0 {
            next_violation < current_violation
        } else {
            next_violation == 0.0 && next_objective >= objective
        };
        if !improves {
            converged = true;
            break;
        }
        let step_norm = dist_sq(sol.alpha.as_slice(), alpha.as_slice()).sqrt();
        trace.push(TraceEntry {
            iteration: t,
            objective: next_objective,
            surrogate: sol.surrogate,
            max_violation: next_violation,
            step_norm,
            inner_iterations: sol.inner_iterations,
        });
        let gain = next_objective - objective;
        let was_feasible = current_violation == 0.0;
        alpha = sol.alpha;
        objective = next_objective;
        current_violation = next_violation;
        if was_feasible && gain < options.rel_tol * objective {
            converged = true;
            break;
        }
    }
    Ok(Some((alpha, trace, converged)))
}

/// SCA iteration from the all-open aperture. If some step finds the QoS
/// constraints unattainable, the whole run is repeated without them and
/// `qos_relaxed` is set.
pub fn optimize_static(
    channel: &ChannelMatrix,
    config: &ScenarioConfig,
    options: &StaticOptions,
) -> Result<StaticResult> {
    let rho = config.snr_linear();
    let gamma_min = metrics::qos_threshold(config);
    if let Some((alpha, trace, converged)) = run(channel, rho, gamma_min, options)? {
        return Ok(StaticResult {
            alpha,
            trace,
            qos_relaxed: false,
            converged,
        });
    }
    let (alpha, trace, converged) = run(channel, rho, 0.0, options)?
        .ok_or_else(|| Error::Optimizer("subproblem infeasible without QoS constraints".into()))?;
    Ok(StaticResult {
        alpha,
        trace,
        qos_relaxed: true,
        converged,
    })
}

/// Per-user rates under the shared aperture.
pub fn static_rates(channel: &ChannelMatrix, alpha: &ApertureVector, config: &ScenarioConfig) -> Result<Vec<f64>> {
    channel
        .columns()
        .map(|h| metrics::static_rate(h, alpha, config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::composite_channel;
    use crate::dynamic_opt::{optimize_dynamic_user, DynamicOptions};
    use crate::scenario::sample_scenario_with_seed;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_columns(rng: &mut ChaCha8Rng, k: usize, n: usize) -> Vec<Vec<Complex64>> {
        (0..n)
            .map(|_| {
                (0..k)
                    .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect()
            })
            .collect()
    }

    fn state(channel: &ChannelMatrix, alpha: Vec<f64>, weights: Vec<f64>) -> StaticState {
        let alpha = ApertureVector::new(alpha).unwrap();
        let betas = channel
            .columns()
            .map(|h| beta_update(h, &alpha).unwrap())
            .collect();
        StaticState {
            multipliers: vec![0.0; weights.len()],
            alpha,
            weights,
            betas,
            iteration: 0,
        }
    }

    #[test]
    fn weight_examples() {
        assert_relative_eq!(sca_weight(0.0, 3.0), 3.0 / LN_2, max_relative = 1e-15);
        assert_relative_eq!(sca_weight(1.0, 1.0), 0.721_347_520_444, max_relative = 1e-11);
        let f = 1e6;
        assert_relative_eq!(sca_weight(f, 1.0), 1.0 / (LN_2 * f), max_relative = 1e-5);
    }

    #[test]
    fn surrogate_and_beta_examples() {
        let h = [c(0.4, -1.0), c(-0.2, 0.3), c(1.1, 0.5)];
        let alpha = ApertureVector::new(vec![0.2, 0.9, 0.6]).unwrap();
        assert_eq!(qt_surrogate(&h, &alpha, c(0.0, 0.0)).unwrap(), 0.0);
        let beta = beta_update(&h, &alpha).unwrap();
        assert_relative_eq!(
            qt_surrogate(&h, &alpha, beta).unwrap(),
            metrics::normalized_snr(&h, &alpha).unwrap(),
            max_relative = 1e-12
        );
        assert_eq!(beta_update(&h, &ApertureVector::unit(3, 1)).unwrap(), h[1]);
        let two = [c(1.0, 0.0), c(1.0, 0.0)];
        assert_relative_eq!(beta_update(&two, &ApertureVector::ones(2)).unwrap().re, 1.0);
        let tiny = ApertureVector::new(vec![1e-6, 0.0, 0.0]).unwrap();
        assert!(beta_update(&h, &tiny).is_err());
    }

    #[test]
    fn single_user_subproblem_is_the_clamp() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let cols = random_columns(&mut rng, 7, 1);
            let channel = ChannelMatrix::from_columns(cols.clone()).unwrap();
            let start: Vec<f64> = (0..7).map(|_| rng.random_range(0.2..1.0)).collect();
            let st = state(&channel, start, vec![2.5]);
            let sol = solve_subproblem(&channel, &st, 0.0, &StaticOptions::default()).unwrap();
            assert!(sol.feasible);
            let beta = st.betas[0];
            let expected: Vec<f64> = cols[0]
                .iter()
                .map(|z| ((beta.conj() * z).re / beta.norm_sqr()).clamp(0.0, 1.0))
                .collect();
            for (x, y) in sol.alpha.as_slice().iter().zip(&expected) {
                assert!((x - y).abs() <= 1e-8, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn no_positive_direction_lands_on_energy_floor() {
        let channel = ChannelMatrix::from_columns(vec![vec![c(1.0, 0.0), c(0.5, 0.0)]]).unwrap();
        let st = StaticState {
            alpha: ApertureVector::ones(2),
            weights: vec![1.0],
            betas: vec![c(-1.0, 0.0)],
            multipliers: vec![0.0],
            iteration: 0,
        };
        let sol = solve_subproblem(&channel, &st, 0.0, &StaticOptions::default()).unwrap();
        assert_relative_eq!(sol.alpha.energy(), EPS_FLOOR, max_relative = 1e-9);
    }

    #[test]
    fn matches_grid_search_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.02).collect();
        for _ in 0..10 {
            let cols = random_columns(&mut rng, 3, 2);
            let channel = ChannelMatrix::from_columns(cols.clone()).unwrap();
            let start: Vec<f64> = (0..3).map(|_| rng.random_range(0.3..1.0)).collect();
            let weights = vec![rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)];
            let st = state(&channel, start, weights.clone());
            // a QoS level that binds for the weaker user at the start point
            let g0: Vec<f64> = cols
                .iter()
                .zip(&st.betas)
                .map(|(h, b)| qt_surrogate(h, &st.alpha, *b).unwrap())
                .collect();
            let gamma_min = 0.9 * g0[0].min(g0[1]);
            let opts = StaticOptions::default();
            let sol = solve_subproblem(&channel, &st, gamma_min, &opts).unwrap();
            assert!(sol.feasible);

            let mut best = f64::NEG_INFINITY;
            for &x in &grid {
                for &y in &grid {
                    for &z in &grid {
                        let a = ApertureVector::new(vec![x, y, z]).unwrap();
                        let g: Vec<f64> = cols
                            .iter()
                            .zip(&st.betas)
                            .map(|(h, b)| qt_surrogate(h, &a, *b).unwrap())
                            .collect();
                        if g.iter().all(|&v| v >= gamma_min) {
                            best = best.max(weights[0] * g[0] + weights[1] * g[1]);
                        }
                    }
                }
            }
            assert!((sol.surrogate - best).abs() <= 1e-3, "{} vs grid {best}", sol.surrogate);
            for (h, b) in cols.iter().zip(&st.betas) {
                assert!(qt_surrogate(h, &sol.alpha, *b).unwrap() >= gamma_min);
            }
        }
    }

    #[test]
    fn unattainable_qos_is_flagged() {
        let channel = ChannelMatrix::from_columns(vec![vec![c(1.0, 0.0), c(1.0, 0.0)]]).unwrap();
        let st = state(&channel, vec![1.0, 1.0], vec![1.0]);
        let sol = solve_subproblem(&channel, &st, 5.0, &StaticOptions::default()).unwrap();
        assert!(!sol.feasible);
    }

    #[test]
    fn single_slot_keeps_single_slot_rate() {
        let cfg = ScenarioConfig {
            num_users: 1,
            num_slots: 1,
            ..Default::default()
        };
        let channel = ChannelMatrix::from_columns(vec![vec![c(3e-4, -1e-4)]]).unwrap();
        let r = optimize_static(&channel, &cfg, &StaticOptions::default()).unwrap();
        assert!(r.alpha.as_slice()[0] > 0.0);
        let rate = static_rates(&channel, &r.alpha, &cfg).unwrap()[0];
        let expected = metrics::rate_from_snr(1e-7, cfg.snr_linear(), 1);
        assert_relative_eq!(rate, expected, max_relative = 1e-12);
    }

    #[test]
    fn single_user_matches_alternating_optimizer() {
        let cfg = ScenarioConfig {
            num_users: 1,
            target_rate_bps_hz: 0.0,
            ..Default::default()
        };
        let opts = StaticOptions {
            rel_tol: 1e-12,
            max_iters: 500,
            ..Default::default()
        };
        for seed in 0..5 {
            let inst = sample_scenario_with_seed(&cfg, seed).unwrap();
            let channel = composite_channel(&inst).unwrap();
            let r = optimize_static(&channel, &cfg, &opts).unwrap();
            let stat = static_rates(&channel, &r.alpha, &cfg).unwrap()[0];
            // the all-open run of the alternating optimizer follows the same path
            let dyn_run = optimize_dynamic_user(channel.column(0), 0.0, &DynamicOptions::default());
            let gamma = dyn_run.trace.entries.last().unwrap().objective;
            let dynamic = metrics::rate_from_snr(gamma, cfg.snr_linear(), 1);
            assert!((stat - dynamic).abs() <= 1e-6, "seed {seed}: {stat} vs {dynamic}");
        }
    }

    #[test]
    fn table_defaults_trace_is_monotone_and_qos_sound() {
        let cfg = ScenarioConfig::default();
        let gamma_min = metrics::qos_threshold(&cfg);
        for seed in 0..5 {
            let inst = sample_scenario_with_seed(&cfg, seed).unwrap();
            let channel = composite_channel(&inst).unwrap();
            let r = optimize_static(&channel, &cfg, &StaticOptions::default()).unwrap();
            assert!(r.trace.max_decrease() <= 1e-9, "seed {seed}: {:?}", r.trace.objectives().collect::<Vec<_>>());
            if !r.qos_relaxed {
                for h in channel.columns() {
                    assert!(metrics::normalized_snr(h, &r.alpha).unwrap() >= gamma_min * (1.0 - 1e-6));
                }
            }
        }
    }
}
