//! Effective channels, normalized SNR, TDMA rates and the QoS filter.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

/// Smallest admissible aperture energy `||alpha||^2`.
pub const EPS_FLOOR: f64 = 1e-8;

/// Slot aperture coefficients, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApertureVector(Vec<f64>);

impl ApertureVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if let Some((k, v)) = alpha
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::Domain(format!(
                "aperture coefficient {} = {v} outside [0, 1]",
                k + 1
            )));
        }
        Ok(ApertureVector(alpha))
    }

    /// All slots fully open.
    pub fn ones(num_slots: usize) -> Self {
        ApertureVector(vec![1.0; num_slots])
    }

    /// Only slot `k` (0-based) open.
    pub fn unit(num_slots: usize, k: usize) -> Self {
        let mut v = vec![0.0; num_slots];
        v[k] = 1.0;
        ApertureVector(v)
    }

    /// Clamps each entry into `[0, 1]`; non-finite entries become 0.
    pub fn clamped(alpha: Vec<f64>) -> Self {
        ApertureVector(
            alpha
                .into_iter()
                .map(|v| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 })
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `||alpha||_2^2`.
    pub fn energy(&self) -> f64 {
        energy(&self.0)
    }
}

pub(crate) fn energy(alpha: &[f64]) -> f64 {
    alpha.iter().map(|a| a * a).sum()
}

pub(crate) fn dot(h: &[Complex64], alpha: &[f64]) -> Complex64 {
    h.iter().zip(alpha).map(|(h, a)| h * a).sum()
}

/// Normalized SNR without dimension or floor checks.
pub(crate) fn snr_unchecked(h: &[Complex64], alpha: &[f64]) -> f64 {
    dot(h, alpha).norm_sqr() / energy(alpha)
}

pub fn effective_channel(h: &[Complex64], alpha: &ApertureVector) -> Result<Complex64> {
    if h.len() != alpha.len() {
        return Err(Error::Dimension {
            expected: h.len(),
            got: alpha.len(),
        });
    }
    Ok(dot(h, alpha.as_slice()))
}

/// `|h^T alpha|^2 / ||alpha||^2`, invariant to positive scaling of `alpha`.
pub fn normalized_snr(h: &[Complex64], alpha: &ApertureVector) -> Result<f64> {
    let eff = effective_channel(h, alpha)?;
    let energy = alpha.energy();
    if energy < EPS_FLOOR {
        return Err(Error::ApertureFloor {
            energy,
            floor: EPS_FLOOR,
        });
    }
    Ok(eff.norm_sqr() / energy)
}

/// `(1/N) log2(1 + rho * gamma)`.
pub fn rate_from_snr(gamma: f64, rho: f64, num_users: usize) -> f64 {
    (rho * gamma).ln_1p() / std::f64::consts::LN_2 / num_users as f64
}

/// Rate of user `n` when all users share one aperture vector.
pub fn static_rate(h: &[Complex64], alpha: &ApertureVector, config: &ScenarioConfig) -> Result<f64> {
    let gamma = normalized_snr(h, alpha)?;
    Ok(rate_from_snr(gamma, config.snr_linear(), config.num_users))
}

/// Rate of user `n` under its own aperture vector. Same expression as the
/// static rate; the difference lies in which vector the caller passes.
pub fn dynamic_rate(
    h: &[Complex64],
    alpha_n: &ApertureVector,
    config: &ScenarioConfig,
) -> Result<f64> {
    static_rate(h, alpha_n, config)
}

/// Normalized-SNR level equivalent to the target rate:
/// `(2^(N R_min) - 1) / rho`.
pub fn qos_threshold(config: &ScenarioConfig) -> f64 {
    let exponent = config.num_users as f64 * config.target_rate_bps_hz;
    (exponent.exp2() - 1.0) / config.snr_linear()
}

/// Per-user rates with the QoS-filtered sum and outage fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_user_rate: Vec<f64>,
    pub qos_met: Vec<bool>,
    pub sum_rate_qos_filtered: f64,
    pub outage_fraction: f64,
}

/// Users at or above the target rate count toward the sum; the rest are in
/// outage.
pub fn build_report(rates: Vec<f64>, config: &ScenarioConfig) -> RateReport {
    build_report_with_target(rates, config.target_rate_bps_hz)
}

pub fn build_report_with_target(rates: Vec<f64>, target_rate: f64) -> RateReport {
    let qos_met: Vec<bool> = rates.iter().map(|&r| r >= target_rate).collect();
    let sum = rates
        .iter()
        .zip(&qos_met)
        .filter(|(_, ok)| **ok)
        .map(|(r, _)| r)
        .sum();
    let outages = qos_met.iter().filter(|ok| !**ok).count();
    let outage_fraction = if rates.is_empty() {
        0.0
    } else {
        outages as f64 / rates.len() as f64
    };
    RateReport {
        per_user_rate: rates,
        qos_met,
        sum_rate_qos_filtered: sum,
        outage_fraction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Config with `rho = 1` and the given user count.
    fn unit_snr(num_users: usize) -> ScenarioConfig {
        ScenarioConfig {
            transmit_power_dbm: -64.0,
            noise_power_dbm: -64.0,
            num_users,
            ..Default::default()
        }
    }

    #[test]
    fn aperture_box_enforced() {
        assert!(ApertureVector::new(vec![0.0, 0.5, 1.0]).is_ok());
        assert!(ApertureVector::new(vec![1.1]).is_err());
        assert!(ApertureVector::new(vec![-0.1]).is_err());
        assert!(ApertureVector::new(vec![f64::NAN]).is_err());
        assert_eq!(ApertureVector::clamped(vec![2.0, -1.0, 0.3]).as_slice(), &[1.0, 0.0, 0.3]);
    }

    #[test]
    fn effective_channel_cases() {
        let h = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)];
        assert_eq!(effective_channel(&h, &ApertureVector::unit(3, 1)).unwrap(), h[1]);
        assert_eq!(
            effective_channel(&h, &ApertureVector::new(vec![0.0; 3]).unwrap()).unwrap(),
            c(0.0, 0.0)
        );
        assert_eq!(effective_channel(&h, &ApertureVector::ones(3)).unwrap(), c(0.0, 1.0));
        assert!(matches!(
            effective_channel(&h, &ApertureVector::ones(2)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn normalized_snr_cases() {
        let h = [c(0.3, -0.4), c(2.0, 1.0)];
        assert_relative_eq!(
            normalized_snr(&h, &ApertureVector::unit(2, 0)).unwrap(),
            0.25,
            max_relative = 1e-15
        );
        let ones = [c(1.0, 0.0), c(1.0, 0.0)];
        assert_relative_eq!(normalized_snr(&ones, &ApertureVector::ones(2)).unwrap(), 2.0);
        let tiny = ApertureVector::new(vec![1e-5, 0.0]).unwrap();
        assert!(matches!(normalized_snr(&h, &tiny), Err(Error::ApertureFloor { .. })));
    }

    #[test]
    fn rate_examples() {
        let h = [c(1.0, 0.0)];
        let a = ApertureVector::ones(1);
        assert_relative_eq!(static_rate(&h, &a, &unit_snr(1)).unwrap(), 1.0, max_relative = 1e-12);
        let r4 = static_rate(&h, &a, &unit_snr(4)).unwrap();
        assert_relative_eq!(r4, 0.25, max_relative = 1e-12);
        let h3 = [c(3f64.sqrt(), 0.0)];
        assert_relative_eq!(dynamic_rate(&h3, &a, &unit_snr(4)).unwrap(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn qos_threshold_examples() {
        let cfg = ScenarioConfig {
            target_rate_bps_hz: 0.0,
            ..Default::default()
        };
        assert_eq!(qos_threshold(&cfg), 0.0);
        let cfg = ScenarioConfig::default();
        assert_relative_eq!(qos_threshold(&cfg), 3.0 / cfg.snr_linear(), max_relative = 1e-12);
        let cfg = ScenarioConfig {
            num_users: 2,
            target_rate_bps_hz: 1.0,
            ..Default::default()
        };
        assert_relative_eq!(qos_threshold(&cfg), 3.0 / cfg.snr_linear(), max_relative = 1e-12);
    }

    #[test]
    fn report_filters_and_counts() {
        let cfg = ScenarioConfig::default();
        let r = build_report(vec![0.6, 0.4, 0.7, 0.1], &cfg);
        assert_relative_eq!(r.sum_rate_qos_filtered, 1.3, max_relative = 1e-12);
        assert_eq!(r.outage_fraction, 0.5);
        assert_eq!(r.qos_met, vec![true, false, true, false]);
        let r = build_report(vec![0.6, 0.9, 0.5, 1.0], &cfg);
        assert_eq!(r.outage_fraction, 0.0);
        assert_relative_eq!(r.sum_rate_qos_filtered, 3.0, max_relative = 1e-12);
        let r = build_report(vec![0.1, 0.2, 0.3, 0.49], &cfg);
        assert_eq!(r.outage_fraction, 1.0);
        assert_eq!(r.sum_rate_qos_filtered, 0.0);
    }

    #[test]
    fn rate_increases_with_power() {
        let h = [c(1e-3, 2e-3), c(-5e-4, 1e-4)];
        let a = ApertureVector::ones(2);
        let mut prev = -1.0;
        for p in [-10.0, 0.0, 10.0, 20.0, 30.0] {
            let cfg = ScenarioConfig {
                transmit_power_dbm: p,
                ..Default::default()
            };
            let r = static_rate(&h, &a, &cfg).unwrap();
            assert!(r > prev);
            prev = r;
        }
    }
}
