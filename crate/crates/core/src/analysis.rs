//! Numerical witnesses for the benefit of continuous apertures over binary
//! slot activation: strict-improvement certificates, the perturbations that
//! realize them, the coherence factor and the high-SNR rate-gain bound.
//!
//! Binary patterns are `&[bool]` with `true` marking an open slot. Slot indices
//! in certificates are 0-based.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metrics::{self, ApertureVector};

/// Strictness margin for the improvement conditions.
pub const IMPROVEMENT_MARGIN: f64 = 1e-9;

/// Largest `K` accepted by [`exhaustive_binary_max`].
pub const MAX_EXHAUSTIVE_SLOTS: usize = 24;

const MAX_HALVINGS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImprovementKind {
    /// Partially closing an open slot raises the normalized SNR.
    CloseActive,
    /// Partially opening a closed slot raises the normalized SNR.
    OpenInactive,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementCertificate {
    pub kind: ImprovementKind,
    pub slot: Option<usize>,
    /// `Re{(h^T alpha_bin) conj(h_k)}`.
    pub projection: f64,
    /// `|h^T alpha_bin|^2 / ||alpha_bin||^2` when closing, 0 when opening.
    pub threshold: f64,
}

impl ImprovementCertificate {
    fn none() -> Self {
        ImprovementCertificate {
            kind: ImprovementKind::None,
            slot: None,
            projection: 0.0,
            threshold: 0.0,
        }
    }

    /// How far the triggering inequality holds; 0 for no certificate.
    pub fn margin(&self) -> f64 {
        match self.kind {
            ImprovementKind::CloseActive => self.threshold - self.projection,
            ImprovementKind::OpenInactive => self.projection - self.threshold,
            ImprovementKind::None => 0.0,
        }
    }
}

pub fn binary_to_aperture(pattern: &[bool]) -> ApertureVector {
    ApertureVector::clamped(pattern.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
}

fn sum_power(h: &[Complex64]) -> f64 {
    h.iter().map(|z| z.norm_sqr()).sum()
}

/// `|sum h_k|^2 / (K sum |h_k|^2)`.
pub fn coherence_factor(h: &[Complex64]) -> Result<f64> {
    let power = sum_power(h);
    if h.is_empty() || power <= 0.0 {
        return Err(Error::Domain("coherence factor of an all-zero channel".into()));
    }
    let total: Complex64 = h.iter().sum();
    Ok(total.norm_sqr() / (h.len() as f64 * power))
}

/// Splits `|sum h_k|^2` into the diagonal power and the pairwise cosine terms
/// `2 sum_{i<j} |h_i||h_j| cos(phi_i - phi_j)`.
pub fn cross_term_expansion(h: &[Complex64]) -> (f64, f64) {
    let sum_sq = sum_power(h);
    let mut cross = 0.0;
    for (i, hi) in h.iter().enumerate() {
        for hj in &h[i + 1..] {
            cross += 2.0 * hi.norm() * hj.norm() * (hi.arg() - hj.arg()).cos();
        }
    }
    (sum_sq, cross)
}

/// Scans open slots (closing test) and then closed slots (opening test) in
/// ascending order and returns the first strict witness.
pub fn strict_improvement_check(h: &[Complex64], alpha_bin: &[bool]) -> Result<ImprovementCertificate> {
    strict_improvement_check_with_margin(h, alpha_bin, IMPROVEMENT_MARGIN)
}

pub fn strict_improvement_check_with_margin(
    h: &[Complex64],
    alpha_bin: &[bool],
    margin: f64,
) -> Result<ImprovementCertificate> {
    if h.len() != alpha_bin.len() {
        return Err(Error::Dimension {
            expected: h.len(),
            got: alpha_bin.len(),
        });
    }
    let active = alpha_bin.iter().filter(|&&b| b).count();
    if active == 0 {
        return Err(Error::Usage("binary pattern has no open slot".into()));
    }
    let composite: Complex64 = h.iter().zip(alpha_bin).filter(|(_, &b)| b).map(|(z, _)| z).sum();
    let threshold = composite.norm_sqr() / active as f64;
    let projection = |k: usize| (composite * h[k].conj()).re;

    for k in (0..h.len()).filter(|&k| alpha_bin[k]) {
        let p = projection(k);
        if p < threshold - margin {
            return Ok(ImprovementCertificate {
                kind: ImprovementKind::CloseActive,
                slot: Some(k),
                projection: p,
                threshold,
            });
        }
    }
    for k in (0..h.len()).filter(|&k| !alpha_bin[k]) {
        let p = projection(k);
        if p > margin {
            return Ok(ImprovementCertificate {
                kind: ImprovementKind::OpenInactive,
                slot: Some(k),
                projection: p,
                threshold: 0.0,
            });
        }
    }
    Ok(ImprovementCertificate::none())
}

/// Moves the certified slot by `tau`: `alpha_bin - tau e_k` when closing,
/// `alpha_bin + tau e_k` when opening.
pub fn apply_perturbation(
    alpha_bin: &[bool],
    certificate: &ImprovementCertificate,
    tau: f64,
) -> Result<ApertureVector> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("tau = {tau} outside (0, 1)")));
    }
    let Some(k) = certificate.slot else {
        return Err(Error::Usage("cannot perturb without a certificate".into()));
    };
    if k >= alpha_bin.len() {
        return Err(Error::Index {
            index: k,
            len: alpha_bin.len(),
        });
    }
    let mut alpha: Vec<f64> = alpha_bin.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    match certificate.kind {
        ImprovementKind::CloseActive if alpha_bin[k] => alpha[k] -= tau,
        ImprovementKind::OpenInactive if !alpha_bin[k] => alpha[k] += tau,
        ImprovementKind::None => {
            return Err(Error::Usage("cannot perturb without a certificate".into()))
        }
        _ => {
            return Err(Error::Usage(format!(
                "certificate does not match the state of slot {}",
                k + 1
            )))
        }
    }
    ApertureVector::new(alpha)
}

/// Directional derivative of the normalized SNR at `tau = 0` along the
/// certificate's perturbation.
pub fn perturbation_derivative(
    h: &[Complex64],
    alpha_bin: &[bool],
    certificate: &ImprovementCertificate,
) -> Result<f64> {
    let active = alpha_bin.iter().filter(|&&b| b).count() as f64;
    let composite: Complex64 = h.iter().zip(alpha_bin).filter(|(_, &b)| b).map(|(z, _)| z).sum();
    let projection = certificate.projection;
    match certificate.kind {
        ImprovementKind::CloseActive => {
            Ok(2.0 * (composite.norm_sqr() - active * projection) / (active * active))
        }
        ImprovementKind::OpenInactive => Ok(2.0 * projection / active),
        ImprovementKind::None => Err(Error::Usage("no perturbation direction".into())),
    }
}

/// Halves `tau` from 0.5 until the perturbed normalized SNR strictly exceeds
/// the binary value. Returns the perturbed vector and the accepted `tau`.
pub fn improve_by_perturbation(
    h: &[Complex64],
    alpha_bin: &[bool],
    certificate: &ImprovementCertificate,
) -> Result<(ApertureVector, f64)> {
    let base = metrics::normalized_snr(h, &binary_to_aperture(alpha_bin))?;
    let mut tau = 0.5;
    for _ in 0..MAX_HALVINGS {
        let alpha = apply_perturbation(alpha_bin, certificate, tau)?;
        if metrics::normalized_snr(h, &alpha)? > base {
            return Ok((alpha, tau));
        }
        tau *= 0.5;
    }
    Err(Error::Optimizer(format!(
        "no strictly improving tau found after {MAX_HALVINGS} halvings"
    )))
}

/// High-SNR upper bound on the per-slot rate gain of aperture adjustment
/// over all-open slots, `-log2(coherence)`, in bits/s/Hz before the TDMA
/// prelog.
pub fn rate_gain_bound(h: &[Complex64]) -> Result<f64> {
    let rho = coherence_factor(h)?;
    if rho <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((-rho.log2()).max(0.0))
}

/// Best nonzero binary pattern by enumeration of all `2^K - 1` patterns.
pub fn exhaustive_binary_max(h: &[Complex64]) -> Result<(Vec<bool>, f64)> {
    let k = h.len();
    if k == 0 || k > MAX_EXHAUSTIVE_SLOTS {
        return Err(Error::Domain(format!(
            "exhaustive search needs 1..={MAX_EXHAUSTIVE_SLOTS} slots, got {k}"
        )));
    }
    let mut best = (0u32, f64::NEG_INFINITY);
    for mask in 1u32..(1u32 << k) {
        let mut sum = Complex64::new(0.0, 0.0);
        for (i, z) in h.iter().enumerate() {
            if mask >> i & 1 == 1 {
                sum += z;
            }
        }
        let gamma = sum.norm_sqr() / mask.count_ones() as f64;
        if gamma > best.1 {
            best = (mask, gamma);
        }
    }
    let pattern = (0..k).map(|i| best.0 >> i & 1 == 1).collect();
    Ok((pattern, best.1))
}
