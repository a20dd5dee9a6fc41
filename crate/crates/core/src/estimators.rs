//! Drift estimators computed from a simulated path.
//!
//! For H > 1/2 the least-squares estimator is defined through a divergence
//! integral that cannot be read off a single path; it is available here only
//! in oracle form, with the true drift entering the correction term. The
//! moment-inversion estimator [`theta_tilde`] uses the path alone.

use serde::{Deserialize, Serialize};

use crate::error::{FouError, Result};
use crate::fbm::{HurstParameter, SamplePath};
use crate::fou::integrated_square;
use crate::quadrature::{power_exp_integral, ExpLinear};
use crate::special::gamma;

/// Integrated squares below this are treated as zero.
pub const DEGENERATE_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "tilde")]
    ThetaTilde,
    #[serde(rename = "hat-oracle")]
    ThetaHatOracle,
    #[serde(rename = "hat-prime")]
    ThetaHatPrime,
    #[serde(rename = "hat-ito")]
    ThetaHatIto,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::ThetaTilde => "tilde",
            EstimatorKind::ThetaHatOracle => "hat-oracle",
            EstimatorKind::ThetaHatPrime => "hat-prime",
            EstimatorKind::ThetaHatIto => "hat-ito",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::ThetaTilde, Self::ThetaHatOracle, Self::ThetaHatPrime, Self::ThetaHatIto]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub estimator: EstimatorKind,
    pub estimate: f64,
    pub t_max: f64,
    pub h: Option<f64>,
    /// FNV-1a digest of the path, its grid and the estimator inputs.
    pub inputs_digest: String,
}

struct Digest(u64);

impl Digest {
    fn new() -> Self {
        Digest(0xcbf2_9ce4_8422_2325)
    }

    fn bytes(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn f64(&mut self, x: f64) {
        self.bytes(&x.to_bits().to_le_bytes());
    }

    fn finish(self) -> String {
        format!("{:016x}", self.0)
    }
}

fn result(
    kind: EstimatorKind,
    estimate: f64,
    path: &SamplePath,
    h: Option<HurstParameter>,
    extra: &[f64],
) -> EstimationResult {
    let h = h.or(path.hurst()).map(f64::from);
    let mut d = Digest::new();
    d.bytes(kind.name().as_bytes());
    d.f64(path.grid().t_max());
    d.bytes(&(path.grid().n_steps() as u64).to_le_bytes());
    d.f64(h.unwrap_or(f64::NAN));
    for &x in extra {
        d.f64(x);
    }
    for &v in path.values() {
        d.f64(v);
    }
    EstimationResult {
        estimator: kind,
        estimate,
        t_max: path.grid().t_max(),
        h,
        inputs_digest: d.finish(),
    }
}

fn nondegenerate_square(path: &SamplePath) -> Result<f64> {
    let is = integrated_square(path);
    if !(is >= DEGENERATE_THRESHOLD) {
        return Err(FouError::DegeneratePath { integrated_square: is });
    }
    Ok(is)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(FouError::domain(format!("sigma must be positive, got {sigma}")))
    }
}

/// θ̃_T = ((1/(σ² H Γ(2H) T)) ∫_0^T X_t² dt)^{-1/(2H)}.
pub fn theta_tilde(path: &SamplePath, sigma: f64, h: HurstParameter) -> Result<EstimationResult> {
    h.require_above_half("theta_tilde")?;
    check_sigma(sigma)?;
    let is = nondegenerate_square(path)?;
    let hv = h.value();
    let t = path.grid().t_max();
    let scaled = is / (sigma * sigma * hv * gamma(2.0 * hv) * t);
    let estimate = scaled.powf(-1.0 / (2.0 * hv));
    Ok(result(EstimatorKind::ThetaTilde, estimate, path, Some(h), &[sigma]))
}

/// α_H ∫_0^T ∫_0^t ξ^{2H-2} e^{-θξ} dξ dt, reduced by Fubini to
/// α_H ∫_0^T (T - ξ) ξ^{2H-2} e^{-θξ} dξ.
pub fn correction_integral(theta: f64, h: HurstParameter, t_max: f64, tol: f64) -> Result<f64> {
    h.require_above_half("correction_integral")?;
    if !(theta > 0.0) {
        return Err(FouError::domain(format!("theta must be positive, got {theta}")));
    }
    if !(t_max > 0.0) {
        return Ok(0.0);
    }
    let alpha = h.alpha();
    let g = ExpLinear { c0: t_max, c1: -1.0, rate: -theta, shift: 0.0 };
    let r = power_exp_integral(2.0 * h.value() - 2.0, g, t_max, tol / alpha);
    Ok(alpha * r.value)
}

/// Tolerance used when the oracle estimator evaluates its own correction.
pub fn default_correction_tol(t_max: f64) -> f64 {
    1e-11 * t_max.max(1.0)
}

/// Least-squares estimator in its closed form
/// `-X_T²/(2 ∫X²) + σ² α_H ∫_0^T∫_0^t ξ^{2H-2} e^{-θξ} dξ dt / ∫X²`.
/// Needs the true drift and is meant for simulation studies only.
pub fn theta_hat_oracle(
    path: &SamplePath,
    sigma: f64,
    h: HurstParameter,
    theta_true: f64,
) -> Result<EstimationResult> {
    let t = path.grid().t_max();
    let correction = correction_integral(theta_true, h, t, default_correction_tol(t))?;
    theta_hat_oracle_with_correction(path, sigma, h, theta_true, correction)
}

/// [`theta_hat_oracle`] with a precomputed [`correction_integral`].
pub fn theta_hat_oracle_with_correction(
    path: &SamplePath,
    sigma: f64,
    h: HurstParameter,
    theta_true: f64,
    correction: f64,
) -> Result<EstimationResult> {
    h.require_above_half("theta_hat_oracle")?;
    check_sigma(sigma)?;
    let is = nondegenerate_square(path)?;
    let xt = path.last();
    let estimate = -xt * xt / (2.0 * is) + sigma * sigma * correction / is;
    Ok(result(
        EstimatorKind::ThetaHatOracle,
        estimate,
        path,
        Some(h),
        &[sigma, theta_true, correction],
    ))
}

/// Pathwise (Stratonovich-type) estimator X_T² / (2 ∫_0^T X_t² dt).
pub fn theta_hat_prime(path: &SamplePath) -> Result<EstimationResult> {
    let is = nondegenerate_square(path)?;
    let xt = path.last();
    Ok(result(EstimatorKind::ThetaHatPrime, xt * xt / (2.0 * is), path, None, &[]))
}

/// Forward Riemann sum `Σ X_{t_k} (X_{t_{k+1}} - X_{t_k})`.
pub fn forward_sum(path: &SamplePath) -> f64 {
    path.values().windows(2).map(|w| w[0] * (w[1] - w[0])).sum()
}

/// Least-squares estimator for H = 1/2, `-∫X dX / ∫X² dt` with the Itô
/// integral as a forward sum. Forward sums do not converge to the divergence
/// integral for H > 1/2, so other Hurst indices are rejected.
pub fn theta_hat_ito(path: &SamplePath) -> Result<EstimationResult> {
    if let Some(h) = path.hurst() {
        if !h.is_brownian() {
            return Err(FouError::domain(format!("theta_hat_ito requires H = 1/2, got H = {h}")));
        }
    }
    let is = nondegenerate_square(path)?;
    Ok(result(EstimatorKind::ThetaHatIto, -forward_sum(path) / is, path, None, &[]))
}

/// Realised F_T = -(θ̂ - θ) ∫_0^T X_t² dt / √T.
pub fn f_statistic(path: &SamplePath, theta_hat: f64, theta_true: f64) -> Result<f64> {
    let is = nondegenerate_square(path)?;
    Ok(-(theta_hat - theta_true) * is / path.grid().t_max().sqrt())
}
