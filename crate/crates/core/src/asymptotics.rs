//! Asymptotic constants of the drift estimators, with numerical oracles for
//! the ones defined by integrals.
//!
//! Domains are enforced strictly: the CLT constants need `1/2 <= H < 3/4`
//! and everything built from Γ(2H - 1) needs `H > 1/2`.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FouError, Result};
use crate::fou::FouParams;
use crate::quadrature::{power_exp_integral, ExpLinear};
use crate::rng::{derive_seed, stream};
use crate::special::gamma;

fn check_range(h: f64, lo_inclusive: bool, hi: f64, what: &str) -> Result<()> {
    let lo_ok = if lo_inclusive { h >= 0.5 } else { h > 0.5 };
    if lo_ok && h < hi {
        Ok(())
    } else {
        let lo = if lo_inclusive { "[1/2" } else { "(1/2" };
        let hi = if hi == 0.75 { "3/4)" } else { "1)" };
        Err(FouError::domain(format!("{what} requires H in {lo}, {hi}, got H = {h}")))
    }
}

/// α_H = H(2H - 1).
pub fn alpha_h(h: f64) -> f64 {
    h * (2.0 * h - 1.0)
}

/// Asymptotic variance factor of the least-squares estimator,
/// `(4H-1)(1 + Γ(3-4H)Γ(4H-1) / (Γ(2-2H)Γ(2H)))`.
pub fn sigma_h_squared(h: f64) -> Result<f64> {
    check_range(h, true, 0.75, "sigma_h_squared")?;
    let ratio = gamma(3.0 - 4.0 * h) * gamma(4.0 * h - 1.0) / (gamma(2.0 - 2.0 * h) * gamma(2.0 * h));
    Ok((4.0 * h - 1.0) * (1.0 + ratio))
}

/// Limit of E(F_T²) for θ = σ = 1,
/// `H²(4H-1)(Γ(2H)² + Γ(2H)Γ(3-4H)Γ(4H-1)/Γ(2-2H))`.
pub fn delta_h(h: f64) -> Result<f64> {
    check_range(h, true, 0.75, "delta_h")?;
    let g2h = gamma(2.0 * h);
    let cross = g2h * gamma(3.0 - 4.0 * h) * gamma(4.0 * h - 1.0) / gamma(2.0 - 2.0 * h);
    Ok(h * h * (4.0 * h - 1.0) * (g2h * g2h + cross))
}

/// `(8H-2)Γ(2H-1)² + (16H-4)Γ(2H-1)Γ(3-4H)Γ(4H-2)/Γ(2-2H)`.
pub fn gamma_h(h: f64) -> Result<f64> {
    check_range(h, false, 0.75, "gamma_h")?;
    let g = gamma(2.0 * h - 1.0);
    let cross = g * gamma(3.0 - 4.0 * h) * gamma(4.0 * h - 2.0) / gamma(2.0 - 2.0 * h);
    Ok((8.0 * h - 2.0) * g * g + (16.0 * h - 4.0) * cross)
}

/// `(4H-1)Γ(2H-1)Γ(3-4H)Γ(4H-2)/Γ(2-2H)`.
pub fn f_h(h: f64) -> Result<f64> {
    check_range(h, false, 0.75, "f_h")?;
    Ok((4.0 * h - 1.0) * gamma(2.0 * h - 1.0) * gamma(3.0 - 4.0 * h) * gamma(4.0 * h - 2.0)
        / gamma(2.0 - 2.0 * h))
}

/// Closed form of `∫_{[0,∞)³} e^{-x-|y-z|} z^{2H-2} |x-y|^{2H-2} dx dy dz`.
pub fn d_h_closed(h: f64) -> Result<f64> {
    let f = f_h(h)?;
    let g = gamma(2.0 * h - 1.0);
    Ok(f + (2.0 * h - 0.5) * g * g)
}

/// Integrand of the triple integral defining d_H.
pub fn d_h_integrand(h: f64, x: f64, y: f64, z: f64) -> f64 {
    ln_integrand(h, x, z, x - y, y - z).exp()
}

/// ln of the integrand with the differences `x - y` and `y - z` supplied,
/// since forming them from nearby values can round tiny gaps to zero.
fn ln_integrand(h: f64, x: f64, z: f64, x_minus_y: f64, y_minus_z: f64) -> f64 {
    let p = 2.0 * h - 2.0;
    -x - y_minus_z.abs() + p * (z.ln() + x_minus_y.abs().ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

const DH_CHUNKS: u64 = 64;

/// Proposal for the d_H integral. The domain splits into `y < x` and
/// `y > x`, each chosen with probability 1/2.
///
/// On `y < x` the gap `x - y`, then `z`, then `y | z` are drawn from the
/// exact conditional laws of the integrand, so the weight is constant.
///
/// On `y > x` write `z = r t`, `y - x = r (1 - t)`, `c = 1 - 2t`. Given `t`,
/// `r` and `x` are again drawn exactly; `t` itself comes from an equal
/// mixture of Beta(2H-1, 2H-1), matching the endpoint singularities, and a
/// law with density `(3-4H)|c|^{2-4H}`, matching the singularity at
/// `t = 1/2`. Weights are therefore bounded for every H in (1/2, 3/4).
struct DhProposal {
    h: f64,
    k: f64,
    beta_side: Gamma<f64>,
    gap: Gamma<f64>,
    z_low: Gamma<f64>,
    z_high: Gamma<f64>,
    z_high_prob: f64,
    r_low: Gamma<f64>,
    r_high: Gamma<f64>,
    r_mix_prob: f64,
    exp2: Exp<f64>,
    ln_beta_norm: f64,
    ln_gamma_k: f64,
    ln_gamma_k1: f64,
    ln_gamma_gap: f64,
    ln_z_norm: f64,
}

impl DhProposal {
    fn new(h: f64) -> Self {
        let a = 2.0 * h - 1.0;
        let k = 4.0 * h - 2.0;
        let g_a = gamma(a);
        let g_2h = gamma(2.0 * h);
        let g_k = gamma(k);
        let g_k1 = gamma(k + 1.0);
        DhProposal {
            h,
            k,
            beta_side: Gamma::new(a, 1.0).expect("positive shape"),
            gap: Gamma::new(a, 1.0).expect("positive shape"),
            z_low: Gamma::new(a, 1.0).expect("positive shape"),
            z_high: Gamma::new(2.0 * h, 1.0).expect("positive shape"),
            z_high_prob: g_2h / (g_2h + 0.5 * g_a),
            r_low: Gamma::new(k, 1.0).expect("positive shape"),
            r_high: Gamma::new(k + 1.0, 1.0).expect("positive shape"),
            r_mix_prob: g_k1 / (g_k1 + 0.5 * g_k),
            exp2: Exp::new(2.0).expect("positive rate"),
            ln_beta_norm: (g_a * g_a / g_k).ln(),
            ln_gamma_k: g_k.ln(),
            ln_gamma_k1: g_k1.ln(),
            ln_gamma_gap: g_a.ln(),
            ln_z_norm: (g_2h + 0.5 * g_a).ln(),
        }
    }

    fn unit<R: Rng>(rng: &mut R) -> f64 {
        1.0 - rng.random::<f64>()
    }

    /// ln of the Gamma(shape, rate) density at `r`.
    fn ln_gamma_pdf(r: f64, shape: f64, rate: f64, ln_gamma_shape: f64) -> f64 {
        shape * rate.ln() + (shape - 1.0) * r.ln() - rate * r - ln_gamma_shape
    }

    /// Density of `x` given the threshold `a`: uniform below, `Exp(2)` tail above.
    fn ln_split_pdf(x: f64, a: f64) -> f64 {
        let tail = if x < a { 0.0 } else { -2.0 * (x - a) };
        tail - (a + 0.5).ln()
    }

    fn draw_split<R: Rng>(&self, a: f64, rng: &mut R) -> f64 {
        if rng.random::<f64>() * (a + 0.5) < a {
            a * Self::unit(rng)
        } else {
            a + self.exp2.sample(rng)
        }
    }

    /// One importance weight `f / q`.
    fn weight<R: Rng>(&self, rng: &mut R) -> f64 {
        let p = 2.0 * self.h - 2.0;
        loop {
            if rng.random::<bool>() {
                // y < x
                let gap = self.gap.sample(rng);
                let z = if rng.random::<f64>() < self.z_high_prob {
                    self.z_high.sample(rng)
                } else {
                    self.z_low.sample(rng)
                };
                if !(gap > 0.0 && z > 0.0) {
                    continue;
                }
                let y = self.draw_split(z, rng);
                let x = y + gap;
                let ln_q = Self::ln_gamma_pdf(gap, p + 1.0, 1.0, self.ln_gamma_gap)
                    + (p * z.ln() - z + (z + 0.5).ln() - self.ln_z_norm)
                    + Self::ln_split_pdf(y, z);
                return 2.0 * (ln_integrand(self.h, x, z, gap, y - z) - ln_q).exp();
            }

            // y > x
            // t and 1 - t are both kept so neither end rounds away
            let (t, one_minus_t, c) = if rng.random::<bool>() {
                let g1 = self.beta_side.sample(rng);
                let g2 = self.beta_side.sample(rng);
                let sum = g1 + g2;
                (g1 / sum, g2 / sum, (g2 - g1) / sum)
            } else {
                let m = Self::unit(rng).powf(1.0 / (1.0 - self.k));
                let c = if rng.random::<bool>() { m } else { -m };
                (0.5 * (1.0 - c), 0.5 * (1.0 + c), c)
            };
            if !(t > 0.0 && one_minus_t > 0.0 && c != 0.0) {
                continue;
            }
            let rate = c.abs();
            let ln_q_r;
            let r;
            if c > 0.0 {
                r = self.r_low.sample(rng) / rate;
                ln_q_r = Self::ln_gamma_pdf(r, self.k, rate, self.ln_gamma_k);
            } else {
                let unit_rate = if rng.random::<f64>() < self.r_mix_prob { &self.r_high } else { &self.r_low };
                r = unit_rate.sample(rng) / rate;
                let w = self.r_mix_prob;
                ln_q_r = (w * Self::ln_gamma_pdf(r, self.k + 1.0, rate, self.ln_gamma_k1).exp()
                    + (1.0 - w) * Self::ln_gamma_pdf(r, self.k, rate, self.ln_gamma_k).exp())
                .ln();
            }
            if !(r > 0.0 && r.is_finite()) {
                continue;
            }
            let (x, ln_q_x) = if c > 0.0 {
                let x = self.exp2.sample(rng);
                (x, 2f64.ln() - 2.0 * x)
            } else {
                let a = r * rate;
                let x = self.draw_split(a, rng);
                (x, Self::ln_split_pdf(x, a))
            };
            let z = r * t;
            let y_minus_x = r * one_minus_t;
            if !(z > 0.0 && y_minus_x > 0.0) {
                continue;
            }
            let q_t = 0.5 * ((p * (t.ln() + one_minus_t.ln()) - self.ln_beta_norm).exp())
                + 0.5 * (1.0 - self.k) * rate.powf(-self.k);
            // density of (x, y, z) carries the Jacobian 1/r of (r, t) -> (z, y - x)
            let ln_q = q_t.ln() + ln_q_r + ln_q_x - r.ln();
            return 2.0 * (ln_integrand(self.h, x, z, -y_minus_x, x + r * c) - ln_q).exp();
        }
    }
}

/// Importance-sampled Monte Carlo value of the d_H triple integral.
pub fn d_h_numeric(h: f64, n_samples: u64, seed: u64) -> Result<McEstimate> {
    check_range(h, false, 0.75, "d_h_numeric")?;
    if n_samples < 2 {
        return Err(FouError::domain("d_h_numeric needs at least 2 samples"));
    }
    let proposal = DhProposal::new(h);
    let per_chunk = n_samples / DH_CHUNKS;
    let extra = n_samples % DH_CHUNKS;
    // (count, mean, sum of squared deviations) per chunk
    let parts: Vec<(f64, f64, f64)> = (0..DH_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let n = per_chunk + u64::from(chunk < extra);
            let mut rng = stream(derive_seed(seed, chunk));
            let (mut mean, mut m2) = (0.0, 0.0);
            for i in 0..n {
                let w = proposal.weight(&mut rng);
                let d = w - mean;
                mean += d / (i + 1) as f64;
                m2 += d * (w - mean);
            }
            (n as f64, mean, m2)
        })
        .collect();
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for (nb, mb, m2b) in parts {
        if nb == 0.0 {
            continue;
        }
        let total = n + nb;
        let d = mb - mean;
        mean += d * nb / total;
        m2 += m2b + d * d * n * nb / total;
        n = total;
    }
    let variance = m2 / (n - 1.0);
    Ok(McEstimate { estimate: mean, std_error: (variance / n).sqrt(), n_samples })
}

/// `(2H-1) ∫_0^∞∫_0^∞ e^{-(s+u)} |u-s|^{2H-2} du ds`, reduced to
/// `(2H-1) ∫_0^∞ x^{2H-2} e^{-x} dx` and evaluated by quadrature.
pub fn lemma_a1_value(h: f64, tol: f64) -> Result<f64> {
    check_range(h, false, 1.0, "lemma_a1_value")?;
    let a = 2.0 * h - 1.0;
    let r = power_exp_integral(2.0 * h - 2.0, ExpLinear::exp(-1.0), f64::INFINITY, tol / a);
    Ok(a * r.value)
}

/// Exact E(F_T²) for H = 1/2,
/// `(σ⁴/T)(T/(2θ) + (e^{-2θT} - 1)/(4θ²))`. Not-positive θ or T give NaN.
pub fn finite_t_variance_bm(theta: f64, sigma: f64, t_max: f64) -> f64 {
    if !(theta > 0.0 && t_max > 0.0) {
        return f64::NAN;
    }
    let s4 = sigma.powi(4);
    s4 * (1.0 / (2.0 * theta) + (-2.0 * theta * t_max).exp_m1() / (4.0 * theta * theta * t_max))
}

/// Limiting variances of `√T(θ̂ - θ)` and `√T(θ̃ - θ)`. At H = 1/2 the
/// second is the formal value `θσ_H²`; θ̃ itself is not defined there.
pub fn clt_variances(params: &FouParams) -> Result<(f64, f64)> {
    let h = params.h.value();
    let var_hat = params.theta * sigma_h_squared(h)?;
    Ok((var_hat, var_hat / (2.0 * h).powi(2)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTable {
    pub h: f64,
    pub theta: f64,
    pub sigma: f64,
    pub alpha_h: f64,
    pub sigma_h_sq: Option<f64>,
    pub delta_h: Option<f64>,
    pub gamma_h: Option<f64>,
    pub d_h: Option<f64>,
    pub f_h: Option<f64>,
    /// σ² θ^{-2H} H Γ(2H).
    pub ergodic_limit: Option<f64>,
    /// θ^{1-2H} Γ(2H-1).
    pub correction_limit: Option<f64>,
    pub clt_variance_hat: Option<f64>,
    pub clt_variance_tilde: Option<f64>,
}

impl ConstantsTable {
    /// Entries outside their domain are `None`.
    pub fn compute(h: f64, theta: f64, sigma: f64) -> Result<Self> {
        let params = FouParams::from_values(theta, sigma, h)?;
        let sigma_h_sq = sigma_h_squared(h).ok();
        let above_half = h > 0.5;
        let ergodic_limit =
            (h >= 0.5).then(|| sigma * sigma * theta.powf(-2.0 * h) * h * gamma(2.0 * h));
        let correction_limit = above_half.then(|| theta.powf(1.0 - 2.0 * h) * gamma(2.0 * h - 1.0));
        let clt = clt_variances(&params).ok();
        Ok(ConstantsTable {
            h,
            theta,
            sigma,
            alpha_h: alpha_h(h),
            sigma_h_sq,
            delta_h: delta_h(h).ok(),
            gamma_h: gamma_h(h).ok(),
            d_h: d_h_closed(h).ok(),
            f_h: f_h(h).ok(),
            ergodic_limit,
            correction_limit,
            clt_variance_hat: clt.map(|c| c.0),
            clt_variance_tilde: if above_half { clt.map(|c| c.1) } else { None },
        })
    }

    /// Limit of E(F_T²): `σ⁴ θ^{1-4H} δ_H`.
    pub fn f_variance_limit(&self) -> Option<f64> {
        self.delta_h
            .map(|d| self.sigma.powi(4) * self.theta.powf(1.0 - 4.0 * self.h) * d)
    }

    /// `(name, value)` rows in display order.
    pub fn rows(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("h", Some(self.h)),
            ("theta", Some(self.theta)),
            ("sigma", Some(self.sigma)),
            ("alpha_h", Some(self.alpha_h)),
            ("sigma_h_sq", self.sigma_h_sq),
            ("delta_h", self.delta_h),
            ("gamma_h", self.gamma_h),
            ("d_h", self.d_h),
            ("f_h", self.f_h),
            ("ergodic_limit", self.ergodic_limit),
            ("correction_limit", self.correction_limit),
            ("clt_variance_hat", self.clt_variance_hat),
            ("clt_variance_tilde", self.clt_variance_tilde),
        ]
    }
}
