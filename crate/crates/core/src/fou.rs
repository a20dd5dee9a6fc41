//! The fractional Ornstein-Uhlenbeck process `X_t = σ ∫_0^t e^{-θ(t-s)} dB^H_s`.

use serde::{Deserialize, Serialize};

use crate::error::{FouError, Result};
use crate::fbm::{HurstParameter, PathLabel, SamplePath};
use crate::quadrature::{integrate, power_exp_integral, ExpLinear};
use crate::special::gamma;

/// Drift θ > 0, noise scale σ > 0 and Hurst index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", deny_unknown_fields)]
pub struct FouParams {
    pub theta: f64,
    pub sigma: f64,
    pub h: HurstParameter,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    theta: f64,
    sigma: f64,
    h: HurstParameter,
}

impl TryFrom<RawParams> for FouParams {
    type Error = FouError;

    fn try_from(raw: RawParams) -> Result<Self> {
        FouParams::new(raw.theta, raw.sigma, raw.h)
    }
}

impl FouParams {
    pub fn new(theta: f64, sigma: f64, h: HurstParameter) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(FouError::domain(format!("theta must be positive, got {theta}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(FouError::domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(FouParams { theta, sigma, h })
    }

    pub fn from_values(theta: f64, sigma: f64, h: f64) -> Result<Self> {
        FouParams::new(theta, sigma, HurstParameter::new(h)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `X_{k+1} = X_k - θ X_k Δ + σ ΔB_k`.
    EulerLangevin,
    /// `X_{k+1} = e^{-θΔ} X_k + σ e^{-θΔ/2} ΔB_k`: exact decay, with the
    /// kernel `e^{-θ(t_{k+1}-s)}` taken at the cell midpoint.
    #[default]
    IntegratingFactor,
}

/// Drives the Langevin equation with the increments of `fbm`, from `X_0 = 0`.
pub fn simulate_fou(params: &FouParams, fbm: &SamplePath, scheme: Scheme) -> Result<SamplePath> {
    if fbm.label() != PathLabel::Fbm {
        return Err(FouError::domain("simulate_fou needs an fBm driving path"));
    }
    if let Some(h) = fbm.hurst() {
        if h != params.h {
            return Err(FouError::domain(format!(
                "driving path has H = {h} but params have H = {}",
                params.h
            )));
        }
    }
    let grid = *fbm.grid();
    let delta = grid.delta();
    let (decay, gain) = match scheme {
        Scheme::EulerLangevin => {
            let theta_delta = params.theta * delta;
            if theta_delta >= 1.0 {
                return Err(FouError::SchemeUnstable { theta_delta });
            }
            (1.0 - theta_delta, params.sigma)
        }
        Scheme::IntegratingFactor => (
            (-params.theta * delta).exp(),
            params.sigma * (-0.5 * params.theta * delta).exp(),
        ),
    };
    let b = fbm.values();
    let mut x = Vec::with_capacity(b.len());
    x.push(0.0);
    let mut cur = 0.0;
    for w in b.windows(2) {
        cur = decay * cur + gain * (w[1] - w[0]);
        x.push(cur);
    }
    let path = SamplePath::new(grid, x, PathLabel::Fou)?;
    Ok(match fbm.hurst() {
        Some(h) => path.with_hurst(h),
        None => path.with_hurst(params.h),
    })
}

/// Almost-sure limit of `(1/T) ∫_0^T X_t² dt`: σ² θ^{-2H} H Γ(2H).
pub fn stationary_second_moment(params: &FouParams) -> Result<f64> {
    let h = params.h.value();
    if h < 0.5 {
        return Err(FouError::domain(format!("ergodic limit requires H >= 1/2, got {h}")));
    }
    Ok(params.sigma.powi(2) * params.theta.powf(-2.0 * h) * h * gamma(2.0 * h))
}

/// `E[X_s X_t] = σ² α_H ∫_0^s ∫_0^t e^{-θ(s-u)} e^{-θ(t-v)} |u-v|^{2H-2} dv du`.
///
/// The inner integral is split at `v = u` and each half is a power-law
/// integral in the gap `w = |u - v|` with a closed-form singular head cell;
/// the outer integral over `u` is adaptive.
pub fn fou_covariance(params: &FouParams, s: f64, t: f64, tol: f64) -> Result<f64> {
    params.h.require_above_half("fou_covariance")?;
    if s < 0.0 || t < 0.0 {
        return Err(FouError::domain("fou_covariance needs s, t >= 0"));
    }
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    if s == 0.0 {
        return Ok(0.0);
    }
    let theta = params.theta;
    let p = 2.0 * params.h.value() - 2.0;
    let prefactor = params.sigma.powi(2) * params.h.alpha();
    let outer_tol = tol / prefactor;
    let inner_tol = 1e-3 * outer_tol / s.max(1.0);

    let integrand = |u: f64| {
        // v < u: e^{-θ(t-u)} ∫_0^u w^p e^{-θw} dw
        let below = power_exp_integral(p, ExpLinear::exp(-theta), u, inner_tol).value;
        // v > u: ∫_0^{t-u} w^p e^{-θ(t-u-w)} dw
        let len = t - u;
        let above = power_exp_integral(
            p,
            ExpLinear { c0: 1.0, c1: 0.0, rate: theta, shift: -theta * len },
            len,
            inner_tol,
        )
        .value;
        (-theta * (s + t - 2.0 * u)).exp() * below + (-theta * (s - u)).exp() * above
    };
    let r = integrate(integrand, 0.0, s, 0.5 * outer_tol, 1e-13);
    Ok(prefactor * r.value)
}

/// Trapezoidal `∫_0^T X_t² dt` on the path's grid.
pub fn integrated_square(path: &SamplePath) -> f64 {
    let v = path.values();
    let n = v.len();
    let interior: f64 = v[1..n - 1].iter().map(|x| x * x).sum();
    path.grid().delta() * (interior + 0.5 * (v[0] * v[0] + v[n - 1] * v[n - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{generate_fbm, FbmMethod, FbmSampler, TimeGrid};
    use crate::rng::derive_seed;

    fn params(theta: f64, sigma: f64, h: f64) -> FouParams {
        FouParams::from_values(theta, sigma, h).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(FouParams::from_values(0.0, 1.0, 0.6).is_err());
        assert!(FouParams::from_values(1.0, -1.0, 0.6).is_err());
        assert!(FouParams::from_values(1.0, 1.0, 1.0).is_err());
        let json = r#"{"theta": 1.0, "sigma": 2.0, "h": 0.6}"#;
        let p: FouParams = serde_json::from_str(json).unwrap();
        assert_eq!(p, params(1.0, 2.0, 0.6));
        assert!(serde_json::from_str::<FouParams>(r#"{"theta": -1.0, "sigma": 2.0, "h": 0.6}"#).is_err());
        assert!(serde_json::from_str::<FouParams>(r#"{"theta": 1.0, "sigma": 2.0, "h": 0.6, "x": 1}"#).is_err());
    }

    #[test]
    fn zero_noise_gives_zero_path() {
        let grid = TimeGrid::new(5.0, 100).unwrap();
        let fbm = SamplePath::new(grid, vec![0.0; 101], PathLabel::Fbm).unwrap();
        for scheme in [Scheme::EulerLangevin, Scheme::IntegratingFactor] {
            let x = simulate_fou(&params(1.0, 1.0, 0.6), &fbm, scheme).unwrap();
            assert!(x.values().iter().all(|&v| v == 0.0));
            assert_eq!(x.label(), PathLabel::Fou);
        }
    }

    #[test]
    fn euler_rejects_large_steps() {
        let grid = TimeGrid::new(10.0, 5).unwrap();
        let fbm = generate_fbm(grid, HurstParameter::new(0.6).unwrap(), 1, FbmMethod::Cholesky).unwrap();
        let err = simulate_fou(&params(1.0, 1.0, 0.6), &fbm, Scheme::EulerLangevin).unwrap_err();
        assert!(matches!(err, FouError::SchemeUnstable { .. }));
        assert!(simulate_fou(&params(1.0, 1.0, 0.6), &fbm, Scheme::IntegratingFactor).is_ok());
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let fbm = generate_fbm(grid, HurstParameter::new(0.7).unwrap(), 1, FbmMethod::Cholesky).unwrap();
        assert!(simulate_fou(&params(1.0, 1.0, 0.6), &fbm, Scheme::IntegratingFactor).is_err());
        let x = simulate_fou(&params(1.0, 1.0, 0.7), &fbm, Scheme::IntegratingFactor).unwrap();
        assert!(simulate_fou(&params(1.0, 1.0, 0.7), &x, Scheme::IntegratingFactor).is_err());
    }

    #[test]
    fn schemes_converge_together_at_first_order() {
        let h = HurstParameter::new(0.7).unwrap();
        let p = params(1.0, 1.0, 0.7);
        let fine = generate_fbm(TimeGrid::new(10.0, 4000).unwrap(), h, 3, FbmMethod::CirculantEmbedding).unwrap();
        let sup_diff = |fbm: &SamplePath| {
            let a = simulate_fou(&p, fbm, Scheme::EulerLangevin).unwrap();
            let b = simulate_fou(&p, fbm, Scheme::IntegratingFactor).unwrap();
            a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        let d1 = sup_diff(&fine.subsample(4).unwrap());
        let d2 = sup_diff(&fine.subsample(2).unwrap());
        let d3 = sup_diff(&fine);
        let (r1, r2) = (d1 / d2, d2 / d3);
        assert!((1.7..2.3).contains(&r1) && (1.7..2.3).contains(&r2), "ratios {r1} {r2}");
        // C = diff/Δ is stable under refinement
        let c = [d1 / 0.01, d2 / 0.005, d3 / 0.0025];
        assert!(c.iter().all(|&ci| (ci / c[2] - 1.0).abs() < 0.2), "{c:?}");
    }

    #[test]
    fn stationary_moment_examples() {
        assert!((stationary_second_moment(&params(1.0, 1.0, 0.5)).unwrap() - 0.5).abs() < 1e-15);
        assert!((stationary_second_moment(&params(3.0, 2.0, 0.5)).unwrap() - 4.0 / 6.0).abs() < 1e-14);
        let want = 0.235_347_081_734_567_215_980_822_889_61;
        assert!((stationary_second_moment(&params(2.0, 1.0, 0.7)).unwrap() - want).abs() < 1e-13);
        assert!(stationary_second_moment(&params(1.0, 1.0, 0.4)).is_err());
    }

    #[test]
    fn ergodic_mean_brownian_case() {
        let p = params(1.0, 1.0, 0.5);
        let grid = TimeGrid::with_step(100.0, 0.01).unwrap();
        let sampler = FbmSampler::new(grid, p.h, FbmMethod::CirculantEmbedding).unwrap();
        let reps = 500;
        let vals: Vec<f64> = (0..reps)
            .map(|r| {
                let x = simulate_fou(&p, &sampler.sample(derive_seed(17, r)), Scheme::IntegratingFactor).unwrap();
                integrated_square(&x) / 100.0
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn covariance_basic_properties() {
        let p = params(1.0, 1.0, 0.7);
        assert_eq!(fou_covariance(&p, 0.0, 3.0, 1e-8).unwrap(), 0.0);
        let a = fou_covariance(&p, 1.3, 4.2, 1e-9).unwrap();
        let b = fou_covariance(&p, 4.2, 1.3, 1e-9).unwrap();
        assert_eq!(a, b);
        assert!(fou_covariance(&params(1.0, 1.0, 0.5), 1.0, 1.0, 1e-8).is_err());
        let c2 = fou_covariance(&params(1.0, 2.0, 0.7), 1.3, 4.2, 1e-9).unwrap();
        assert!((c2 - 4.0 * a).abs() < 1e-8);
    }

    #[test]
    fn covariance_variance_approaches_stationary_moment() {
        let p = params(1.0, 1.0, 0.7);
        let limit = stationary_second_moment(&p).unwrap();
        for &t in &[20.0, 40.0] {
            let v = fou_covariance(&p, t, t, 1e-9).unwrap();
            assert!((v - limit).abs() < 1e-3, "t={t}: {v} vs {limit}");
        }
    }

    #[test]
    fn covariance_matches_closed_form_brute_force() {
        // Oracle: α_H Σ over a fine partition of cell-pair kernel integrals
        // (exact per cell) with the exponentials frozen at cell midpoints.
        let p = params(0.8, 1.0, 0.65);
        let (s, t) = (1.5, 2.5);
        let n = 1500;
        let hs = s / n as f64;
        let ht = t / n as f64;
        let e = 2.0 * 0.65;
        let pw = |x: f64| x.abs().powf(e);
        let mut sum = 0.0;
        for i in 0..n {
            let (a, b) = (i as f64 * hs, (i + 1) as f64 * hs);
            let wu = (-p.theta * (s - 0.5 * (a + b))).exp();
            for j in 0..n {
                let (c, d) = (j as f64 * ht, (j + 1) as f64 * ht);
                let wv = (-p.theta * (t - 0.5 * (c + d))).exp();
                sum += wu * wv * 0.5 * (pw(d - a) + pw(c - b) - pw(d - b) - pw(c - a));
            }
        }
        let got = fou_covariance(&p, s, t, 1e-10).unwrap();
        assert!((got - sum).abs() < 2e-6, "{got} vs {sum}");
    }

    #[test]
    fn covariance_decays_like_power_law() {
        // E[X_s X_t] |t-s|^{2-2H} shows no growth for large separations.
        let p = params(1.0, 1.0, 0.7);
        let scaled = |d: f64| {
            let t = 100.0;
            let s = t - d;
            fou_covariance(&p, s, t, 1e-10).unwrap() * d.powf(2.0 - 1.4)
        };
        let near = [1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 25.0].map(scaled);
        let far = [30.0, 35.0, 40.0, 45.0, 50.0].map(scaled);
        let max_near = near.iter().cloned().fold(f64::MIN, f64::max);
        let max_far = far.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max_far <= max_near, "near {near:?} far {far:?}");
    }

    #[test]
    fn integrated_square_examples() {
        let grid = TimeGrid::new(3.0, 7).unwrap();
        let zero = SamplePath::new(grid, vec![0.0; 8], PathLabel::Fou).unwrap();
        assert_eq!(integrated_square(&zero), 0.0);
        let c = SamplePath::new(grid, vec![1.5; 8], PathLabel::Fou).unwrap();
        assert!((integrated_square(&c) - 2.25 * 3.0).abs() < 1e-14);
        let n = 64;
        let grid = TimeGrid::new(1.0, n).unwrap();
        let lin = SamplePath::new(grid, grid.points().collect(), PathLabel::Fou).unwrap();
        let d = 1.0 / n as f64;
        assert!((integrated_square(&lin) - (1.0 / 3.0 + d * d / 6.0)).abs() < 1e-15);
    }
}
