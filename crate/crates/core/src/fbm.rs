//! Fractional Brownian motion on uniform grids.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{FouError, Result};
use crate::rng;

/// Relative tolerance on negative circulant eigenvalues.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-9;
/// Relative tolerance on negative Cholesky pivots.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Hurst index, always strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParameter(f64);

impl HurstParameter {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h < 1.0 {
            Ok(HurstParameter(h))
        } else {
            Err(FouError::domain(format!("Hurst parameter must lie in (0, 1), got {h}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_brownian(self) -> bool {
        self.0 == 0.5
    }

    /// α_H = H(2H - 1).
    pub fn alpha(self) -> f64 {
        self.0 * (2.0 * self.0 - 1.0)
    }

    pub(crate) fn require_above_half(self, what: &str) -> Result<()> {
        if self.0 > 0.5 {
            Ok(())
        } else {
            Err(FouError::domain(format!("{what} requires H > 1/2, got H = {}", self.0)))
        }
    }
}

impl TryFrom<f64> for HurstParameter {
    type Error = FouError;

    fn try_from(h: f64) -> Result<Self> {
        HurstParameter::new(h)
    }
}

impl From<HurstParameter> for f64 {
    fn from(h: HurstParameter) -> f64 {
        h.0
    }
}

impl fmt::Display for HurstParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Uniform grid `t_k = k t_max / n_steps`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_max: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, n_steps: usize) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(FouError::domain(format!("t_max must be positive, got {t_max}")));
        }
        if n_steps == 0 {
            return Err(FouError::domain("a grid needs at least one step"));
        }
        Ok(TimeGrid { t_max, n_steps })
    }

    /// Grid on `[0, t_max]` whose step is as close as possible to `delta`.
    pub fn with_step(t_max: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(FouError::domain(format!("step must be positive, got {delta}")));
        }
        let n = (t_max / delta).round().max(1.0) as usize;
        TimeGrid::new(t_max, n)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn delta(&self) -> f64 {
        self.t_max / self.n_steps as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_max
        } else {
            k as f64 * self.delta()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|k| self.point(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathLabel {
    Fbm,
    Fou,
}

/// Process values on a [`TimeGrid`]. Generated paths start at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
    label: PathLabel,
    hurst: Option<HurstParameter>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>, label: PathLabel) -> Result<Self> {
        if values.len() != grid.n_steps() + 1 {
            return Err(FouError::domain(format!(
                "path has {} values but the grid has {} points",
                values.len(),
                grid.n_steps() + 1
            )));
        }
        Ok(SamplePath { grid, values, label, hurst: None })
    }

    /// Records the Hurst index the path was generated with.
    pub fn with_hurst(mut self, h: HurstParameter) -> Self {
        self.hurst = Some(h);
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> PathLabel {
        self.label
    }

    pub fn hurst(&self) -> Option<HurstParameter> {
        self.hurst
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("a path has at least two values")
    }

    /// Multiplies every value by `c`.
    pub fn scaled(&self, c: f64) -> SamplePath {
        SamplePath {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    /// Keeps every `factor`-th point; `n_steps` must be divisible by `factor`.
    pub fn subsample(&self, factor: usize) -> Result<SamplePath> {
        if factor == 0 || self.grid.n_steps() % factor != 0 {
            return Err(FouError::domain(format!(
                "cannot subsample {} steps by {factor}",
                self.grid.n_steps()
            )));
        }
        let grid = TimeGrid::new(self.grid.t_max(), self.grid.n_steps() / factor)?;
        let values = self.values.iter().step_by(factor).copied().collect();
        Ok(SamplePath { grid, values, ..*self })
    }
}

/// R_H(s, t) = ½(|t|^{2H} + |s|^{2H} - |t - s|^{2H}).
pub fn fbm_covariance(s: f64, t: f64, h: HurstParameter) -> f64 {
    let e = 2.0 * h.value();
    0.5 * (t.abs().powf(e) + s.abs().powf(e) - (t - s).abs().powf(e))
}

/// Autocovariance at lag `k` of the increments `B_{(j+1)Δ} - B_{jΔ}`.
pub fn fgn_autocovariance(lag: usize, delta: f64, h: HurstParameter) -> f64 {
    let e = 2.0 * h.value();
    let k = lag as f64;
    let second_diff = if lag == 0 {
        2.0
    } else {
        (k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).powf(e)
    };
    0.5 * delta.powf(e) * second_diff
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FbmMethod {
    #[default]
    CirculantEmbedding,
    Cholesky,
}

/// Davies-Harte sampler: the fGn covariance embedded in a circulant of size
/// `m = 2^⌈log2(2n)⌉`, diagonalised by the FFT.
#[derive(Clone)]
pub struct CirculantEmbedding {
    n: usize,
    /// sqrt(λ_k / m) at k = 0, m/2 and sqrt(λ_k / 2m) elsewhere.
    amplitudes: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CirculantEmbedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CirculantEmbedding")
            .field("n", &self.n)
            .field("size", &self.amplitudes.len())
            .finish()
    }
}

impl CirculantEmbedding {
    pub fn new(n: usize, delta: f64, h: HurstParameter) -> Result<Self> {
        let eig = Self::eigenvalues(n, delta, h);
        let m = eig.len();
        let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tolerance = EIGENVALUE_TOLERANCE * max;
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -tolerance {
            return Err(FouError::CirculantEmbeddingFailed { min_eigenvalue: min, tolerance });
        }
        let amplitudes = eig
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                let l = l.max(0.0);
                if k == 0 || k == m / 2 {
                    (l / m as f64).sqrt()
                } else {
                    (l / (2.0 * m as f64)).sqrt()
                }
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        Ok(CirculantEmbedding { n, amplitudes, fft })
    }

    pub fn embedding_size(n: usize) -> usize {
        (2 * n).next_power_of_two()
    }

    /// Eigenvalues of the circulant whose first row is
    /// `γ(0), γ(1), …, γ(m/2), γ(m/2 - 1), …, γ(1)`.
    pub fn eigenvalues(n: usize, delta: f64, h: HurstParameter) -> Vec<f64> {
        let m = Self::embedding_size(n);
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| Complex::new(fgn_autocovariance(j.min(m - j), delta, h), 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut row);
        row.into_iter().map(|c| c.re).collect()
    }

    /// `n` fGn increments.
    pub fn sample_increments<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.amplitudes.len();
        let half = m / 2;
        let mut buf = vec![Complex::new(0.0, 0.0); m];
        let z0: f64 = rng.sample(StandardNormal);
        buf[0] = Complex::new(self.amplitudes[0] * z0, 0.0);
        let zh: f64 = rng.sample(StandardNormal);
        buf[half] = Complex::new(self.amplitudes[half] * zh, 0.0);
        for k in 1..half {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let w = Complex::new(re, im) * self.amplitudes[k];
            buf[k] = w;
            buf[m - k] = w.conj();
        }
        self.fft.process(&mut buf);
        buf[..self.n].iter().map(|c| c.re).collect()
    }
}

/// Lower Cholesky factor of `[R_H(t_i, t_j)]` over the nonzero grid points.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    lower: Vec<f64>,
}

impl CholeskyFactor {
    pub fn new(grid: &TimeGrid, h: HurstParameter) -> Result<Self> {
        let times: Vec<f64> = grid.points().skip(1).collect();
        let n = times.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                a[i * n + j] = fbm_covariance(times[i], times[j], h);
            }
        }
        let lower = cholesky_in_place(a, n)?;
        Ok(CholeskyFactor { n, lower })
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = Vec::with_capacity(self.n + 1);
        out.push(0.0);
        for i in 0..self.n {
            let row = &self.lower[i * self.n..i * self.n + i + 1];
            out.push(row.iter().zip(&z).map(|(l, z)| l * z).sum());
        }
        out
    }
}

/// Cholesky of a symmetric matrix given by its lower triangle (row-major).
/// Pivots down to `-PIVOT_TOLERANCE · max diagonal` are treated as zero.
pub fn cholesky_in_place(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d < -PIVOT_TOLERANCE * scale {
            return Err(FouError::CholeskyFailed { index: j, pivot: d });
        }
        let ljj = d.max(0.0).sqrt();
        a[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = if ljj > 0.0 { s / ljj } else { 0.0 };
        }
        for k in j + 1..n {
            a[j * n + k] = 0.0;
        }
    }
    Ok(a)
}

/// A reusable fBm sampler for one grid and Hurst index.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    grid: TimeGrid,
    h: HurstParameter,
    inner: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Circulant(CirculantEmbedding),
    Cholesky(CholeskyFactor),
}

impl FbmSampler {
    pub fn new(grid: TimeGrid, h: HurstParameter, method: FbmMethod) -> Result<Self> {
        let inner = match method {
            FbmMethod::CirculantEmbedding => {
                SamplerKind::Circulant(CirculantEmbedding::new(grid.n_steps(), grid.delta(), h)?)
            }
            FbmMethod::Cholesky => SamplerKind::Cholesky(CholeskyFactor::new(&grid, h)?),
        };
        Ok(FbmSampler { grid, h, inner })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn sample(&self, seed: u64) -> SamplePath {
        self.sample_with(&mut rng::stream(seed))
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplePath {
        let values = match &self.inner {
            SamplerKind::Circulant(ce) => {
                let mut acc = 0.0;
                let mut values = Vec::with_capacity(self.grid.n_steps() + 1);
                values.push(0.0);
                for dx in ce.sample_increments(rng) {
                    acc += dx;
                    values.push(acc);
                }
                values
            }
            SamplerKind::Cholesky(ch) => ch.sample_values(rng),
        };
        SamplePath { grid: self.grid, values, label: PathLabel::Fbm, hurst: Some(self.h) }
    }
}

/// One fBm path. Identical arguments give bit-identical output.
pub fn generate_fbm(grid: TimeGrid, h: HurstParameter, seed: u64, method: FbmMethod) -> Result<SamplePath> {
    Ok(FbmSampler::new(grid, h, method)?.sample(seed))
}

/// Right-continuous step function `Σ values[i] 1_[breaks[i], breaks[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(FouError::domain("step function needs len(breaks) = len(values) + 1 >= 2"));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(FouError::domain("step function breakpoints must be increasing"));
        }
        Ok(StepFunction { breaks, values })
    }

    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        StepFunction::new(vec![a, b], vec![1.0])
    }

    fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breaks.windows(2).zip(&self.values).map(|(w, &v)| (w[0], w[1], v))
    }
}

/// ⟨φ, ψ⟩_H = α_H ∫∫ φ_s ψ_t |t - s|^{2H-2} ds dt for step functions.
///
/// Each pair of cells is integrated exactly from the second antiderivative
/// of the kernel: for `[a, b] × [c, d]` the cell integral times α_H is
/// `½(|d-a|^{2H} + |c-b|^{2H} - |d-b|^{2H} - |c-a|^{2H})`.
pub fn inner_product_h(phi: &StepFunction, psi: &StepFunction, h: HurstParameter) -> Result<f64> {
    h.require_above_half("the H-inner product integral form")?;
    let e = 2.0 * h.value();
    let p = |x: f64| x.abs().powf(e);
    let mut total = 0.0;
    for (a, b, u) in phi.cells() {
        if u == 0.0 {
            continue;
        }
        for (c, d, v) in psi.cells() {
            if v == 0.0 {
                continue;
            }
            total += u * v * 0.5 * (p(d - a) + p(c - b) - p(d - b) - p(c - a));
        }
    }
    Ok(total)
}
