//! Adaptive Gauss-Kronrod quadrature and integrals with an integrable
//! power-law endpoint singularity.
//!
//! The weakly singular kernels that appear throughout this crate all reduce
//! to one-dimensional integrals of the form `∫_0^L w^p g(w) dw` with
//! `-1 < p < 0` and `g(w) = (c0 + c1 w) exp(κ w + shift)`. The first cell
//! `[0, a]` is integrated term by term from the Taylor series of `g`, so the
//! singular point is never evaluated; the remainder is smooth and handed to
//! the adaptive rule.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_491_078,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const DEFAULT_MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// 21-point Kronrod rule with the QUADPACK error heuristic.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = fc.abs() * WGK[10];
    let mut values = [0.0; 20];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        values[2 * j] = f1;
        values[2 * j + 1] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((values[2 * j] - mean).abs() + (values[2 * j + 1] - mean).abs());
    }
    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_sum);
    }
    (value, err)
}

/// Adaptive bisection on `[a, b]` until the summed error estimate is below
/// `max(abs_tol, rel_tol |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Integral {
    integrate_with_limit(f, a, b, abs_tol, rel_tol, DEFAULT_MAX_INTERVALS)
}

pub fn integrate_with_limit<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Integral {
    if a == b {
        return Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let (value, error) = gk21(&f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;

    while total_err > abs_tol.max(rel_tol * total.abs()) && heap.len() < max_intervals {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval exhausted at machine precision
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }

    // Re-sum to shed the drift of the running totals.
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let error: f64 = panels.iter().map(|p| p.error).sum();
    Integral {
        value,
        error,
        evaluations,
        converged: error <= abs_tol.max(rel_tol * value.abs()),
    }
}

/// Smooth factor `g(w) = (c0 + c1 w) exp(rate w + shift)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpLinear {
    pub c0: f64,
    pub c1: f64,
    pub rate: f64,
    pub shift: f64,
}

impl ExpLinear {
    pub fn exp(rate: f64) -> Self {
        ExpLinear { c0: 1.0, c1: 0.0, rate, shift: 0.0 }
    }

    pub fn eval(&self, w: f64) -> f64 {
        (self.c0 + self.c1 * w) * (self.rate * w + self.shift).exp()
    }
}

/// `∫_0^upper w^p g(w) dw` for `p > -1`. `upper` may be `+∞` when
/// `g.rate < 0`. For decaying `g` the range past `60/|rate|` beyond the head
/// cell is dropped (relative size below e^-60). The rest is split at a
/// doubling sequence of breakpoints so no panel hides the decay.
pub fn power_exp_integral(p: f64, g: ExpLinear, upper: f64, abs_tol: f64) -> Integral {
    assert!(p > -1.0, "exponent {p} is not integrable at 0");
    if !(upper > 0.0) {
        return Integral { value: 0.0, error: 0.0, evaluations: 0, converged: true };
    }
    let scale = if g.rate == 0.0 { 1.0 } else { 1.0 / g.rate.abs() };
    let head_end = upper.min(scale).min(1.0);
    let head = power_exp_head(p, &g, head_end);

    if upper.is_infinite() {
        assert!(g.rate < 0.0, "infinite range needs a decaying exponential");
    }
    let upper = if g.rate < 0.0 { upper.min(head_end + 60.0 * scale) } else { upper };
    if head_end >= upper {
        return Integral { value: head, error: f64::EPSILON * head.abs(), evaluations: 0, converged: true };
    }
    let mut breaks = vec![head_end];
    while *breaks.last().unwrap() < upper {
        let next = 2.0 * breaks.last().unwrap();
        breaks.push(if next >= 0.75 * upper { upper } else { next });
    }
    let panel_tol = 0.5 * abs_tol / (breaks.len() - 1) as f64;
    let mut value = head;
    let mut error = f64::EPSILON * head.abs();
    let mut evaluations = 0;
    let mut converged = true;
    for w in breaks.windows(2) {
        let r = integrate(|w| w.powf(p) * g.eval(w), w[0], w[1], panel_tol, 1e-14);
        value += r.value;
        error += r.error;
        evaluations += r.evaluations;
        converged &= r.converged;
    }
    Integral { value, error, evaluations, converged }
}

/// Term-by-term integral of `w^p (c0 + c1 w) Σ (κw)^k/k!` over `[0, a]`,
/// assuming `|κ| a ≤ 1`.
fn power_exp_head(p: f64, g: &ExpLinear, a: f64) -> f64 {
    let x = g.rate * a;
    let base = a.powf(p + 1.0);
    let mut coef = 1.0; // x^k / k!
    let mut sum = 0.0;
    for k in 0..60 {
        let kf = k as f64;
        let term = coef * (g.c0 / (p + kf + 1.0) + g.c1 * a / (p + kf + 2.0));
        sum += term;
        if k > 2 && coef.abs() < 1e-18 {
            break;
        }
        coef *= x / (kf + 1.0);
    }
    base * sum * g.shift.exp()
}
