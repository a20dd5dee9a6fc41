use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::report::{ExperimentReport, Record, TSummary, Verdict};
use crate::asymptotics::{clt_variances, finite_t_variance_bm, ConstantsTable};
use crate::error::{FouError, Result};
use crate::estimators::{
    correction_integral, default_correction_tol, f_statistic, theta_hat_ito,
    theta_hat_oracle_with_correction, theta_hat_prime, theta_tilde, EstimatorKind,
};
use crate::fbm::{FbmMethod, FbmSampler, SamplePath, TimeGrid};
use crate::fou::{integrated_square, simulate_fou, FouParams, Scheme};
use crate::rng::derive_seed;
use crate::stats::{ks_critical_value, ks_statistic_normal, summarize};

/// Below this many replications verdicts are not issued.
pub const LOW_POWER_REPS: usize = 30;

const SE_MULTIPLIER: f64 = 3.0;
const ERGODIC_VARIANCE_SLACK: f64 = 0.10;
const CLT_VARIANCE_TOL: f64 = 0.15;
const F_VARIANCE_TOL: f64 = 0.10;
const NEGATIVE_CONTROL_BOUND: f64 = 0.02;

pub fn replication_seed(master_seed: u64, t_index: usize, rep: usize) -> u64 {
    derive_seed(derive_seed(master_seed, t_index as u64), rep as u64)
}

/// The forward-sum estimator is the least-squares estimator of the Euler
/// recursion, so its paths are generated with that recursion; everything
/// else uses the integrating-factor scheme.
pub fn scheme_for(estimator: EstimatorKind) -> Scheme {
    match estimator {
        EstimatorKind::ThetaHatIto => Scheme::EulerLangevin,
        _ => Scheme::IntegratingFactor,
    }
}

fn domain(msg: String) -> FouError {
    FouError::Domain(msg)
}

fn check_estimator_domain(estimator: EstimatorKind, params: &FouParams) -> Result<()> {
    let h = params.h;
    match estimator {
        EstimatorKind::ThetaTilde | EstimatorKind::ThetaHatOracle if h.value() <= 0.5 => {
            Err(domain(format!("estimator {} requires H > 1/2, got H = {h}", estimator.name())))
        }
        EstimatorKind::ThetaHatIto if !h.is_brownian() => {
            Err(domain(format!("estimator hat-ito requires H = 1/2, got H = {h}")))
        }
        _ => Ok(()),
    }
}

/// Rejects configurations outside the theory the experiment checks.
fn check_domain(config: &ExperimentConfig) -> Result<()> {
    let h = config.params.h.value();
    match config.kind {
        ExperimentKind::Ergodic => {
            if h < 0.5 {
                return Err(domain(format!("ergodic experiment requires H >= 1/2, got H = {h}")));
            }
            Ok(())
        }
        ExperimentKind::Consistency => check_estimator_domain(config.estimator, &config.params),
        ExperimentKind::Clt | ExperimentKind::FVariance => {
            if h >= 0.75 {
                return Err(domain(format!("no central limit theorem for H >= 3/4, got H = {h}")));
            }
            let allowed = match config.kind {
                ExperimentKind::Clt => &[
                    EstimatorKind::ThetaTilde,
                    EstimatorKind::ThetaHatOracle,
                    EstimatorKind::ThetaHatIto,
                ][..],
                _ => &[EstimatorKind::ThetaHatOracle, EstimatorKind::ThetaHatIto][..],
            };
            if !allowed.contains(&config.estimator) {
                return Err(domain(format!(
                    "estimator {} is not supported by this experiment",
                    config.estimator.name()
                )));
            }
            check_estimator_domain(config.estimator, &config.params)
        }
    }
}

/// Per-T simulation state shared by all replications at that horizon.
struct Horizon {
    t: f64,
    sampler: FbmSampler,
    correction: Option<f64>,
}

impl Horizon {
    fn new(config: &ExperimentConfig, t: f64) -> Result<Self> {
        let grid = TimeGrid::with_step(t, config.delta)?;
        let sampler = FbmSampler::new(grid, config.params.h, FbmMethod::CirculantEmbedding)?;
        let correction = match config.estimator {
            EstimatorKind::ThetaHatOracle if config.kind != ExperimentKind::Ergodic => Some(correction_integral(
                config.params.theta,
                config.params.h,
                t,
                default_correction_tol(t),
            )?),
            _ => None,
        };
        Ok(Horizon { t, sampler, correction })
    }

    fn estimate(&self, config: &ExperimentConfig, path: &SamplePath) -> Result<f64> {
        let p = &config.params;
        let r = match config.estimator {
            EstimatorKind::ThetaTilde => theta_tilde(path, p.sigma, p.h)?,
            EstimatorKind::ThetaHatOracle => {
                let correction = self.correction.expect("correction computed for oracle runs");
                theta_hat_oracle_with_correction(path, p.sigma, p.h, p.theta, correction)?
            }
            EstimatorKind::ThetaHatPrime => theta_hat_prime(path)?,
            EstimatorKind::ThetaHatIto => theta_hat_ito(path)?,
        };
        Ok(r.estimate)
    }

    fn value(&self, config: &ExperimentConfig, seed: u64) -> Result<f64> {
        let fbm = self.sampler.sample(seed);
        let path = simulate_fou(&config.params, &fbm, scheme_for(config.estimator))?;
        let theta = config.params.theta;
        match config.kind {
            ExperimentKind::Ergodic => Ok(integrated_square(&path) / self.t),
            ExperimentKind::Consistency => self.estimate(config, &path),
            ExperimentKind::Clt => Ok(self.t.sqrt() * (self.estimate(config, &path)? - theta)),
            ExperimentKind::FVariance => f_statistic(&path, self.estimate(config, &path)?, theta),
        }
    }
}

/// Recomputes a single replication; used to audit reports.
pub fn replicate(config: &ExperimentConfig, t_index: usize, rep: usize) -> Result<f64> {
    let t = *config
        .t_values
        .get(t_index)
        .ok_or_else(|| FouError::InvalidExperiment(format!("no T at index {t_index}")))?;
    let horizon = Horizon::new(config, t)?;
    horizon.value(config, replication_seed(config.master_seed, t_index, rep))
}

fn simulate_records(config: &ExperimentConfig) -> Result<Vec<Record>> {
    let mut records = Vec::with_capacity(config.n_reps * config.t_values.len());
    for (t_index, &t) in config.t_values.iter().enumerate() {
        let horizon = Horizon::new(config, t)?;
        let values: Vec<Result<Record>> = (0..config.n_reps)
            .into_par_iter()
            .map(|rep| {
                let seed = replication_seed(config.master_seed, t_index, rep);
                Ok(Record { rep, seed, t, value: horizon.value(config, seed)? })
            })
            .collect();
        for v in values {
            records.push(v?);
        }
    }
    Ok(records)
}

fn verdict(check: &str, t: Option<f64>, passed: bool, observed: f64, target: f64, tolerance: f64, detail: String) -> Verdict {
    Verdict { check: check.into(), t, passed, observed, target, tolerance, detail }
}

fn clt_target(config: &ExperimentConfig) -> Result<f64> {
    let (hat, tilde) = clt_variances(&config.params)?;
    Ok(if config.estimator == EstimatorKind::ThetaTilde { tilde } else { hat })
}

/// Summaries and verdicts from the per-replication records and constants
/// alone. Records are grouped by `T` in the order of `config.t_values`.
pub fn evaluate(
    config: &ExperimentConfig,
    records: &[Record],
    constants: &ConstantsTable,
) -> Result<(Vec<TSummary>, Vec<Verdict>)> {
    let p = &config.params;
    let mut summaries = Vec::new();
    for &t in &config.t_values {
        let mut group: Vec<&Record> = records.iter().filter(|r| r.t == t).collect();
        group.sort_by_key(|r| r.rep);
        let values: Vec<f64> = group.iter().map(|r| r.value).collect();
        if values.len() < 2 {
            return Err(FouError::InvalidExperiment(format!("fewer than 2 records at T = {t}")));
        }
        let s = summarize(&values);
        let mut summary = TSummary {
            t,
            n: s.n,
            mean: s.mean,
            variance: s.variance,
            std_error: s.std_error,
            mean_abs_error: None,
            second_moment: None,
            second_moment_std_error: None,
            ks_statistic: None,
            target: None,
        };
        match config.kind {
            ExperimentKind::Ergodic => summary.target = constants.ergodic_limit,
            ExperimentKind::Consistency => {
                summary.target = Some(p.theta);
                summary.mean_abs_error =
                    Some(values.iter().map(|v| (v - p.theta).abs()).sum::<f64>() / values.len() as f64);
            }
            ExperimentKind::Clt => {
                let target = clt_target(config)?;
                let scale = target.sqrt();
                let standardized: Vec<f64> = values.iter().map(|v| v / scale).collect();
                summary.target = Some(target);
                summary.ks_statistic = Some(ks_statistic_normal(&standardized));
            }
            ExperimentKind::FVariance => {
                let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
                let sq = summarize(&squares);
                summary.second_moment = Some(sq.mean);
                summary.second_moment_std_error = Some(sq.std_error);
                summary.target = if p.h.is_brownian() {
                    Some(finite_t_variance_bm(p.theta, p.sigma, t))
                } else {
                    constants.f_variance_limit()
                };
            }
        }
        summaries.push(summary);
    }

    let mut verdicts = Vec::new();
    if config.n_reps < LOW_POWER_REPS {
        return Ok((summaries, verdicts));
    }
    let last = summaries.last().expect("t_values is nonempty");
    match config.kind {
        ExperimentKind::Ergodic => {
            for s in &summaries {
                let target = s.target.ok_or_else(|| domain("no ergodic limit for this H".into()))?;
                let tol = SE_MULTIPLIER * s.std_error;
                verdicts.push(verdict(
                    "ergodic-mean",
                    Some(s.t),
                    (s.mean - target).abs() <= tol,
                    s.mean,
                    target,
                    tol,
                    "mean of (1/T)∫X² within 3 standard errors of σ²θ^(-2H)HΓ(2H)".into(),
                ));
            }
            for w in summaries.windows(2) {
                let bound = (1.0 + ERGODIC_VARIANCE_SLACK) * w[0].variance;
                verdicts.push(verdict(
                    "variance-nonincreasing",
                    Some(w[1].t),
                    w[1].variance <= bound,
                    w[1].variance,
                    w[0].variance,
                    ERGODIC_VARIANCE_SLACK,
                    format!("variance at T = {} at most 1.1 x variance at T = {}", w[1].t, w[0].t),
                ));
            }
        }
        ExperimentKind::Consistency if config.estimator == EstimatorKind::ThetaHatPrime => {
            for w in summaries.windows(2) {
                verdicts.push(verdict(
                    "control-mean-decreasing",
                    Some(w[1].t),
                    w[1].mean < w[0].mean,
                    w[1].mean,
                    w[0].mean,
                    0.0,
                    "pathwise estimator mean decreases towards 0".into(),
                ));
            }
            let max = records
                .iter()
                .filter(|r| r.t == last.t)
                .map(|r| r.value)
                .fold(f64::NEG_INFINITY, f64::max);
            verdicts.push(verdict(
                "control-below-bound",
                Some(last.t),
                max < NEGATIVE_CONTROL_BOUND,
                max,
                0.0,
                NEGATIVE_CONTROL_BOUND,
                "every final-T pathwise estimate below the bound, i.e. far from θ".into(),
            ));
        }
        ExperimentKind::Consistency => {
            for w in summaries.windows(2) {
                let (prev, next) = (w[0].mean_abs_error.unwrap(), w[1].mean_abs_error.unwrap());
                verdicts.push(verdict(
                    "mae-decreasing",
                    Some(w[1].t),
                    next < prev,
                    next,
                    prev,
                    0.0,
                    format!("mean absolute error at T = {} below that at T = {}", w[1].t, w[0].t),
                ));
            }
            let tol = SE_MULTIPLIER * last.std_error;
            verdicts.push(verdict(
                "final-mean",
                Some(last.t),
                (last.mean - p.theta).abs() <= tol,
                last.mean,
                p.theta,
                tol,
                "final-T mean within 3 standard errors of θ".into(),
            ));
        }
        ExperimentKind::Clt => {
            for s in &summaries {
                let target = s.target.expect("clt target");
                verdicts.push(verdict(
                    "clt-variance",
                    Some(s.t),
                    (s.variance / target - 1.0).abs() <= CLT_VARIANCE_TOL,
                    s.variance,
                    target,
                    CLT_VARIANCE_TOL,
                    "sample variance of √T(θ̂ - θ) within 15% of the limit".into(),
                ));
                let ks = s.ks_statistic.expect("ks statistic");
                let critical = ks_critical_value(s.n);
                verdicts.push(verdict(
                    "clt-ks",
                    Some(s.t),
                    ks < critical,
                    ks,
                    0.0,
                    critical,
                    "Kolmogorov-Smirnov distance of the standardized errors to N(0, 1)".into(),
                ));
            }
        }
        ExperimentKind::FVariance => {
            for s in &summaries {
                let m2 = s.second_moment.expect("second moment");
                let target = s.target.ok_or_else(|| domain("no F_T variance limit for this H".into()))?;
                let (passed, tol, detail) = if p.h.is_brownian() {
                    let tol = SE_MULTIPLIER * s.second_moment_std_error.expect("second moment se");
                    ((m2 - target).abs() <= tol, tol, "E(F_T²) within 3 standard errors of the exact finite-T value")
                } else {
                    (
                        (m2 / target - 1.0).abs() <= F_VARIANCE_TOL,
                        F_VARIANCE_TOL,
                        "E(F_T²) within 10% of σ⁴θ^(1-4H)δ_H",
                    )
                };
                verdicts.push(verdict("f-second-moment", Some(s.t), passed, m2, target, tol, detail.into()));
            }
        }
    }
    Ok((summaries, verdicts))
}

fn run_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentReport> {
    if config.kind != kind {
        return Err(FouError::InvalidExperiment(format!(
            "config describes a {:?} experiment, not {kind:?}",
            config.kind
        )));
    }
    config.validate().map_err(FouError::InvalidExperiment)?;
    check_domain(config)?;
    let p = &config.params;
    let constants = ConstantsTable::compute(p.h.value(), p.theta, p.sigma)?;
    let records = simulate_records(config)?;
    let (summaries, verdicts) = evaluate(config, &records, &constants)?;
    Ok(ExperimentReport {
        config: config.clone(),
        constants,
        low_power: config.n_reps < LOW_POWER_REPS,
        summaries,
        verdicts,
        records,
    })
}

/// Time-averaged square `(1/T)∫X²` against the stationary second moment.
pub fn run_ergodic(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Ergodic)
}

/// Estimates along the T ladder. For the pathwise estimator the checks are
/// those of a negative control: estimates must head to 0, not θ.
pub fn run_consistency(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Consistency)
}

/// Records `√T(θ̂ - θ)` and compares with the limiting normal law.
pub fn run_clt(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Clt)
}

/// Records `F_T = -(θ̂ - θ)∫X²/√T` and compares its second moment with the
/// exact (H = 1/2) or limiting (H > 1/2) value.
pub fn run_f_variance(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::FVariance)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, config.kind)
}
