use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fou_core::asymptotics::ConstantsTable;
use fou_core::estimators::{theta_hat_ito, theta_hat_oracle, theta_hat_prime, theta_tilde, EstimatorKind};
use fou_core::fbm::generate_fbm;
use fou_core::fou::simulate_fou;
use fou_core::harness::{load_config, read_path_csv, run_experiment, write_path_csv, write_report};
use fou_core::{FbmMethod, FouError, FouParams, HurstParameter, PathLabel, Scheme, TimeGrid};

const EXIT_VERDICT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "fou", version, about = "Fractional Ornstein-Uhlenbeck simulation and drift estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Tilde,
    HatOracle,
    HatPrime,
    HatIto,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Tilde => EstimatorKind::ThetaTilde,
            EstimatorArg::HatOracle => EstimatorKind::ThetaHatOracle,
            EstimatorArg::HatPrime => EstimatorKind::ThetaHatPrime,
            EstimatorArg::HatIto => EstimatorKind::ThetaHatIto,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    IntegratingFactor,
    EulerLangevin,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    CirculantEmbedding,
    Cholesky,
}

#[derive(Subcommand)]
enum Command {
    /// Print the asymptotic constants for a Hurst index.
    Constants {
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        json: bool,
    },
    /// Simulate one path and write it as `t,x` CSV.
    Simulate {
        #[arg(long)]
        h: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "integrating-factor")]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value = "circulant-embedding")]
        method: MethodArg,
    },
    /// Estimate the drift from a `t,x` CSV path.
    Estimate {
        #[arg(long, value_enum)]
        estimator: EstimatorArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        theta_true: Option<f64>,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        h: f64,
    },
    /// Run a Monte Carlo experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output_path`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Error(FouError),
    Verdict,
}

impl From<FouError> for Failure {
    fn from(e: FouError) -> Self {
        Failure::Error(e)
    }
}

fn constants(h: f64, theta: f64, sigma: f64, json: bool) -> Result<(), Failure> {
    let table = ConstantsTable::compute(h, theta, sigma)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&table).expect("table serializes"));
    } else {
        for (name, value) in table.rows() {
            match value {
                Some(v) => println!("{name:<20} {v:.17e}"),
                None => println!("{name:<20} -"),
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    h: f64,
    theta: f64,
    sigma: f64,
    t: f64,
    delta: f64,
    seed: u64,
    out: PathBuf,
    scheme: SchemeArg,
    method: MethodArg,
) -> Result<(), Failure> {
    let params = FouParams::from_values(theta, sigma, h)?;
    let grid = TimeGrid::with_step(t, delta)?;
    let method = match method {
        MethodArg::CirculantEmbedding => FbmMethod::CirculantEmbedding,
        MethodArg::Cholesky => FbmMethod::Cholesky,
    };
    let scheme = match scheme {
        SchemeArg::IntegratingFactor => Scheme::IntegratingFactor,
        SchemeArg::EulerLangevin => Scheme::EulerLangevin,
    };
    let fbm = generate_fbm(grid, params.h, seed, method)?;
    let path = simulate_fou(&params, &fbm, scheme)?;
    write_path_csv(&path, &out)?;
    Ok(())
}

fn estimate(
    estimator: EstimatorArg,
    input: PathBuf,
    theta_true: Option<f64>,
    sigma: f64,
    h: f64,
) -> Result<(), Failure> {
    let h = HurstParameter::new(h)?;
    let path = read_path_csv(&input, PathLabel::Fou)?.with_hurst(h);
    let result = match EstimatorKind::from(estimator) {
        EstimatorKind::ThetaTilde => theta_tilde(&path, sigma, h)?,
        EstimatorKind::ThetaHatOracle => {
            let theta = theta_true.ok_or_else(|| {
                FouError::Domain("hat-oracle needs the true drift via --theta-true".into())
            })?;
            theta_hat_oracle(&path, sigma, h, theta)?
        }
        EstimatorKind::ThetaHatPrime => theta_hat_prime(&path)?,
        EstimatorKind::ThetaHatIto => theta_hat_ito(&path)?,
    };
    println!("{}", serde_json::to_string_pretty(&result).expect("result serializes"));
    Ok(())
}

fn experiment(config: PathBuf, out: Option<PathBuf>) -> Result<(), Failure> {
    let config = load_config(&config)?;
    let out = out.unwrap_or_else(|| PathBuf::from(&config.output_path));
    let report = run_experiment(&config)?;
    write_report(&report, &out)?;
    for s in &report.summaries {
        println!("T={} n={} mean={:.6} var={:.6} se={:.6}", s.t, s.n, s.mean, s.variance, s.std_error);
    }
    if report.low_power {
        println!("low power: n_reps below threshold, no verdicts issued");
    }
    for v in &report.verdicts {
        println!(
            "{} {}{}: observed {:.6}, target {:.6}, tolerance {:.6}",
            if v.passed { "PASS" } else { "FAIL" },
            v.check,
            v.t.map(|t| format!(" T={t}")).unwrap_or_default(),
            v.observed,
            v.target,
            v.tolerance
        );
    }
    println!("report written to {}", out.display());
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Constants { h, theta, sigma, json } => constants(h, theta, sigma, json),
        Command::Simulate { h, theta, sigma, t, delta, seed, out, scheme, method } => {
            simulate(h, theta, sigma, t, delta, seed, out, scheme, method)
        }
        Command::Estimate { estimator, input, theta_true, sigma, h } => {
            estimate(estimator, input, theta_true, sigma, h)
        }
        Command::Experiment { config, out } => experiment(config, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict) => ExitCode::from(EXIT_VERDICT_FAILED),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE })
        }
    }
}
