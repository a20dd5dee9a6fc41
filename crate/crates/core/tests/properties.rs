use fou_core::estimators::{theta_hat_ito, theta_hat_prime, theta_tilde, EstimatorKind};
use fou_core::fbm::{fbm_covariance, inner_product_h, StepFunction};
use fou_core::fou::{integrated_square, simulate_fou};
use fou_core::harness::{parse_config, ExperimentConfig, ExperimentKind};
use fou_core::{FbmMethod, FouParams, HurstParameter, PathLabel, SamplePath, Scheme, TimeGrid};
use proptest::prelude::*;
use std::path::Path;

fn step_function() -> impl Strategy<Value = StepFunction> {
    (1usize..5).prop_flat_map(|cells| {
        (
            prop::collection::vec(0.05f64..1.0, cells),
            prop::collection::vec(-2.0f64..2.0, cells),
            0.0f64..1.0,
        )
            .prop_map(|(widths, values, start)| {
                let mut breaks = vec![start];
                for w in widths {
                    breaks.push(breaks.last().unwrap() + w);
                }
                StepFunction::new(breaks, values).unwrap()
            })
    })
}

fn path_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 3..60)
}

fn path(values: Vec<f64>) -> SamplePath {
    let grid = TimeGrid::new(3.0, values.len() - 1).unwrap();
    SamplePath::new(grid, values, PathLabel::Fou).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_product_symmetric_and_positive(phi in step_function(), psi in step_function(), h in 0.51f64..0.99) {
        let h = HurstParameter::new(h).unwrap();
        let ab = inner_product_h(&phi, &psi, h).unwrap();
        let ba = inner_product_h(&psi, &phi, h).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0));
        prop_assert!(inner_product_h(&phi, &phi, h).unwrap() >= -1e-12);
    }

    #[test]
    fn indicator_inner_product_is_increment_covariance(a in 0.0f64..2.0, b in 0.0f64..2.0, h in 0.51f64..0.99) {
        let h = HurstParameter::new(h).unwrap();
        let ind_a = StepFunction::indicator(0.0, a.max(1e-3)).unwrap();
        let ind_b = StepFunction::indicator(0.0, b.max(1e-3)).unwrap();
        let got = inner_product_h(&ind_a, &ind_b, h).unwrap();
        let want = fbm_covariance(a.max(1e-3), b.max(1e-3), h);
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn estimators_ignore_overall_scale(values in path_values(), k in -4i32..4) {
        let p = path(values);
        prop_assume!(integrated_square(&p) > 1e-6);
        let c = 2f64.powi(k);
        let scaled = p.scaled(c);
        prop_assert_eq!(theta_hat_prime(&p).unwrap().estimate, theta_hat_prime(&scaled).unwrap().estimate);
        prop_assert_eq!(theta_hat_ito(&p).unwrap().estimate, theta_hat_ito(&scaled).unwrap().estimate);
        let h = HurstParameter::new(0.6).unwrap();
        prop_assert_eq!(
            theta_tilde(&p, 1.3, h).unwrap().estimate,
            theta_tilde(&scaled, 1.3 * c, h).unwrap().estimate
        );
    }

    #[test]
    fn integrated_square_is_nonnegative_and_quadratic(values in path_values()) {
        let p = path(values);
        let is = integrated_square(&p);
        prop_assert!(is >= 0.0);
        prop_assert_eq!(integrated_square(&p.scaled(2.0)), 4.0 * is);
    }

    #[test]
    fn fou_is_linear_in_sigma(seed in any::<u64>(), sigma in 0.1f64..5.0) {
        let h = HurstParameter::new(0.65).unwrap();
        let grid = TimeGrid::new(2.0, 64).unwrap();
        let fbm = fou_core::fbm::generate_fbm(grid, h, seed, FbmMethod::CirculantEmbedding).unwrap();
        let one = simulate_fou(&FouParams::new(1.5, 1.0, h).unwrap(), &fbm, Scheme::IntegratingFactor).unwrap();
        let many = simulate_fou(&FouParams::new(1.5, sigma, h).unwrap(), &fbm, Scheme::IntegratingFactor).unwrap();
        for (a, b) in one.values().iter().zip(many.values()) {
            prop_assert!((a * sigma - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn config_round_trips(
        seed in any::<u64>(),
        n_reps in 2usize..5000,
        h in 0.5f64..0.74,
        theta in 0.01f64..10.0,
        ts in prop::collection::btree_set(1u32..5000, 1..5),
    ) {
        let c = ExperimentConfig {
            kind: ExperimentKind::Consistency,
            params: FouParams::from_values(theta, 1.0, h).unwrap(),
            t_values: ts.into_iter().map(f64::from).collect(),
            delta: 0.01,
            n_reps,
            master_seed: seed,
            estimator: EstimatorKind::ThetaTilde,
            output_path: "out/dir".into(),
        };
        let text = serde_json::to_string(&c).unwrap();
        prop_assert_eq!(parse_config(&text, Path::new("p.json")).unwrap(), c);
    }
}
