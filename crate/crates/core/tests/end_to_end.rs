use nalgebra::{DMatrix, DVector};
use psvs::pipeline::{run_on_dataset, RunConfig, Scenario};
use psvs::ssvs::{run_chain, SsvsConfig};
use psvs::factor::FactorConfig;
use psvs::moments::{build_lasso_problem, compute_moments};
use psvs::path::{lambda_grid, solve_path};
use psvs::synthetic::{generate_synthetic, SyntheticSpec};
use psvs::PredictorMode;

fn quick_config(dir: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig {
        output_dir: dir.to_path_buf(),
        grid_size: 20,
        replicates: 2000,
        kappas: vec![0.125],
        ..Default::default()
    };
    cfg.ssvs.n_iter = 1500;
    cfg.ssvs.burn_in = 300;
    cfg.factor.k = 2;
    cfg
}

#[test]
fn null_signal_selects_little_or_nothing() {
    let mut total = 0;
    let seeds = [1u64, 2, 3, 4, 5];
    for seed in seeds {
        let spec = SyntheticSpec {
            n: 200,
            p: 8,
            q: 5,
            beta: Some(DMatrix::zeros(8, 5)),
            seed,
            ..Default::default()
        };
        let (data, _) = generate_synthetic(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = quick_config(dir.path());
        cfg.seed = seed;
        let report = run_on_dataset(&data, &cfg).unwrap();
        total += report.selection_at(0.125).unwrap().support.len();
    }
    let mean = total as f64 / seeds.len() as f64;
    assert!(mean <= 2.0, "average selected links {mean}");
}

#[test]
fn scalar_regression_recovers_coefficient() {
    let beta_true = 0.9;
    let spec = SyntheticSpec {
        n: 2000,
        p: 1,
        q: 1,
        beta: Some(DMatrix::from_element(1, 1, beta_true)),
        b: Some(DVector::zeros(1)),
        predictor_factors: 1,
        seed: 12,
        ..Default::default()
    };
    let (data, _) = generate_synthetic(&spec).unwrap();
    let cfg = SsvsConfig { n_iter: 2000, burn_in: 500, seed: 3, residual_factor: false, ..Default::default() };
    let chain = run_chain(&data, &cfg, &FactorConfig { k: 1, ..Default::default() }).unwrap();
    let betas: Vec<f64> = chain.draws.iter().map(|d| d.params.beta[(0, 0)]).collect();
    let mean = betas.iter().sum::<f64>() / betas.len() as f64;
    let sd = (betas.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (betas.len() - 1) as f64).sqrt();
    let ms = compute_moments(&chain.draws, PredictorMode::Random, None).unwrap();
    let prob = build_lasso_problem(&ms);
    let path = solve_path(&prob, &lambda_grid(&prob, 10, 0.01).unwrap()).unwrap();
    let gamma = path.gammas.last().unwrap()[(0, 0)];
    assert!((gamma - beta_true).abs() < 2.0 * sd, "γ* {gamma}, truth {beta_true}, sd {sd}");
}

#[test]
fn scenarios_share_everything_but_mode_and_prior() {
    let spec = SyntheticSpec { n: 150, p: 5, q: 3, support: vec![2], seed: 9, ..Default::default() };
    let (data, _) = generate_synthetic(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut base = quick_config(dir.path());
    base.ssvs.n_iter = 400;
    base.ssvs.burn_in = 100;
    base.replicates = 500;
    let reports: Vec<_> = Scenario::ALL
        .iter()
        .map(|s| (s, run_on_dataset(&data, &s.configure(&base)).unwrap()))
        .collect();
    // the chain does not depend on the predictor mode
    let by = |s: Scenario| &reports.iter().find(|(x, _)| **x == s).unwrap().1;
    assert_eq!(
        std::fs::read(dir.path().join("random_point_mass/draws.csv")).unwrap(),
        std::fs::read(dir.path().join("fixed_point_mass/draws.csv")).unwrap()
    );
    assert!(by(Scenario::RandomAlternative).inclusion.iter().all(|f| *f == 1.0));
    assert_eq!(by(Scenario::FixedAlternative).loss_gap.mode, PredictorMode::Fixed);
    for (_, r) in &reports {
        assert_eq!(r.path.len(), base.grid_size + 1);
    }
}
