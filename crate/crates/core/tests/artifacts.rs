use psvs::io::{read_draws, read_moments, read_path, read_table, read_tradeoff_table, tradeoff_rows};
use psvs::pipeline::{run_on_dataset, RunConfig};
use psvs::synthetic::{generate_synthetic, SyntheticSpec};
use psvs::PredictorMode;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-11 * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn emitted_artifacts_reproduce_in_memory_values() {
    let spec = SyntheticSpec { n: 100, p: 5, q: 3, support: vec![1, 4], seed: 3, ..Default::default() };
    let (data, _) = generate_synthetic(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig {
        output_dir: dir.path().to_path_buf(),
        grid_size: 12,
        replicates: 400,
        kappas: vec![0.125],
        ..Default::default()
    };
    cfg.ssvs.n_iter = 200;
    cfg.ssvs.burn_in = 50;
    cfg.factor.k = 1;
    let report = run_on_dataset(&data, &cfg).unwrap();

    let rows = read_tradeoff_table(&dir.path().join("tradeoff.csv")).unwrap();
    let expected = tradeoff_rows(&report.loss_gap);
    assert_eq!(rows.len(), expected.len());
    for (a, b) in rows.iter().zip(&expected) {
        assert!(close(a.lambda, b.lambda) && close(a.delta_mean, b.delta_mean));
        assert!(close(a.band_lower, b.band_lower) && close(a.band_upper, b.band_upper));
        assert!(close(a.pi, b.pi));
        assert_eq!(a.support_size, b.support_size);
    }

    let path = read_path(&dir.path().join("path.csv")).unwrap();
    assert_eq!(path.support_sets, report.path.support_sets);
    for (a, b) in path.gammas.iter().zip(&report.path.gammas) {
        assert!(a.iter().zip(b.iter()).all(|(x, y)| close(*x, *y)));
    }

    let draws = read_draws(&dir.path().join("draws.csv")).unwrap();
    assert_eq!(draws.len(), report.n_draws);

    let ms = read_moments(&dir.path().join("moments.csv"), PredictorMode::Random).unwrap();
    assert!(ms.a.iter().zip(report.moments.a.iter()).all(|(x, y)| close(*x, *y)));

    // the config written next to the artifacts reproduces the run configuration
    let mut again = RunConfig::default();
    again.apply_text(&std::fs::read_to_string(dir.path().join("config.txt")).unwrap()).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn portfolio_sized_table_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let y_names: Vec<String> = (0..25).map(|i| format!("P{i}")).collect();
    let x_names = ["Mkt.RF", "SMB", "HML", "RMW", "CMA", "MOM", "ST_Rev", "LT_Rev", "BAB", "QMJ"];
    let mut y = y_names.join(",");
    let mut x = x_names.join(",");
    for t in 0..60 {
        y.push('\n');
        y.push_str(&(0..25).map(|j| format!("{}", (t * 7 + j * 3) % 11)).collect::<Vec<_>>().join(","));
        x.push('\n');
        x.push_str(&(0..10).map(|i| format!("{}", (t * 5 + i * i) % 13)).collect::<Vec<_>>().join(","));
    }
    std::fs::write(dir.path().join("y.csv"), y).unwrap();
    std::fs::write(dir.path().join("x.csv"), x).unwrap();
    let ds = psvs::io::ingest(&dir.path().join("y.csv"), &dir.path().join("x.csv")).unwrap();
    assert_eq!((ds.q(), ds.p(), ds.n()), (25, 10, 60));
    assert_eq!(ds.predictor_names[0], "Mkt.RF");
    let (names, m) = read_table(&dir.path().join("x.csv")).unwrap();
    assert_eq!(names.len(), 10);
    assert_eq!(m.nrows(), 60);
}
