use freemeasures_core::partitions::Partition;
use freemeasures_core::processes::{make_free_poisson, Subdivision};
use freemeasures_core::scalar::int;
use freemeasures_sim::experiments::{
    corollary_trend, lem_proj_decay, main_theorem_matrix_residual, main_theorem_trend,
    projection_envelope, trend_passes, ZModel,
};
use freemeasures_sim::{MatrixEnsembleConfig, Model};

#[test]
fn main_theorem_residual_shrinks() {
    let spec = make_free_poisson(int(1)).unwrap();
    let p: Partition = "((1,3)(2))".parse().unwrap();
    let points = [(150, 20), (300, 40), (600, 80)];
    let trend = main_theorem_trend(&p, &spec, &int(1), &points, 5, 4, 2024).unwrap();
    for point in &trend {
        eprintln!(
            "d={} N={} median={} reps={:?}",
            point.d, point.n, point.median, point.repetitions
        );
    }
    assert!(trend_passes(&trend, 0.2));
}

#[test]
fn main_theorem_trace_tracks_the_limit() {
    let spec = make_free_poisson(int(1)).unwrap();
    let p: Partition = "((1,3)(2))".parse().unwrap();
    let s = Subdivision::uniform(int(1), 40).unwrap();
    let cfg = MatrixEnsembleConfig::new(300, 20, 5, Model::PoissonSps).unwrap();
    let est = main_theorem_matrix_residual(&p, &spec, &cfg, &s).unwrap();
    eprintln!("trace {:?} ref {}", est.trace, est.reference);
    assert_eq!(est.reference, 1.0);
    assert!((est.trace.mean - est.reference).abs() < 0.1);
}

#[test]
fn projection_norms_decay() {
    for k in [1, 2] {
        let rows =
            lem_proj_decay(512, 20, 17, k, &[2, 4, 8, 16, 32], ZModel::CenteredGaussian).unwrap();
        for row in &rows {
            eprintln!(
                "k={k} N={} est={} se={} env={:?}",
                row.n, row.estimate, row.stderr, row.reference
            );
            assert!(row.pass, "{row:?}");
        }
        assert!(rows.windows(2).all(|w| w[1].estimate < w[0].estimate));
    }
    assert!((projection_envelope(1.0 / 16.0, 2, 2.0) - 32.0).abs() < 1e-12);
}

#[test]
fn sandwich_residual_shrinks() {
    let spec = make_free_poisson(int(1)).unwrap();
    let cfg = MatrixEnsembleConfig::new(300, 10, 8, Model::PoissonSps).unwrap();
    let rows = corollary_trend(&spec, &cfg, &int(1), &[5, 10, 20, 40]).unwrap();
    for row in &rows {
        eprintln!("N={} est={} se={}", row.n, row.estimate, row.stderr);
        assert!(row.pass, "{row:?}");
    }
}
