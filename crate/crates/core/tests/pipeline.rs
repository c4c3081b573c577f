use std::fs::File;
use wgmc::free_energy::{free_energy_rows, read_rows, write_rows, FreeEnergyParams};
use wgmc::noise::{Mollifier, NoiseSpec};
use wgmc::paths::{she_solution, PathSet, SheParams, WeightedEnsemble};
use wgmc::stats;

#[test]
fn free_energy_rows_survive_a_file_round_trip() {
    let m = Mollifier::new(1).unwrap();
    let p = FreeEnergyParams::new(1, 2.0, 3, 32, 11);
    let rows = free_energy_rows(&[0.0, 0.5, 1.0], &p, &m).unwrap();
    assert_eq!(rows.len(), 9);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("free_energy.csv");
    write_rows(File::create(&path).unwrap(), &rows).unwrap();
    let back = read_rows(File::open(&path).unwrap()).unwrap();
    assert_eq!(back, rows);
    for r in &rows {
        assert!((r.log_z - r.m_t - r.int_phi - r.residual).abs() < 1e-9);
        if r.beta == 0.0 {
            assert_eq!(r.log_z, 0.0);
            assert_eq!(r.qv, 0.0);
        }
    }
}

#[test]
fn free_endpoint_matches_the_brownian_marginal() {
    let (n, t) = (10_000, 4.0);
    let m = Mollifier::new(1).unwrap();
    let spec = NoiseSpec::new(1).with_dt(1.0 / 8.0);
    let g = spec.geometry(&[0.0], &[0.0], t).unwrap();
    let noise = spec.realize(g, 5).unwrap();
    let paths = PathSet::simulate(n, t, 1.0 / 8.0, 1, &[0.0], 6).unwrap();
    let ens = WeightedEnsemble::weigh(paths, &noise, &m, 0.0).unwrap();
    let q = ens.endpoint_measure(t).unwrap();
    assert!(q.cloud.weights.iter().all(|&w| w == 1.0 / n as f64));
    let d = stats::ks_weighted_one_sample(&q.cloud.points, &q.cloud.weights, |x| stats::normal_cdf(x / t.sqrt()));
    // 1% critical value of the one-sample KS statistic.
    assert!(d < 1.628 / (n as f64).sqrt(), "KS distance {d}");
}

#[test]
fn she_solution_is_one_without_disorder() {
    let p = SheParams::new(3, 0.5, 0.0, 0.25, 16);
    assert_eq!(she_solution(&p, &[0.0, 0.0, 0.0], 3).unwrap(), 1.0);
}

#[test]
fn she_solution_has_unit_mean() {
    let p = SheParams::new(3, 0.5, 0.25, 0.25, 32);
    let u: Vec<f64> = (0..120).map(|s| she_solution(&p, &[0.0, 0.0, 0.0], s).unwrap()).collect();
    let z = (stats::mean(&u) - 1.0) / stats::std_err(&u);
    assert!(z.abs() < 4.0, "z = {z}");
}
