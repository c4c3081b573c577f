use crate::config::{ExperimentConfig, Kind};
use crate::error::{CliError, Result};
use crate::manifest::ReplicaSeeds;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wgmc::cloud::WeightedCloud;
use wgmc::compact::{metric_d, wasserstein, ConfigDistribution, SubProbConfig, TestFunctionFamily};
use wgmc::dynamics::run_log;
use wgmc::free_energy::{
    free_energy_rows, ito_decomposition_check, ito_ledger, lyapunov_scan, occupation_consistency, write_rows,
    FreeEnergyParams, FreeEnergySummary,
};
use wgmc::functionals::localization_statistic;
use wgmc::ito::shrink_factors;
use wgmc::noise::{field_covariance, field_energy, KernelV, Mollifier};
use wgmc::paths::{scaling_check, PathSet, SheParams, WeightedEnsemble};
use wgmc::rng::{aux_rng, derive_seed};
use wgmc::stats;

pub const KERNEL_RESOLUTION: usize = 256;

/// An artifact produced in memory; the orchestrator writes it.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub struct SuiteOutput {
    pub seeds: Vec<ReplicaSeeds>,
    pub artifacts: Vec<Artifact>,
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Invalid(e.to_string()))
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v).map_err(|e| CliError::Invalid(e.to_string()))?;
    b.push(b'\n');
    Ok(b)
}

fn artifact(name: &str, bytes: Vec<u8>) -> Artifact {
    Artifact {
        name: name.into(),
        bytes,
    }
}

fn params(cfg: &ExperimentConfig) -> FreeEnergyParams {
    let mut p = FreeEnergyParams::new(cfg.dim, cfg.horizon, cfg.replicas, cfg.n_paths, cfg.seed);
    p.spec = cfg.noise_spec();
    p
}

fn replica_seeds(cfg: &ExperimentConfig) -> Vec<ReplicaSeeds> {
    (0..cfg.replicas as u64)
        .map(|r| ReplicaSeeds {
            replica: r as usize,
            noise: Some(derive_seed(cfg.seed, "replica-noise", r)),
            paths: Some(derive_seed(cfg.seed, "replica-paths", r)),
            aux: None,
        })
        .collect()
}

pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    match cfg.kind {
        Kind::Covariance => covariance(cfg),
        Kind::FreeEnergy => free_energy(cfg),
        Kind::Ito => ito(cfg),
        Kind::Localization => localization(cfg),
        Kind::Dynamics => dynamics(cfg),
        Kind::SheScaling => she_scaling(cfg),
        Kind::MetricSuite => metric_suite(cfg),
    }
}

#[derive(Serialize, Deserialize)]
pub struct CovarianceRow {
    pub pair: usize,
    pub oracle: f64,
    pub empirical: f64,
    pub std_err: f64,
    pub z: f64,
    pub bound: f64,
    pub dominated: bool,
}

fn covariance(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let m = Mollifier::new(cfg.dim)?;
    let kernel = KernelV::build(&m, KERNEL_RESOLUTION)?;
    let origin = vec![0.0; cfg.dim];
    let spec = cfg.noise_spec();
    let path_seed = derive_seed(cfg.seed, "cov-paths", 0);
    let paths = PathSet::simulate(2 * cfg.pairs, cfg.horizon, cfg.dt, cfg.dim, &origin, path_seed)?;
    let g = spec.geometry(&origin, &origin, cfg.horizon)?;
    let energies: Vec<Vec<f64>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let noise = spec.realize(g.clone(), derive_seed(cfg.seed, "cov-noise", r))?;
            (0..paths.n())
                .map(|i| field_energy(paths.path(i), cfg.dt, &noise, &m, cfg.horizon))
                .collect::<wgmc::Result<Vec<f64>>>()
        })
        .collect::<wgmc::Result<_>>()?;
    let bound = cfg.horizon * kernel.v0();
    let rows: Vec<CovarianceRow> = (0..cfg.pairs)
        .map(|k| {
            let a: Vec<f64> = energies.iter().map(|e| e[2 * k]).collect();
            let b: Vec<f64> = energies.iter().map(|e| e[2 * k + 1]).collect();
            let oracle = field_covariance(paths.path(2 * k), paths.path(2 * k + 1), cfg.dt, &kernel, cfg.horizon)?;
            let empirical = stats::covariance(&a, &b);
            let se = stats::covariance_std_err(&a, &b);
            Ok(CovarianceRow {
                pair: k,
                oracle,
                empirical,
                std_err: se,
                z: if se > 0.0 { (empirical - oracle) / se } else { 0.0 },
                bound,
                dominated: oracle <= bound,
            })
        })
        .collect::<wgmc::Result<_>>()?;
    let seeds = (0..cfg.replicas as u64)
        .map(|r| ReplicaSeeds {
            replica: r as usize,
            noise: Some(derive_seed(cfg.seed, "cov-noise", r)),
            paths: Some(path_seed),
            aux: None,
        })
        .collect();
    Ok(SuiteOutput {
        seeds,
        artifacts: vec![artifact("covariance.csv", csv_bytes(&rows)?)],
    })
}

fn free_energy(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let m = Mollifier::new(cfg.dim)?;
    let p = params(cfg);
    let betas = cfg.betas();
    let rows = free_energy_rows(&betas, &p, &m)?;
    let mut table = Vec::new();
    write_rows(&mut table, &rows)?;
    let summary = FreeEnergySummary::from_estimates(&lyapunov_scan(&betas, &p, &m)?);
    Ok(SuiteOutput {
        seeds: replica_seeds(cfg),
        artifacts: vec![
            artifact("free_energy.csv", table),
            artifact("free_energy_summary.json", json_bytes(&summary)?),
        ],
    })
}

#[derive(Serialize, Deserialize)]
pub struct LadderRow {
    pub beta: f64,
    pub dt: f64,
    pub rms: f64,
    pub mean: f64,
    pub std_err: f64,
    pub scale: f64,
    pub relative_rms: f64,
}

#[derive(Serialize, Deserialize)]
pub struct ItoSummaryEntry {
    pub beta: f64,
    pub relative_residual: f64,
    pub residuals_decrease: bool,
    pub shrink_factors: Vec<f64>,
    pub min_ess: f64,
    pub reliable: bool,
}

fn ito(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let m = Mollifier::new(cfg.dim)?;
    let p = params(cfg);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for b in cfg.betas() {
        let rep = ito_decomposition_check(b, &cfg.ladder, &p, &m)?;
        for r in &rep.rungs {
            rows.push(LadderRow {
                beta: b,
                dt: r.dt,
                rms: r.rms,
                mean: r.mean,
                std_err: r.std_err,
                scale: rep.scale,
                relative_rms: if rep.scale > 0.0 { r.rms / rep.scale } else { 0.0 },
            });
        }
        summary.push(ItoSummaryEntry {
            beta: b,
            relative_residual: rep.relative_residual,
            residuals_decrease: rep.residuals_decrease(),
            shrink_factors: shrink_factors(&rep.rungs),
            min_ess: rep.min_ess,
            reliable: rep.reliable,
        });
    }
    Ok(SuiteOutput {
        seeds: replica_seeds(cfg),
        artifacts: vec![
            artifact("ito_ladder.csv", csv_bytes(&rows)?),
            artifact("ito_summary.json", json_bytes(&summary)?),
        ],
    })
}

#[derive(Serialize, Deserialize)]
pub struct LocalizationRow {
    pub beta: f64,
    pub replica: usize,
    pub cesaro: f64,
    pub terminal_ess: f64,
}

/// Each replica's noise and paths are shared across the β grid.
fn per_replica_ensembles<T: Send>(
    cfg: &ExperimentConfig,
    f: impl Fn(usize, &WeightedEnsemble, &wgmc::noise::NoiseGrid, &PathSet) -> wgmc::Result<T> + Sync,
) -> Result<Vec<Vec<T>>> {
    let m = Mollifier::new(cfg.dim)?;
    let p = params(cfg);
    let betas = cfg.betas();
    Ok((0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let (noise, paths) = p.replica(&m, r)?;
            betas
                .iter()
                .map(|&b| {
                    let ens = WeightedEnsemble::weigh(paths.clone(), &noise, &m, b)?;
                    f(r, &ens, &noise, &paths)
                })
                .collect()
        })
        .collect::<wgmc::Result<_>>()?)
}

fn localization(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let eps = cfg.epsilon;
    let per = per_replica_ensembles(cfg, |r, ens, _, _| {
        let run = ens.endpoint_run(cfg.stride)?;
        let stat = localization_statistic(&run, |t| eps.at(t))?;
        Ok(LocalizationRow {
            beta: ens.beta(),
            replica: r,
            cesaro: stat.cesaro,
            terminal_ess: ens.ess(),
        })
    })?;
    let mut rows: Vec<LocalizationRow> = per.into_iter().flatten().collect();
    rows.sort_by(|a, b| a.beta.total_cmp(&b.beta).then(a.replica.cmp(&b.replica)));
    Ok(SuiteOutput {
        seeds: replica_seeds(cfg),
        artifacts: vec![artifact("localization.csv", csv_bytes(&rows)?)],
    })
}

#[derive(Serialize, Deserialize)]
pub struct DynamicsRow {
    pub beta: f64,
    pub replica: usize,
    pub time: f64,
    pub psi: f64,
    pub phi: f64,
    pub island_count: usize,
    pub covered_mass: f64,
    pub ess: f64,
}

#[derive(Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub beta: f64,
    pub replica: usize,
    pub log_z_rate: f64,
    pub phi_average: f64,
    pub gap: f64,
    pub martingale_rate: f64,
    pub discrepancy: f64,
}

fn dynamics(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let m = Mollifier::new(cfg.dim)?;
    let kernel = KernelV::build(&m, KERNEL_RESOLUTION)?;
    let eps = cfg.epsilon;
    let per = per_replica_ensembles(cfg, |r, ens, noise, paths| {
        let log = run_log(ens, cfg.stride, &kernel, |t| eps.at(t))?;
        let ledger = ito_ledger(paths, noise, &m, ens.beta())?;
        let oc = occupation_consistency(ens, &ledger, &kernel)?;
        let rows: Vec<DynamicsRow> = log
            .into_iter()
            .map(|l| DynamicsRow {
                beta: ens.beta(),
                replica: r,
                time: l.time,
                psi: l.psi,
                phi: l.phi,
                island_count: l.island_count,
                covered_mass: l.covered_mass,
                ess: l.ess,
            })
            .collect();
        let c = ConsistencyRow {
            beta: ens.beta(),
            replica: r,
            log_z_rate: oc.log_z_rate,
            phi_average: oc.phi_average,
            gap: oc.gap,
            martingale_rate: oc.martingale_rate,
            discrepancy: oc.discrepancy,
        };
        Ok((rows, c))
    })?;
    let mut traj = Vec::new();
    let mut cons = Vec::new();
    for (rows, c) in per.into_iter().flatten() {
        traj.extend(rows);
        cons.push(c);
    }
    traj.sort_by(|a, b| a.beta.total_cmp(&b.beta).then(a.replica.cmp(&b.replica)));
    cons.sort_by(|a, b| a.beta.total_cmp(&b.beta).then(a.replica.cmp(&b.replica)));
    Ok(SuiteOutput {
        seeds: replica_seeds(cfg),
        artifacts: vec![
            artifact("dynamics.csv", csv_bytes(&traj)?),
            artifact("dynamics_consistency.csv", csv_bytes(&cons)?),
        ],
    })
}

#[derive(Serialize, Deserialize)]
pub struct SheRow {
    pub beta: f64,
    pub replica: usize,
    pub u: f64,
    pub z: f64,
}

#[derive(Serialize, Deserialize)]
pub struct SheSummaryEntry {
    pub beta: f64,
    pub mean_u: f64,
    pub mean_z: f64,
    pub var_u: f64,
    pub var_z: f64,
    pub z_mean: f64,
    pub z_var: f64,
    pub max_pathwise_gap: f64,
}

fn she_scaling(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let spec = cfg.noise_spec();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut seeds = Vec::new();
    for (j, b) in cfg.betas().into_iter().enumerate() {
        let mut p = SheParams::new(cfg.dim, cfg.she_eps, b, cfg.horizon, cfg.n_paths);
        p.dt = cfg.dt;
        p.dx = cfg.dx;
        p.spread = spec.spread;
        let seed = derive_seed(cfg.seed, "she", j as u64);
        seeds.push(ReplicaSeeds {
            replica: j,
            noise: None,
            paths: None,
            aux: Some(seed),
        });
        let rep = scaling_check(&p, cfg.replicas, seed, cfg.she_mode)?;
        rows.extend(rep.u.iter().zip(&rep.z).enumerate().map(|(r, (&u, &z))| SheRow {
            beta: b,
            replica: r,
            u,
            z,
        }));
        summary.push(SheSummaryEntry {
            beta: b,
            mean_u: rep.mean_u,
            mean_z: rep.mean_z,
            var_u: rep.var_u,
            var_z: rep.var_z,
            z_mean: rep.z_mean,
            z_var: rep.z_var,
            max_pathwise_gap: rep.max_pathwise_gap,
        });
    }
    Ok(SuiteOutput {
        seeds,
        artifacts: vec![
            artifact("she_scaling.csv", csv_bytes(&rows)?),
            artifact("she_summary.json", json_bytes(&summary)?),
        ],
    })
}

/// A random configuration with up to three components of up to four atoms.
pub fn random_config<R: Rng>(rng: &mut R, dim: usize) -> SubProbConfig {
    let k = rng.random_range(0..=3usize);
    let mut total = rng.random_range(0.0..1.0);
    let mut comps = Vec::new();
    for c in 0..k {
        let atoms = rng.random_range(1..=4usize);
        let share = if c + 1 == k { total } else { total * rng.random_range(0.2..0.8) };
        total -= share;
        let raw: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| w * share / s).collect();
        let points = (0..atoms * dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        comps.push(WeightedCloud::new(dim, points, weights).expect("valid cloud"));
    }
    let used: f64 = comps.iter().map(|c| c.mass()).sum();
    SubProbConfig::new(dim, comps, (1.0 - used).max(0.0)).expect("valid config")
}

#[derive(Serialize, Deserialize)]
pub struct MetricRow {
    pub pair: usize,
    pub d_ab: f64,
    pub d_ba: f64,
    pub d_aa: f64,
    pub triangle_slack: f64,
    pub shift_error: f64,
}

#[derive(Serialize, Deserialize)]
pub struct MetricSummary {
    pub pairs: usize,
    pub max_symmetry_error: f64,
    pub max_identity_error: f64,
    pub min_triangle_slack: f64,
    pub max_shift_error: f64,
    pub wasserstein_trials: usize,
    pub max_wasserstein_gap: f64,
}

fn brute_force_matching(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    loop {
        best = best.min(perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>());
        // Next lexicographic permutation.
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    best / n as f64
}

fn metric_suite(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let fam = TestFunctionFamily::default();
    let rank = cfg.rank;
    let d = cfg.dim;
    let rows: Vec<MetricRow> = (0..cfg.pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = aux_rng(cfg.seed, "metric", k as u64);
            let a = random_config(&mut rng, d);
            let b = random_config(&mut rng, d);
            let c = random_config(&mut rng, d);
            let shifts: Vec<Vec<f64>> = a
                .components()
                .iter()
                .map(|_| (0..d).map(|_| rng.random_range(-50.0..50.0)).collect())
                .collect();
            let dist = |x: &SubProbConfig, y: &SubProbConfig| metric_d(x, y, &fam, rank).map(|v| v.value);
            let d_ab = dist(&a, &b)?;
            Ok(MetricRow {
                pair: k,
                d_ab,
                d_ba: dist(&b, &a)?,
                d_aa: dist(&a, &a)?,
                triangle_slack: dist(&a, &c)? + dist(&c, &b)? - d_ab,
                shift_error: dist(&a, &a.shifted(&shifts))?,
            })
        })
        .collect::<wgmc::Result<_>>()?;
    let trials = cfg.pairs.min(50);
    let gaps: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = aux_rng(cfg.seed, "metric-wasserstein", k as u64);
            let mut sample = || ConfigDistribution::new((0..3).map(|_| random_config(&mut rng, d)).collect());
            let (x, y) = (sample()?, sample()?);
            let w = wasserstein(&x, &y, &fam, rank)?.value;
            let cost = wgmc::compact::wasserstein::cost_matrix(&x, &y, &fam, rank)?;
            Ok((w - brute_force_matching(&cost)).abs())
        })
        .collect::<wgmc::Result<_>>()?;
    let max_of = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    let summary = MetricSummary {
        pairs: cfg.pairs,
        max_symmetry_error: max_of(&mut rows.iter().map(|r| (r.d_ab - r.d_ba).abs())),
        max_identity_error: max_of(&mut rows.iter().map(|r| r.d_aa.abs())),
        min_triangle_slack: rows.iter().map(|r| r.triangle_slack).fold(f64::INFINITY, f64::min),
        max_shift_error: max_of(&mut rows.iter().map(|r| r.shift_error)),
        wasserstein_trials: trials,
        max_wasserstein_gap: max_of(&mut gaps.into_iter()),
    };
    let seeds = (0..cfg.pairs as u64)
        .map(|k| ReplicaSeeds {
            replica: k as usize,
            noise: None,
            paths: None,
            aux: Some(derive_seed(cfg.seed, "metric", k)),
        })
        .collect();
    Ok(SuiteOutput {
        seeds,
        artifacts: vec![
            artifact("metric_suite.csv", csv_bytes(&rows)?),
            artifact("metric_summary.json", json_bytes(&summary)?),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_matching_checks_all_permutations() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        // Optimum 1 + 2 + 2 = 5 (rows to columns 1, 0, 2).
        assert!((brute_force_matching(&cost) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(brute_force_matching(&[vec![7.0]]), 7.0);
    }

    #[test]
    fn random_configs_are_subprobability() {
        let mut rng = aux_rng(1, "t", 0);
        for _ in 0..200 {
            let xi = random_config(&mut rng, 2);
            assert!(xi.total_mass() <= 1.0 + 1e-12);
            assert!(xi.components().len() <= 3);
        }
    }
}
