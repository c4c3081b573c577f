use crate::error::{Error, Result};
use crate::noise::{steps_for, Mollifier, NoiseGrid, NoiseSpec};
use crate::paths::{renormalization, PathSet, WeightedEnsemble};
use crate::rng::derive_seed;
use crate::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Replica layout shared by the free-energy experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyParams {
    pub horizon: f64,
    pub replicas: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub spec: NoiseSpec,
    /// Estimates whose smallest terminal ESS falls below this are marked unreliable.
    pub ess_floor: f64,
    /// Number of equally spaced times (ending at the horizon) at which `log scrZ_t` is recorded.
    pub checkpoints: usize,
}

impl FreeEnergyParams {
    pub fn new(dim: usize, horizon: f64, replicas: usize, n_paths: usize, seed: u64) -> Self {
        Self {
            horizon,
            replicas,
            n_paths,
            seed,
            spec: NoiseSpec::new(dim),
            ess_floor: 1.0,
            checkpoints: 8,
        }
    }

    /// Noise and paths of replica `r`; the same for every β.
    pub fn replica(&self, mollifier: &Mollifier, r: usize) -> Result<(NoiseGrid, PathSet)> {
        let d = mollifier.dim();
        let origin = vec![0.0; d];
        let g = self.spec.geometry(&origin, &origin, self.horizon)?;
        let noise = self.spec.realize(g, derive_seed(self.seed, "replica-noise", r as u64))?;
        let paths = PathSet::simulate(
            self.n_paths,
            self.horizon,
            self.spec.dt,
            d,
            &origin,
            derive_seed(self.seed, "replica-paths", r as u64),
        )?;
        Ok((noise, paths))
    }

    /// Path-grid indices of the checkpoints.
    pub fn checkpoint_indices(&self, steps: usize) -> Vec<usize> {
        let c = self.checkpoints.clamp(1, steps.max(1));
        (1..=c).map(|j| j * steps / c).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.replicas < 2 {
            return Err(Error::InvalidParameter("at least two replicas are required".into()));
        }
        if self.n_paths == 0 || !(self.horizon > 0.0) {
            return Err(Error::InvalidParameter("n_paths and horizon must be positive".into()));
        }
        Ok(())
    }
}

/// Per-replica slope of `log scrZ_t` against `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub mean_log_scr_z: Vec<f64>,
    pub mean_slope: f64,
    pub slope_std_err: f64,
    /// One-sided 95% test that the mean slope is negative.
    pub decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyEstimate {
    pub beta: f64,
    pub horizon: f64,
    pub replicas: usize,
    /// Mean of `(1/T) log Z_T`.
    pub mean_log_z_rate: f64,
    /// Mean of `(1/T) log scrZ_T`.
    pub mean_log_scr_z_rate: f64,
    /// `-mean (1/T) log scrZ_T`.
    pub lambda_hat: f64,
    pub std_err: f64,
    pub min_ess: f64,
    pub reliable: bool,
    pub log_z: Vec<f64>,
    pub log_scr_z: Vec<f64>,
    pub ess: Vec<f64>,
    pub decay: DecayReport,
}

impl FreeEnergyEstimate {
    /// `β² V(0)/2 - mean (1/T) log Z_T`, algebraically equal to `lambda_hat`.
    pub fn lambda_from_log_z(&self, v0: f64) -> f64 {
        0.5 * self.beta * self.beta * v0 - self.mean_log_z_rate
    }
}

/// Shared replica loop: one noise and path set per replica, reused for every β.
pub fn lyapunov_scan(betas: &[f64], p: &FreeEnergyParams, mollifier: &Mollifier) -> Result<Vec<FreeEnergyEstimate>> {
    p.validate()?;
    let v0 = mollifier.l2_norm_sq();
    // [replica][beta] -> (log Z_T, ESS, log scrZ at checkpoints)
    type Row = Vec<(f64, f64, Vec<f64>)>;
    let rows: Vec<Row> = (0..p.replicas)
        .into_par_iter()
        .map(|r| {
            let (noise, paths) = p.replica(mollifier, r)?;
            let ens = WeightedEnsemble::weigh(paths, &noise, mollifier, 1.0)?;
            let m = ens.paths().steps();
            let dt = ens.paths().dt();
            let cps = p.checkpoint_indices(m);
            let n = ens.n() as f64;
            Ok(betas
                .iter()
                .map(|&b| {
                    let lz_at = |k: usize| {
                        let l: Vec<f64> = (0..ens.n()).map(|i| b * ens.field(i, k)).collect();
                        stats::log_sum_exp(&l) - n.ln()
                    };
                    let lw: Vec<f64> = (0..ens.n()).map(|i| b * ens.field(i, m)).collect();
                    let ess = stats::effective_sample_size(&lw);
                    let decay = cps
                        .iter()
                        .map(|&k| lz_at(k) - renormalization(b, k as f64 * dt, v0))
                        .collect();
                    (lz_at(m), ess, decay)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let steps = steps_for(p.horizon, p.spec.dt)?;
    let times: Vec<f64> = p
        .checkpoint_indices(steps)
        .iter()
        .map(|&k| k as f64 * p.spec.dt)
        .collect();
    let t = p.horizon;
    Ok(betas
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let log_z: Vec<f64> = rows.iter().map(|r| r[j].0).collect();
            let ess: Vec<f64> = rows.iter().map(|r| r[j].1).collect();
            let renorm = renormalization(b, t, v0);
            let log_scr_z: Vec<f64> = log_z.iter().map(|l| l - renorm).collect();
            let rates: Vec<f64> = log_scr_z.iter().map(|l| l / t).collect();
            let min_ess = ess.iter().copied().fold(f64::INFINITY, f64::min);
            let series: Vec<&Vec<f64>> = rows.iter().map(|r| &r[j].2).collect();
            FreeEnergyEstimate {
                beta: b,
                horizon: t,
                replicas: p.replicas,
                mean_log_z_rate: stats::mean(&log_z) / t,
                mean_log_scr_z_rate: stats::mean(&rates),
                lambda_hat: -stats::mean(&rates),
                std_err: stats::std_err(&rates),
                min_ess,
                reliable: min_ess >= p.ess_floor,
                log_z,
                log_scr_z,
                ess,
                decay: decay_report(&times, &series),
            }
        })
        .collect())
}

pub fn lyapunov_estimate(beta: f64, p: &FreeEnergyParams, mollifier: &Mollifier) -> Result<FreeEnergyEstimate> {
    Ok(lyapunov_scan(&[beta], p, mollifier)?.remove(0))
}

fn decay_report(times: &[f64], series: &[&Vec<f64>]) -> DecayReport {
    let mean_log_scr_z = (0..times.len())
        .map(|k| stats::mean(&series.iter().map(|s| s[k]).collect::<Vec<_>>()))
        .collect();
    let (mean_slope, slope_std_err) = if times.len() >= 2 {
        let slopes: Vec<f64> = series.iter().map(|s| stats::ols(times, s).slope).collect();
        (stats::mean(&slopes), stats::std_err(&slopes))
    } else {
        (f64::NAN, f64::NAN)
    };
    DecayReport {
        times: times.to_vec(),
        mean_log_scr_z,
        mean_slope,
        slope_std_err,
        decreasing: mean_slope + 1.645 * slope_std_err < 0.0,
    }
}

/// `Λ̂ - 3·stderr > 0`.
pub fn strong_disorder_flag(e: &FreeEnergyEstimate) -> bool {
    e.lambda_hat - 3.0 * e.std_err > 0.0
}

/// Two-point extrapolation of `v(T) = v_∞ + c/T`.
pub fn richardson(t1: f64, v1: f64, t2: f64, v2: f64) -> Result<f64> {
    if !(t1 > 0.0 && t2 > 0.0) || t1 == t2 {
        return Err(Error::InvalidParameter(format!("horizons {t1}, {t2} must be positive and distinct")));
    }
    Ok((t2 * v2 - t1 * v1) / (t2 - t1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(lambda_hat: f64, std_err: f64) -> FreeEnergyEstimate {
        FreeEnergyEstimate {
            beta: 1.0,
            horizon: 1.0,
            replicas: 2,
            mean_log_z_rate: 0.0,
            mean_log_scr_z_rate: -lambda_hat,
            lambda_hat,
            std_err,
            min_ess: 1.0,
            reliable: true,
            log_z: vec![],
            log_scr_z: vec![],
            ess: vec![],
            decay: decay_report(&[], &[]),
        }
    }

    #[test]
    fn flag_thresholds() {
        assert!(strong_disorder_flag(&synthetic(0.5, 0.01)));
        assert!(!strong_disorder_flag(&synthetic(0.02, 0.01)));
        assert!(!strong_disorder_flag(&synthetic(0.0, 0.0)));
    }

    #[test]
    fn zero_beta_is_exactly_zero() {
        let m = Mollifier::new(1).unwrap();
        let p = FreeEnergyParams::new(1, 2.0, 3, 16, 1);
        let e = lyapunov_estimate(0.0, &p, &m).unwrap();
        assert_eq!(e.lambda_hat, 0.0);
        assert!(!strong_disorder_flag(&e));
        assert!(e.ess.iter().all(|&x| (x - 16.0).abs() < 1e-9));
    }

    #[test]
    fn scan_shares_replicas_across_beta() {
        let m = Mollifier::new(1).unwrap();
        let p = FreeEnergyParams::new(1, 2.0, 4, 16, 2);
        let scan = lyapunov_scan(&[0.5, 1.0], &p, &m).unwrap();
        let single = lyapunov_estimate(1.0, &p, &m).unwrap();
        assert_eq!(scan[1], single);
        assert!(scan.iter().all(|e| e.std_err > 0.0 && e.lambda_hat.is_finite()));
        for e in &scan {
            assert!((e.lambda_from_log_z(m.l2_norm_sq()) - e.lambda_hat).abs() < 1e-12);
            assert_eq!(e.decay.times.len(), 8);
            assert_eq!(*e.decay.times.last().unwrap(), 2.0);
        }
        assert!(lyapunov_estimate(1.0, &FreeEnergyParams::new(1, 2.0, 1, 16, 2), &m).is_err());
    }

    #[test]
    fn richardson_recovers_limit() {
        let v = |t: f64| 0.3 + 2.0 / t;
        assert!((richardson(4.0, v(4.0), 8.0, v(8.0)).unwrap() - 0.3).abs() < 1e-14);
        assert!(richardson(4.0, 1.0, 4.0, 1.0).is_err());
    }
}
