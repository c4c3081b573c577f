use super::estimate::FreeEnergyParams;
use crate::dynamics::endpoint_config;
use crate::error::{Error, Result};
use crate::functionals::phi_functional;
use crate::ito::{ito_series, ladder_factors, Bundle, ItoSeries, LadderRung};
use crate::noise::{KernelV, Mollifier, NoiseGrid};
use crate::paths::{renormalization, PathSet, WeightedEnsemble};
use crate::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// `log Z_t`, `M_t`, `∫_0^t Φ(Q̃_s) ds` and `⟨M⟩_t` on one path grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItoLedger {
    pub beta: f64,
    pub v0: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub log_z: Vec<f64>,
    pub martingale: Vec<f64>,
    /// Running `∫ Φ(Q̃_s) ds`, with the overlap taken on the noise cells.
    pub int_phi: Vec<f64>,
    pub qv: Vec<f64>,
    /// `log Z_T - M_T - ∫_0^T Φ dt`.
    pub residual: f64,
    pub min_ess: f64,
    pub terminal_ess: f64,
}

impl ItoLedger {
    pub fn from_series(s: &ItoSeries) -> Self {
        let log_z: Vec<f64> = s.log_f.iter().map(|l| l - s.log_f[0]).collect();
        Self {
            beta: s.beta,
            v0: s.v0,
            dt: s.times.get(1).copied().unwrap_or(0.0),
            residual: s.terminal_residual(),
            min_ess: s.min_ess(),
            terminal_ess: *s.ess.last().unwrap(),
            times: s.times.clone(),
            log_z,
            martingale: s.martingale.clone(),
            int_phi: s.drift.clone(),
            qv: s.qv.clone(),
        }
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn terminal_log_z(&self) -> f64 {
        *self.log_z.last().unwrap()
    }

    pub fn terminal_martingale(&self) -> f64 {
        *self.martingale.last().unwrap()
    }

    pub fn terminal_int_phi(&self) -> f64 {
        *self.int_phi.last().unwrap()
    }

    pub fn terminal_qv(&self) -> f64 {
        *self.qv.last().unwrap()
    }
}

/// Ledger of `n` equally weighted paths under one noise realization.
pub fn ito_ledger(paths: &PathSet, noise: &NoiseGrid, mollifier: &Mollifier, beta: f64) -> Result<ItoLedger> {
    let b = [Bundle {
        noise,
        paths,
        log_mass: vec![-(paths.n() as f64).ln(); paths.n()],
    }];
    Ok(ItoLedger::from_series(&ito_series(&b, 0.0, mollifier, beta)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItoCheckReport {
    pub beta: f64,
    pub horizon: f64,
    pub rungs: Vec<LadderRung>,
    /// `β² T V(0) / 2`, the scale against which residuals are reported.
    pub scale: f64,
    /// Finest-rung RMS residual divided by `scale`.
    pub relative_residual: f64,
    pub min_ess: f64,
    pub reliable: bool,
    /// Replica 0 ledger at each rung.
    pub ledgers: Vec<ItoLedger>,
}

impl ItoCheckReport {
    pub fn residuals_decrease(&self) -> bool {
        self.rungs.windows(2).all(|w| w[1].rms < w[0].rms)
    }
}

/// Replica `r` draws noise and paths at the finest step; each rung subsamples
/// the paths and integrates the same noise, so rungs are coupled.
pub fn ito_decomposition_check(
    beta: f64,
    ladder: &[f64],
    p: &FreeEnergyParams,
    mollifier: &Mollifier,
) -> Result<ItoCheckReport> {
    let (fine, factors) = ladder_factors(ladder)?;
    if p.replicas == 0 {
        return Err(Error::InvalidParameter("at least one replica".into()));
    }
    let mut fp = p.clone();
    fp.spec.dt = fine;
    let per_replica: Vec<Vec<ItoLedger>> = (0..p.replicas)
        .into_par_iter()
        .map(|r| {
            let (noise, paths) = fp.replica(mollifier, r)?;
            factors
                .iter()
                .map(|&f| ito_ledger(&paths.subsample(f)?, &noise, mollifier, beta))
                .collect()
        })
        .collect::<Result<_>>()?;
    let rungs: Vec<LadderRung> = ladder
        .iter()
        .enumerate()
        .map(|(j, &dt)| LadderRung::from_residuals(dt, per_replica.iter().map(|l| l[j].residual).collect()))
        .collect();
    let scale = renormalization(beta, p.horizon, mollifier.l2_norm_sq());
    let finest = rungs.last().unwrap().rms;
    let min_ess = per_replica
        .iter()
        .flatten()
        .map(|l| l.min_ess)
        .fold(f64::INFINITY, f64::min);
    Ok(ItoCheckReport {
        beta,
        horizon: p.horizon,
        scale,
        relative_residual: if finest == 0.0 { 0.0 } else { finest / scale },
        min_ess,
        reliable: min_ess >= p.ess_floor,
        ledgers: per_replica.into_iter().next().unwrap(),
        rungs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QvReport {
    pub qv: f64,
    /// `T β² V(0)`.
    pub bound: f64,
    pub ratio: f64,
    pub holds: bool,
    /// `1 - ⟨M⟩_T / bound`.
    pub strict_margin: f64,
}

/// `⟨M⟩_T ≤ T β² V(0) (1 + 1e-9)`.
pub fn qv_bound_check(ledger: &ItoLedger, kernel: &KernelV) -> QvReport {
    let bound = ledger.horizon() * ledger.beta * ledger.beta * kernel.v0();
    let qv = ledger.terminal_qv();
    let ratio = if bound > 0.0 { qv / bound } else { 0.0 };
    QvReport {
        qv,
        bound,
        ratio,
        holds: qv <= bound * (1.0 + 1e-9),
        strict_margin: 1.0 - ratio,
    }
}

/// `(1/T) log Z_T` against `𝓘_Φ(ν_T)` with `Φ` evaluated by the kernel on the
/// snapshots `Q̃_{t_0}, …, Q̃_{t_{m-1}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationConsistency {
    pub log_z_rate: f64,
    pub phi_average: f64,
    /// `(1/T) log Z_T - 𝓘_Φ(ν_T)`.
    pub gap: f64,
    pub martingale_rate: f64,
    /// `|gap - M_T / T|`.
    pub discrepancy: f64,
}

pub fn occupation_consistency(ens: &WeightedEnsemble, ledger: &ItoLedger, kernel: &KernelV) -> Result<OccupationConsistency> {
    let m = ens.paths().steps();
    if ledger.times.len() != m + 1 {
        return Err(Error::GridMismatch("ledger and ensemble grids differ".into()));
    }
    let beta = ens.beta();
    let phis: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|k| Ok(phi_functional(&endpoint_config(&ens.endpoint_at(k))?, beta, kernel)))
        .collect::<Result<_>>()?;
    let t = ledger.horizon();
    let log_z_rate = ledger.terminal_log_z() / t;
    let phi_average = stats::mean(&phis);
    let gap = log_z_rate - phi_average;
    let martingale_rate = ledger.terminal_martingale() / t;
    Ok(OccupationConsistency {
        log_z_rate,
        phi_average,
        gap,
        martingale_rate,
        discrepancy: (gap - martingale_rate).abs(),
    })
}

/// Replica means of `(1/T) log Z_T` and `(1/T) ∫ Φ dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftIdentity {
    pub mean_log_z_rate: f64,
    pub mean_phi_rate: f64,
    pub combined_std_err: f64,
    pub z_score: f64,
}

pub fn drift_identity(ledgers: &[ItoLedger]) -> DriftIdentity {
    let a: Vec<f64> = ledgers.iter().map(|l| l.terminal_log_z() / l.horizon()).collect();
    let b: Vec<f64> = ledgers.iter().map(|l| l.terminal_int_phi() / l.horizon()).collect();
    let se = (stats::std_err(&a).powi(2) + stats::std_err(&b).powi(2)).sqrt();
    let diff = stats::mean(&a) - stats::mean(&b);
    DriftIdentity {
        mean_log_z_rate: stats::mean(&a),
        mean_phi_rate: stats::mean(&b),
        combined_std_err: se,
        z_score: if se > 0.0 { diff / se } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize, seed: u64) -> (FreeEnergyParams, Mollifier) {
        (FreeEnergyParams::new(1, 2.0, 4, n, seed), Mollifier::new(1).unwrap())
    }

    #[test]
    fn zero_beta_ledger_vanishes() {
        let (p, m) = setup(16, 1);
        let (noise, paths) = p.replica(&m, 0).unwrap();
        let l = ito_ledger(&paths, &noise, &m, 0.0).unwrap();
        assert!(l.log_z.iter().all(|&x| x == 0.0));
        assert!(l.martingale.iter().all(|&x| x == 0.0));
        assert!(l.int_phi.iter().all(|&x| x == 0.0));
        assert_eq!(l.residual, 0.0);
    }

    #[test]
    fn single_path_ledger() {
        let (p, m) = setup(1, 2);
        let (noise, paths) = p.replica(&m, 0).unwrap();
        let beta = 0.7;
        let l = ito_ledger(&paths, &noise, &m, beta).unwrap();
        let ens = WeightedEnsemble::weigh(paths, &noise, &m, beta).unwrap();
        let h = ens.field(0, ens.paths().steps());
        assert!((l.terminal_log_z() - beta * h).abs() < 1e-12);
        assert!((l.terminal_martingale() - beta * h).abs() < 1e-9);
        assert!(l.terminal_int_phi().abs() < 1e-12);
        let k = KernelV::build(&m, 256).unwrap();
        let q = qv_bound_check(&l, &k);
        assert!(q.holds && (q.ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn many_paths_strictly_below_bound() {
        let (p, m) = setup(256, 3);
        let (noise, paths) = p.replica(&m, 0).unwrap();
        let l = ito_ledger(&paths, &noise, &m, 1.0).unwrap();
        let q = qv_bound_check(&l, &KernelV::build(&m, 256).unwrap());
        assert!(q.holds && q.strict_margin > 0.01);
    }

    #[test]
    fn ladder_check_shapes() {
        let (mut p, m) = setup(16, 4);
        p.replicas = 3;
        let r = ito_decomposition_check(0.5, &[1.0 / 32.0, 1.0 / 64.0], &p, &m).unwrap();
        assert_eq!(r.rungs.len(), 2);
        assert_eq!(r.ledgers.len(), 2);
        assert_eq!(r.ledgers[0].times.len(), 65);
        assert_eq!(r.ledgers[1].times.len(), 129);
        let z = ito_decomposition_check(0.0, &[1.0 / 32.0, 1.0 / 64.0], &p, &m).unwrap();
        assert_eq!(z.relative_residual, 0.0);
        assert!(ito_decomposition_check(0.5, &[1.0 / 32.0], &p, &m).is_err());
    }

    #[test]
    fn occupation_consistency_at_zero_beta() {
        let (p, m) = setup(32, 5);
        let (noise, paths) = p.replica(&m, 0).unwrap();
        let l = ito_ledger(&paths, &noise, &m, 0.0).unwrap();
        let ens = WeightedEnsemble::weigh(paths, &noise, &m, 0.0).unwrap();
        let c = occupation_consistency(&ens, &l, &KernelV::build(&m, 256).unwrap()).unwrap();
        assert_eq!(c.gap, 0.0);
        assert_eq!(c.discrepancy, 0.0);
    }
}
