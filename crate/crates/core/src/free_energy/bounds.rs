use super::estimate::FreeEnergyParams;
use crate::error::{Error, Result};
use crate::noise::Mollifier;
use crate::paths::{renormalization, WeightedEnsemble};
use crate::rng::aux_rng;
use crate::stats;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub beta: f64,
    pub replicas: usize,
    pub horizons: Vec<f64>,
    /// Inter-replica standard deviation of `log Z_T`.
    pub std_devs: Vec<f64>,
    /// Slope of `log sd` against `log T`.
    pub slope: f64,
    pub slope_std_err: f64,
    pub degenerate: bool,
}

/// Fits `log sd(log Z_T)` against `log T`. Each replica runs to the largest
/// horizon and is read off at the others, which must lie on its path grid.
pub fn concentration_check(
    beta: f64,
    horizons: &[f64],
    p: &FreeEnergyParams,
    mollifier: &Mollifier,
) -> Result<ConcentrationReport> {
    if horizons.len() < 3 || p.replicas < 20 {
        return Err(Error::InvalidParameter(
            "need at least three horizons and twenty replicas".into(),
        ));
    }
    let t_max = horizons.iter().copied().fold(0.0, f64::max);
    let mut q = p.clone();
    q.horizon = t_max;
    let per: Vec<Vec<f64>> = (0..p.replicas)
        .into_par_iter()
        .map(|r| {
            let (noise, paths) = q.replica(mollifier, r)?;
            let ens = WeightedEnsemble::weigh(paths, &noise, mollifier, beta)?;
            horizons
                .iter()
                .map(|&t| Ok(ens.partition_at(ens.paths().index_of(t)?).log_z_hat))
                .collect()
        })
        .collect::<Result<_>>()?;
    let std_devs: Vec<f64> = (0..horizons.len())
        .map(|j| stats::std_dev(&per.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect();
    let degenerate = std_devs.iter().any(|&s| !(s > 0.0 && s.is_finite()));
    let (slope, slope_std_err) = if degenerate {
        (f64::NAN, f64::NAN)
    } else {
        let x: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = std_devs.iter().map(|s| s.ln()).collect();
        let fit = stats::ols(&x, &y);
        // Var(log sd) ≈ 1 / (2 (R - 1)) for near-Gaussian samples.
        let xm = stats::mean(&x);
        let sxx: f64 = x.iter().map(|a| (a - xm) * (a - xm)).sum();
        let var_y = 1.0 / (2.0 * (p.replicas as f64 - 1.0));
        (fit.slope, (var_y / sxx).sqrt())
    };
    Ok(ConcentrationReport {
        beta,
        replicas: p.replicas,
        horizons: horizons.to_vec(),
        std_devs,
        slope,
        slope_std_err,
        degenerate,
    })
}

/// Concave functions for the comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConcaveF {
    Log,
    Sqrt,
}

impl ConcaveF {
    /// `F(e^x)`.
    pub fn of_log(self, x: f64) -> f64 {
        match self {
            ConcaveF::Log => x,
            ConcaveF::Sqrt => (0.5 * x).exp(),
        }
    }

    /// `E F(scrZ)` for the fully correlated field, `scrZ = exp(β ζ √(T V0) - β² T V0 / 2)`.
    pub fn correlated_mean(self, beta: f64, t: f64, v0: f64) -> f64 {
        let s = beta * beta * t * v0;
        match self {
            ConcaveF::Log => -0.5 * s,
            ConcaveF::Sqrt => (-s / 8.0).exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KahaneRow {
    pub f: ConcaveF,
    pub mean_mollified: f64,
    pub se_mollified: f64,
    pub mean_correlated: f64,
    pub se_correlated: f64,
    pub closed_form: f64,
    /// `(mean_mollified - mean_correlated) / combined stderr`.
    pub margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KahaneReport {
    pub beta: f64,
    pub horizon: f64,
    pub rows: Vec<KahaneRow>,
    pub lambda_hat: f64,
    pub lambda_std_err: f64,
    /// `β² V(0) / 2`.
    pub lambda_bound: f64,
    pub lambda_bound_holds: bool,
}

/// Mean `F(scrZ)` of the mollified field against the field `ζ √(T V(0))`, which
/// dominates its covariance.
pub fn kahane_comparison_check(
    beta: f64,
    panel: &[ConcaveF],
    p: &FreeEnergyParams,
    mollifier: &Mollifier,
) -> Result<KahaneReport> {
    if p.replicas < 2 || panel.is_empty() {
        return Err(Error::InvalidParameter("need ≥ 2 replicas and a nonempty panel".into()));
    }
    let v0 = mollifier.l2_norm_sq();
    let t = p.horizon;
    let mollified: Vec<f64> = (0..p.replicas)
        .into_par_iter()
        .map(|r| {
            let (noise, paths) = p.replica(mollifier, r)?;
            Ok(WeightedEnsemble::weigh(paths, &noise, mollifier, beta)?
                .partition_function()
                .log_scr_z_hat)
        })
        .collect::<Result<_>>()?;
    let correlated: Vec<f64> = (0..p.replicas)
        .map(|r| {
            let z: f64 = aux_rng(p.seed, "kahane", r as u64).sample(StandardNormal);
            beta * z * (t * v0).sqrt() - renormalization(beta, t, v0)
        })
        .collect();
    let rows = panel
        .iter()
        .map(|&f| {
            let a: Vec<f64> = mollified.iter().map(|&x| f.of_log(x)).collect();
            let b: Vec<f64> = correlated.iter().map(|&x| f.of_log(x)).collect();
            let (ma, sa, mb, sb) = (stats::mean(&a), stats::std_err(&a), stats::mean(&b), stats::std_err(&b));
            let se = (sa * sa + sb * sb).sqrt();
            KahaneRow {
                f,
                mean_mollified: ma,
                se_mollified: sa,
                mean_correlated: mb,
                se_correlated: sb,
                closed_form: f.correlated_mean(beta, t, v0),
                margin: if se > 0.0 { (ma - mb) / se } else { 0.0 },
                holds: ma >= mb - 2.0 * se,
            }
        })
        .collect();
    let rates: Vec<f64> = mollified.iter().map(|x| -x / t).collect();
    let lambda_hat = stats::mean(&rates);
    let lambda_std_err = stats::std_err(&rates);
    let lambda_bound = 0.5 * beta * beta * v0;
    Ok(KahaneReport {
        beta,
        horizon: t,
        rows,
        lambda_hat,
        lambda_std_err,
        lambda_bound,
        lambda_bound_holds: lambda_hat <= lambda_bound + 2.0 * lambda_std_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlated_closed_forms_match_quadrature() {
        let (beta, t, v0): (f64, f64, f64) = (0.8, 3.0, 1.35);
        let s = (t * v0).sqrt();
        for f in [ConcaveF::Log, ConcaveF::Sqrt] {
            let g = crate::quadrature::integrate(
                |z| {
                    f.of_log(beta * z * s - 0.5 * beta * beta * t * v0) * (-0.5 * z * z).exp()
                        / (2.0 * std::f64::consts::PI).sqrt()
                },
                -12.0,
                12.0,
                1e-13,
            )
            .unwrap();
            assert!((g - f.correlated_mean(beta, t, v0)).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_beta_is_equality() {
        let m = Mollifier::new(1).unwrap();
        let p = FreeEnergyParams::new(1, 1.0, 4, 8, 1);
        let r = kahane_comparison_check(0.0, &[ConcaveF::Log, ConcaveF::Sqrt], &p, &m).unwrap();
        for row in &r.rows {
            assert_eq!(row.mean_mollified, row.mean_correlated);
            assert!(row.holds);
        }
        assert_eq!(r.rows[0].mean_mollified, 0.0);
        assert_eq!(r.rows[1].mean_mollified, 1.0);
    }

    #[test]
    fn concentration_zero_beta_is_degenerate() {
        let m = Mollifier::new(1).unwrap();
        let p = FreeEnergyParams::new(1, 4.0, 20, 4, 1);
        let r = concentration_check(0.0, &[1.0, 2.0, 4.0], &p, &m).unwrap();
        assert!(r.degenerate);
        assert!(r.std_devs.iter().all(|&s| s == 0.0));
        assert!(concentration_check(0.5, &[1.0, 2.0], &p, &m).is_err());
    }
}
