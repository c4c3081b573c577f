//! Discrete Itô bookkeeping for `log F̄_t`, where
//! `F̄_t = Σ_b Σ_i m_{b,i} e^{β H_t(W_{b,i})} + D e^{β² t V(0)/2}`.
//!
//! Each bundle `b` is a set of weighted paths driven by its own noise grid, and
//! `D` is the dust mass that grows deterministically at rate `β² V(0)/2`. The
//! martingale integrand `Σ_i w_i φ(y - W_i)` is discretized on the noise cells
//! with the same stencils as the field itself, so `log F̄`, the stochastic
//! integral and the overlap drift share one discretization.

use crate::error::{Error, Result};
use crate::noise::{Field, Mollifier, NoiseGrid, Stencil};
use crate::paths::{renormalization, PathSet};
use crate::stats::{self, log_sum_exp};
use serde::{Deserialize, Serialize};

/// Paths driven by one noise realization; `log_mass[i]` is `log m_i`.
#[derive(Clone, Debug)]
pub struct Bundle<'a> {
    pub noise: &'a NoiseGrid,
    pub paths: &'a PathSet,
    pub log_mass: Vec<f64>,
}

/// Running series on the path grid `t_k = k Δt`, `k = 0..=m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItoSeries {
    pub beta: f64,
    pub v0: f64,
    pub times: Vec<f64>,
    /// `log F̄_{t_k}`.
    pub log_f: Vec<f64>,
    /// `M_{t_k} = β Σ_{j<k} Σ_i w_i(t_j) ΔH_i(t_j)`.
    pub martingale: Vec<f64>,
    /// `∫_0^{t_k} (β²/2)(V(0) - overlap) ds`.
    pub drift: Vec<f64>,
    /// `⟨M⟩_{t_k} = β² Σ_{j<k} Δt · overlap(t_j)`.
    pub qv: Vec<f64>,
    /// Grid overlap `Σ_cells (Σ_i w_i s_i)²` at `t_0..t_{m-1}`.
    pub overlap: Vec<f64>,
    /// Effective sample size of the path weights at `t_k`.
    pub ess: Vec<f64>,
}

impl ItoSeries {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// `log F̄_{t_k} - log F̄_0 - M_{t_k} - drift_{t_k}`.
    pub fn residual_at(&self, k: usize) -> f64 {
        self.log_f[k] - self.log_f[0] - self.martingale[k] - self.drift[k]
    }

    pub fn terminal_residual(&self) -> f64 {
        self.residual_at(self.steps())
    }

    pub fn min_ess(&self) -> f64 {
        self.ess.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

struct Prepared<'a> {
    field: Field<'a>,
    bundle: &'a Bundle<'a>,
    sub: usize,
    acc: Vec<f64>,
    touched: Vec<usize>,
}

/// Run the bookkeeping over the common path grid of all bundles.
pub fn ito_series(bundles: &[Bundle<'_>], dust: f64, mollifier: &Mollifier, beta: f64) -> Result<ItoSeries> {
    if !(0.0..=1.0 + 1e-12).contains(&dust) {
        return Err(Error::InvalidParameter(format!("dust mass {dust} outside [0, 1]")));
    }
    let (steps, dt) = match bundles.first() {
        Some(b) => (b.paths.steps(), b.paths.dt()),
        None => return Err(Error::InvalidParameter("no bundles; use `dust_series`".into())),
    };
    let mut prep = Vec::with_capacity(bundles.len());
    for b in bundles {
        if b.paths.steps() != steps || (b.paths.dt() - dt).abs() > 1e-12 * dt {
            return Err(Error::GridMismatch("bundles have different path grids".into()));
        }
        if b.log_mass.len() != b.paths.n() {
            return Err(Error::DimensionMismatch {
                expected: b.paths.n(),
                got: b.log_mass.len(),
            });
        }
        let field = Field::new(b.noise, mollifier)?;
        let sub = field.substeps(dt)?;
        if steps * sub > b.noise.geometry().steps {
            return Err(Error::GridMismatch(format!(
                "paths need {} noise slabs, grid has {}",
                steps * sub,
                b.noise.geometry().steps
            )));
        }
        prep.push(Prepared {
            acc: vec![0.0; b.noise.geometry().slab_len()],
            touched: Vec::new(),
            field,
            bundle: b,
            sub,
        });
    }
    let v0 = mollifier.l2_norm_sq();
    let log_dust = if dust > 0.0 { dust.ln() } else { f64::NEG_INFINITY };
    let mut log_u: Vec<Vec<f64>> = bundles.iter().map(|b| b.log_mass.clone()).collect();
    let log_f_at = |log_u: &[Vec<f64>], t: f64| {
        let mut all: Vec<f64> = log_u.iter().flatten().copied().collect();
        all.push(log_dust + renormalization(beta, t, v0));
        log_sum_exp(&all)
    };

    let mut s = ItoSeries {
        beta,
        v0,
        times: (0..=steps).map(|k| k as f64 * dt).collect(),
        log_f: Vec::with_capacity(steps + 1),
        martingale: vec![0.0],
        drift: vec![0.0],
        qv: vec![0.0],
        overlap: Vec::with_capacity(steps),
        ess: Vec::with_capacity(steps + 1),
    };
    let ess_of = |log_u: &[Vec<f64>]| {
        let all: Vec<f64> = log_u.iter().flatten().copied().collect();
        stats::effective_sample_size(&all)
    };
    let mut st = Stencil::default();
    let mut overlap_sum = 0.0;
    let mut h = Vec::new();
    for k in 0..steps {
        let lf = log_f_at(&log_u, s.times[k]);
        s.log_f.push(lf);
        s.ess.push(ess_of(&log_u));
        let mut mart = 0.0;
        let mut overlap = 0.0;
        for (p, lu) in prep.iter_mut().zip(log_u.iter_mut()) {
            h.clear();
            for (i, &l) in lu.iter().enumerate() {
                p.field.stencil_into(p.bundle.paths.point(i, k), k, &mut st)?;
                let inc = p.field.increment(&st, k, p.sub, steps);
                h.push(inc);
                let w = (l - lf).exp();
                if w == 0.0 {
                    continue;
                }
                mart += w * inc;
                for (&c, &sw) in st.cells.iter().zip(&st.weights) {
                    if p.acc[c] == 0.0 {
                        p.touched.push(c);
                    }
                    p.acc[c] += w * sw;
                }
            }
            for &c in &p.touched {
                overlap += p.acc[c] * p.acc[c];
                p.acc[c] = 0.0;
            }
            p.touched.clear();
            for (l, &inc) in lu.iter_mut().zip(&h) {
                *l += beta * inc;
            }
        }
        overlap_sum += overlap;
        s.overlap.push(overlap);
        s.martingale.push(s.martingale[k] + beta * mart);
        s.qv.push(beta * beta * dt * overlap_sum);
        s.drift
            .push(renormalization(beta, s.times[k + 1], v0) - 0.5 * beta * beta * dt * overlap_sum);
    }
    s.log_f.push(log_f_at(&log_u, s.times[steps]));
    s.ess.push(ess_of(&log_u));
    Ok(s)
}

/// Series of the empty configuration: `log F̄_t = β² t V(0)/2`, no martingale part.
pub fn dust_series(steps: usize, dt: f64, v0: f64, beta: f64) -> ItoSeries {
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let r: Vec<f64> = times.iter().map(|&t| renormalization(beta, t, v0)).collect();
    ItoSeries {
        beta,
        v0,
        log_f: r.clone(),
        martingale: vec![0.0; steps + 1],
        drift: r,
        qv: vec![0.0; steps + 1],
        overlap: vec![0.0; steps],
        ess: vec![0.0; steps + 1],
        times,
    }
}

/// Terminal residuals of one resolution across replicas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRung {
    pub dt: f64,
    pub rms: f64,
    pub mean: f64,
    pub std_err: f64,
    pub residuals: Vec<f64>,
}

impl LadderRung {
    pub fn from_residuals(dt: f64, residuals: Vec<f64>) -> Self {
        let n = residuals.len().max(1) as f64;
        Self {
            dt,
            rms: (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt(),
            mean: stats::mean(&residuals),
            std_err: stats::std_err(&residuals),
            residuals,
        }
    }
}

/// `rms(Δt_j) / rms(Δt_{j+1})` along a coarse-to-fine ladder.
pub fn shrink_factors(rungs: &[LadderRung]) -> Vec<f64> {
    rungs.windows(2).map(|w| w[0].rms / w[1].rms).collect()
}

/// Integer subsampling factors of a coarse-to-fine ladder relative to its finest step.
pub fn ladder_factors(ladder: &[f64]) -> Result<(f64, Vec<usize>)> {
    if ladder.len() < 2 {
        return Err(Error::InvalidParameter("a ladder needs at least two resolutions".into()));
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) || !(ladder[ladder.len() - 1] > 0.0) {
        return Err(Error::InvalidParameter("ladder steps must be positive and decreasing".into()));
    }
    let fine = ladder[ladder.len() - 1];
    let mut f = Vec::with_capacity(ladder.len());
    for &dt in ladder {
        let q = (dt / fine).round();
        if (q * fine - dt).abs() > 1e-9 * dt {
            return Err(Error::GridMismatch(format!("step {dt} is not a multiple of {fine}")));
        }
        f.push(q as usize);
    }
    Ok((fine, f))
}
