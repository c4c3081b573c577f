//! Mass functionals `Ψ`, `Ψ_ε`, the overlap functional `Φ`, its integral
//! against configuration distributions, localization islands and the
//! time-averaged localization statistic.

use crate::cloud::WeightedCloud;
use crate::compact::{ball_masses, link_clusters, ConfigDistribution, SubProbConfig};
use crate::error::{Error, Result};
use crate::noise::KernelV;
use crate::paths::EndpointMeasure;
use crate::spatial::CellIndex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    std::f64::consts::PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// Total mass `Σ_i α_i(R^d)`.
pub fn psi(xi: &SubProbConfig) -> f64 {
    xi.total_mass().clamp(0.0, 1.0)
}

/// Mass of the atoms `x` of a cloud with `μ(B_1(x)) > c0 ε`.
fn dense_mass(c: &WeightedCloud, threshold: f64) -> f64 {
    ball_masses(c, 1.0)
        .iter()
        .zip(&c.weights)
        .filter(|(b, _)| **b > threshold)
        .map(|(_, w)| w)
        .sum()
}

/// `Ψ_ε(ξ) = Σ_i ∫ 1{α_i(B_1(x)) > c0 ε} α_i(dx)`, evaluated exactly on the atoms.
pub fn psi_eps(xi: &SubProbConfig, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {eps} outside (0, 1)")));
    }
    let thr = unit_ball_volume(xi.dim()) * eps;
    Ok(xi.components().iter().map(|c| dense_mass(c, thr)).sum())
}

/// `Σ_{a,b} m_a m_b V(x_a - x_b)` over one cloud.
pub fn self_overlap(c: &WeightedCloud, kernel: &KernelV) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let r = kernel.support_radius();
    let idx = CellIndex::new(c.dim, &c.points, r);
    let per_atom: Vec<f64> = (0..c.len())
        .into_par_iter()
        .map(|a| {
            let x = c.point(a);
            let mut s = 0.0;
            idx.for_each_within(x, r, false, |b, d2| {
                s += c.weights[b] * kernel.eval_radius(d2.sqrt());
            });
            c.weights[a] * s
        })
        .collect();
    per_atom.iter().sum()
}

/// `Φ(ξ) = (β²/2)(V(0) - Σ_i ∫∫ V(x - y) α_i(dx) α_i(dy))`, in `[0, β² V(0)/2]`.
pub fn phi_functional(xi: &SubProbConfig, beta: f64, kernel: &KernelV) -> f64 {
    let v0 = kernel.v0();
    let overlap: f64 = xi.components().iter().map(|c| self_overlap(c, kernel)).sum();
    0.5 * beta * beta * (v0 - overlap.clamp(0.0, v0))
}

/// `𝓘_Φ(θ)`: sample average of `Φ`.
pub fn integral_phi(theta: &ConfigDistribution, beta: f64, kernel: &KernelV) -> f64 {
    let v: Vec<f64> = theta
        .samples()
        .par_iter()
        .map(|xi| phi_functional(xi, beta, kernel))
        .collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Atoms (and optional refinement grid points) `x` with `Q(B_1(x)) > c0 ε`,
/// grouped into connected components of the union of unit balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IslandSet {
    pub dim: usize,
    pub eps: f64,
    pub c0: f64,
    pub centers: Vec<Vec<f64>>,
    pub ball_masses: Vec<f64>,
    /// Component label of each center.
    pub labels: Vec<usize>,
    pub island_count: usize,
    /// `Q(U_{t,ε})`: mass of the atoms lying in a qualifying unit ball around themselves.
    pub covered_mass: f64,
}

impl IslandSet {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Pitch of the optional refinement grid.
pub const REFINEMENT_PITCH: f64 = 0.25;

fn ball_mass_at(idx: &CellIndex, w: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    idx.for_each_within(y, 1.0, false, |j, _| s += w[j]);
    s
}

/// Extract the islands of `Q` at level `ε`; with `refine`, grid points of pitch
/// 0.25 around qualifying atoms are scanned as extra candidate centers.
pub fn islands(q: &EndpointMeasure, eps: f64, refine: bool) -> IslandSet {
    let c = &q.cloud;
    let d = c.dim;
    let c0 = unit_ball_volume(d);
    let thr = c0 * eps;
    let bm = ball_masses(c, 1.0);
    let mut centers: Vec<Vec<f64>> = Vec::new();
    let mut masses = Vec::new();
    let mut covered = 0.0;
    for i in 0..c.len() {
        if bm[i] > thr {
            centers.push(c.point(i).to_vec());
            masses.push(bm[i]);
            covered += c.weights[i];
        }
    }
    if refine && !centers.is_empty() {
        let idx = CellIndex::new(d, &c.points, 1.0);
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for x in &centers {
            for a in 0..d {
                lo[a] = lo[a].min(x[a] - 1.0);
                hi[a] = hi[a].max(x[a] + 1.0);
            }
        }
        let counts: Vec<usize> = (0..d)
            .map(|a| ((hi[a] - lo[a]) / REFINEMENT_PITCH).floor() as usize + 1)
            .collect();
        let total: usize = counts.iter().product();
        let grid: Vec<(Vec<f64>, f64)> = (0..total)
            .into_par_iter()
            .filter_map(|mut g| {
                let mut y = vec![0.0; d];
                for a in (0..d).rev() {
                    y[a] = lo[a] + (g % counts[a]) as f64 * REFINEMENT_PITCH;
                    g /= counts[a];
                }
                let m = ball_mass_at(&idx, &c.weights, &y);
                (m > thr).then_some((y, m))
            })
            .collect();
        for (y, m) in grid {
            centers.push(y);
            masses.push(m);
        }
    }
    let flat: Vec<f64> = centers.iter().flatten().copied().collect();
    let cloud = WeightedCloud {
        dim: d,
        points: flat,
        weights: vec![0.0; centers.len()],
    };
    let clusters = link_clusters(&cloud, 2.0);
    let mut labels = vec![0; centers.len()];
    for (l, members) in clusters.iter().enumerate() {
        for &i in members {
            labels[i] = l;
        }
    }
    IslandSet {
        dim: d,
        eps,
        c0,
        centers,
        ball_masses: masses,
        labels,
        island_count: clusters.len(),
        covered_mass: covered,
    }
}

/// `Q[U_{t,ε}]` for one endpoint measure; any `ε > 0` is accepted.
pub fn localized_mass(q: &EndpointMeasure, eps: f64) -> f64 {
    dense_mass(&q.cloud, unit_ball_volume(q.dim()) * eps)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationStatistic {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub cesaro: f64,
}

/// `(1/T) Σ_k Q_{t_k}[U_{t_k, ε_{t_k}}] (t_k - t_{k-1})` with `t_0 = 0`, `T = t_K`.
pub fn localization_statistic(
    run: &[EndpointMeasure],
    eps: impl Fn(f64) -> f64 + Sync,
) -> Result<LocalizationStatistic> {
    if run.len() < 2 {
        return Err(Error::InvalidParameter("need at least two time points".into()));
    }
    let times: Vec<f64> = run.iter().map(|q| q.t).collect();
    if times.windows(2).any(|w| !(w[1] > w[0])) || !(times[0] > 0.0) {
        return Err(Error::InvalidParameter("times must be positive and increasing".into()));
    }
    let values: Vec<f64> = run.par_iter().map(|q| localized_mass(q, eps(q.t))).collect();
    let mut acc = 0.0;
    let mut prev = 0.0;
    for (t, v) in times.iter().zip(&values) {
        acc += v * (t - prev);
        prev = *t;
    }
    Ok(LocalizationStatistic {
        cesaro: acc / prev,
        times,
        values,
    })
}
