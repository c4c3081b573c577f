//! Feynman–Kac estimator of the mollified stochastic heat equation and its
//! Brownian-scaling relation to the renormalized partition function.

use super::ensemble::{renormalization, WeightedEnsemble};
use super::pathset::PathSet;
use crate::error::{Error, Result};
use crate::noise::{GridGeometry, Mollifier, NoiseGrid, TimeOrder};
use crate::rng::derive_seed;
use crate::stats;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheParams {
    pub dim: usize,
    pub eps: f64,
    pub beta: f64,
    /// Time horizon `t` on the SHE side.
    pub t: f64,
    pub n_paths: usize,
    /// Unit-scale time step; the SHE side uses `eps² dt`.
    pub dt: f64,
    /// Unit-scale space step; the SHE side uses `eps dx`.
    pub dx: f64,
    pub spread: f64,
    /// Explicit disorder strength on the SHE side; required when `dim < 3`.
    pub coupling: Option<f64>,
}

impl SheParams {
    pub fn new(dim: usize, eps: f64, beta: f64, t: f64, n_paths: usize) -> Self {
        Self {
            dim,
            eps,
            beta,
            t,
            n_paths,
            dt: 1.0 / 32.0,
            dx: match dim {
                1 => 1.0 / 16.0,
                2 => 0.125,
                _ => 0.25,
            },
            spread: 8.0,
            coupling: None,
        }
    }

    /// `β ε^{(d-2)/2}`, or the explicit coupling.
    pub fn beta_eps(&self) -> Result<f64> {
        match (self.coupling, self.dim) {
            (Some(b), _) => Ok(b),
            (None, d) if d >= 3 => Ok(self.beta * self.eps.powf((d as f64 - 2.0) / 2.0)),
            (None, d) => Err(Error::InvalidParameter(format!(
                "d = {d} has no scaling-regime coupling; supply β(ε, d) explicitly"
            ))),
        }
    }

    /// Horizon `t / ε²` on the unit-scale side.
    pub fn unit_horizon(&self) -> f64 {
        self.t / (self.eps * self.eps)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.t > 0.0 && self.dt > 0.0 && self.dx > 0.0) {
            return Err(Error::InvalidParameter("ε, t, dt, dx must be positive".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be positive".into()));
        }
        Ok(())
    }

    /// Unit-scale box around `center` (already divided by ε).
    fn unit_geometry(&self, center: &[f64]) -> Result<GridGeometry> {
        GridGeometry::for_horizon(
            self.dim,
            self.dt,
            self.dx,
            self.unit_horizon(),
            center,
            self.spread,
            1.0,
        )
    }
}

impl GridGeometry {
    /// The same cells with time stretched by `c²` and space by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            dt: self.dt * c * c,
            dx: self.dx * c,
            steps: self.steps,
            lower: self.lower.iter().map(|x| x * c).collect(),
            cells: self.cells.clone(),
        }
    }
}

impl NoiseGrid {
    /// The realization with slab order reversed (dense copy).
    pub fn time_reversed(&self) -> Result<Self> {
        let g = self.geometry().clone();
        let slab = g.slab_len();
        let mut cells = Vec::with_capacity(g.total_cells() as usize);
        for k in (0..g.steps).rev() {
            for j in 0..slab {
                cells.push(self.value(k, j));
            }
        }
        NoiseGrid::from_cells(g, self.seed(), cells)
    }
}

fn she_from_noise(p: &SheParams, x: &[f64], noise: &NoiseGrid, path_seed: u64) -> Result<f64> {
    let beta_eps = p.beta_eps()?;
    if beta_eps == 0.0 {
        return Ok(1.0);
    }
    let m = Mollifier::new(p.dim)?.with_scale(p.eps)?;
    let dt = noise.geometry().dt;
    let paths = PathSet::simulate(p.n_paths, p.t, dt, p.dim, x, path_seed)?;
    let ens = WeightedEnsemble::weigh_ordered(paths, noise, &m, beta_eps, TimeOrder::Reversed)?;
    let lz = ens.partition_function().log_z_hat;
    Ok((lz - renormalization(beta_eps, p.t, m.l2_norm_sq())).exp())
}

fn scr_z_from_noise(p: &SheParams, y: &[f64], noise: &NoiseGrid, path_seed: u64) -> Result<f64> {
    if p.beta == 0.0 {
        return Ok(1.0);
    }
    let m = Mollifier::new(p.dim)?;
    let paths = PathSet::simulate(p.n_paths, p.unit_horizon(), p.dt, p.dim, y, path_seed)?;
    Ok(WeightedEnsemble::weigh(paths, noise, &m, p.beta)?
        .partition_function()
        .scr_z_hat)
}

/// Monte Carlo estimate of `u_{ε,t}(x)`: paths from `x`, mollifier `φ_ε`,
/// disorder `β(ε, d)`, and the noise read in reversed time.
pub fn she_solution(p: &SheParams, x: &[f64], seed: u64) -> Result<f64> {
    p.validate()?;
    if x.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            got: x.len(),
        });
    }
    p.beta_eps()?;
    let y: Vec<f64> = x.iter().map(|v| v / p.eps).collect();
    let geom = p.unit_geometry(&y)?.scaled(p.eps);
    let noise = NoiseGrid::on_demand(geom, derive_seed(seed, "she-noise", 0));
    she_from_noise(p, x, &noise, derive_seed(seed, "she-paths", 0))
}

/// Monte Carlo estimate of `scrZ_{β, t/ε²}(x/ε)` at unit scale.
pub fn scaled_partition(p: &SheParams, x: &[f64], seed: u64) -> Result<f64> {
    p.validate()?;
    let y: Vec<f64> = x.iter().map(|v| v / p.eps).collect();
    let noise = NoiseGrid::on_demand(p.unit_geometry(&y)?, derive_seed(seed, "she-noise", 0));
    scr_z_from_noise(p, &y, &noise, derive_seed(seed, "she-paths", 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMode {
    /// Independent noise and paths on the two sides; compares distributions.
    Independent,
    /// One realization mapped through the scaling and time reversal; compares pathwise.
    Coupled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub mode: ScalingMode,
    pub replicas: usize,
    pub mean_u: f64,
    pub mean_z: f64,
    pub var_u: f64,
    pub var_z: f64,
    pub z_mean: f64,
    pub z_var: f64,
    pub quantiles_u: [f64; 3],
    pub quantiles_z: [f64; 3],
    pub max_pathwise_gap: f64,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
}

fn quantiles(xs: &[f64]) -> [f64; 3] {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
    [q(0.1), q(0.5), q(0.9)]
}

fn z_score(diff: f64, se1: f64, se2: f64) -> f64 {
    let s = (se1 * se1 + se2 * se2).sqrt();
    if s == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / s
    }
}

/// Compare `u_{ε,t}(0)` with `scrZ_{β, t/ε²}(0)` over noise replicas.
pub fn scaling_check(p: &SheParams, replicas: usize, seed: u64, mode: ScalingMode) -> Result<ScalingReport> {
    use rayon::prelude::*;
    p.validate()?;
    p.beta_eps()?;
    if replicas < 2 {
        return Err(Error::InvalidParameter("at least two replicas are required".into()));
    }
    let origin = vec![0.0; p.dim];
    let pairs: Result<Vec<(f64, f64)>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let r = r as u64;
            match mode {
                ScalingMode::Independent => Ok((
                    she_solution(p, &origin, derive_seed(seed, "she-u", r))?,
                    scaled_partition(p, &origin, derive_seed(seed, "she-z", r))?,
                )),
                ScalingMode::Coupled => {
                    let unit = p.unit_geometry(&origin)?;
                    let noise_seed = derive_seed(seed, "she-noise", r);
                    let path_seed = derive_seed(seed, "she-paths", r);
                    let eps_noise = NoiseGrid::sample(unit.scaled(p.eps), noise_seed)?;
                    let unit_noise = NoiseGrid::from_cells(
                        unit,
                        noise_seed,
                        eps_noise.time_reversed()?.cells().unwrap().to_vec(),
                    )?;
                    Ok((
                        she_from_noise(p, &origin, &eps_noise, path_seed)?,
                        scr_z_from_noise(p, &origin, &unit_noise, path_seed)?,
                    ))
                }
            }
        })
        .collect();
    let pairs = pairs?;
    let u: Vec<f64> = pairs.iter().map(|x| x.0).collect();
    let z: Vec<f64> = pairs.iter().map(|x| x.1).collect();
    let (mean_u, mean_z) = (stats::mean(&u), stats::mean(&z));
    let (var_u, var_z) = (stats::variance(&u), stats::variance(&z));
    let gap = u
        .iter()
        .zip(&z)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ScalingReport {
        mode,
        replicas,
        mean_u,
        mean_z,
        var_u,
        var_z,
        z_mean: z_score(mean_u - mean_z, stats::std_err(&u), stats::std_err(&z)),
        z_var: z_score(var_u - var_z, stats::variance_std_err(&u), stats::variance_std_err(&z)),
        quantiles_u: quantiles(&u),
        quantiles_z: quantiles(&z),
        max_pathwise_gap: gap,
        u,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(beta: f64, eps: f64) -> SheParams {
        let mut p = SheParams::new(3, eps, beta, 0.25, 32);
        p.dt = 1.0 / 16.0;
        p.spread = 5.0;
        p
    }

    #[test]
    fn zero_disorder_gives_one() {
        let p = small(0.0, 0.5);
        assert_eq!(she_solution(&p, &[0.0; 3], 1).unwrap(), 1.0);
        let r = scaling_check(&p, 4, 2, ScalingMode::Independent).unwrap();
        assert_eq!(r.z_mean, 0.0);
        assert_eq!(r.z_var, 0.0);
    }

    #[test]
    fn low_dimensions_need_explicit_coupling() {
        let mut p = SheParams::new(1, 0.5, 0.3, 0.25, 8);
        assert!(she_solution(&p, &[0.0], 1).is_err());
        p.coupling = Some(0.2);
        assert!(she_solution(&p, &[0.0], 1).unwrap() > 0.0);
    }

    #[test]
    fn unit_eps_coupled_sides_are_identical() {
        let p = small(0.3, 1.0);
        let r = scaling_check(&p, 3, 9, ScalingMode::Coupled).unwrap();
        assert_eq!(r.u, r.z);
        assert_eq!(r.z_mean, 0.0);
    }

    #[test]
    fn coupled_scaling_is_pathwise() {
        let p = small(0.3, 0.5);
        let r = scaling_check(&p, 3, 9, ScalingMode::Coupled).unwrap();
        assert!(r.max_pathwise_gap < 1e-9, "gap {}", r.max_pathwise_gap);
        assert!(r.u.iter().all(|&u| u > 0.0 && u != 1.0));
    }

    #[test]
    fn geometry_scaling() {
        let g = GridGeometry::new(2, 0.5, 0.25, 4, &[1.0, 1.0], &[2.0, 2.0]).unwrap();
        let s = g.scaled(0.5);
        assert_eq!(s.dt, 0.125);
        assert_eq!(s.dx, 0.125);
        assert_eq!(s.lower, vec![-0.5, -0.5]);
        assert_eq!(s.cells, g.cells);
    }
}
