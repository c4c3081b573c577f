use crate::error::{Error, Result};
use crate::noise::steps_for;
use crate::rng::path_rng;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// `n` Brownian paths on the uniform grid `t_k = k dt`, `k = 0..=m`,
/// stored as `n × (m + 1) × d` flat coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSet {
    dim: usize,
    dt: f64,
    steps: usize,
    seed: u64,
    positions: Vec<f64>,
}

impl PathSet {
    /// `n` paths from `start` over `[0, horizon]`.
    pub fn simulate(
        n: usize,
        horizon: f64,
        dt: f64,
        dim: usize,
        start: &[f64],
        seed: u64,
    ) -> Result<Self> {
        if start.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: start.len(),
            });
        }
        Self::simulate_from(start, dim, n, horizon, dt, seed)
    }

    /// `per_start` paths from each of the flattened `starts`; path `s·per_start + r`
    /// starts at point `s`.
    pub fn simulate_from(
        starts: &[f64],
        dim: usize,
        per_start: usize,
        horizon: f64,
        dt: f64,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 || starts.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: starts.len(),
            });
        }
        let n = starts.len() / dim * per_start;
        if n == 0 {
            return Err(Error::InvalidParameter("at least one path is required".into()));
        }
        let steps = steps_for(horizon, dt)?;
        let stride = (steps + 1) * dim;
        let sd = dt.sqrt();
        let mut positions = vec![0.0; n * stride];
        positions
            .par_chunks_mut(stride)
            .enumerate()
            .for_each(|(i, path)| {
                let s = i / per_start;
                let mut rng = path_rng(seed, i as u64);
                path[..dim].copy_from_slice(&starts[s * dim..(s + 1) * dim]);
                for k in 1..=steps {
                    for a in 0..dim {
                        let z: f64 = rng.sample(StandardNormal);
                        path[k * dim + a] = path[(k - 1) * dim + a] + sd * z;
                    }
                }
            });
        Ok(Self {
            dim,
            dt,
            steps,
            seed,
            positions,
        })
    }

    pub fn from_positions(dim: usize, dt: f64, steps: usize, positions: Vec<f64>, seed: u64) -> Result<Self> {
        let stride = (steps + 1) * dim;
        if dim == 0 || positions.is_empty() || positions.len() % stride != 0 {
            return Err(Error::DimensionMismatch {
                expected: stride,
                got: positions.len(),
            });
        }
        Ok(Self {
            dim,
            dt,
            steps,
            seed,
            positions,
        })
    }

    pub fn n(&self) -> usize {
        self.positions.len() / ((self.steps + 1) * self.dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Flattened path `i`, `(m + 1) × d` values.
    #[inline]
    pub fn path(&self, i: usize) -> &[f64] {
        let stride = (self.steps + 1) * self.dim;
        &self.positions[i * stride..(i + 1) * stride]
    }

    #[inline]
    pub fn point(&self, i: usize, k: usize) -> &[f64] {
        let p = self.path(i);
        &p[k * self.dim..(k + 1) * self.dim]
    }

    /// Positions of all paths at grid index `k`, flattened.
    pub fn positions_at(&self, k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n() * self.dim);
        for i in 0..self.n() {
            out.extend_from_slice(self.point(i, k));
        }
        out
    }

    /// Grid index of time `t`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if k < 0.0 || k as usize > self.steps || (k * self.dt - t).abs() > 1e-9 * self.dt.max(t) {
            return Err(Error::OffGrid { t, dt: self.dt });
        }
        Ok(k as usize)
    }

    /// Every `factor`-th grid point.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(Error::InvalidParameter(format!(
                "subsampling factor {factor} does not divide {} steps",
                self.steps
            )));
        }
        let steps = self.steps / factor;
        let mut positions = Vec::with_capacity(self.n() * (steps + 1) * self.dim);
        for i in 0..self.n() {
            for k in 0..=steps {
                positions.extend_from_slice(self.point(i, k * factor));
            }
        }
        Ok(Self {
            dim: self.dim,
            dt: self.dt * factor as f64,
            steps,
            seed: self.seed,
            positions,
        })
    }

    /// Per-axis `(lo, hi)` over all stored positions.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for (j, &x) in self.positions.iter().enumerate() {
            let a = j % self.dim;
            lo[a] = lo[a].min(x);
            hi[a] = hi[a].max(x);
        }
        (lo, hi)
    }
}
