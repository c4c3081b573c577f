use super::grid::{steps_for, GridGeometry, NoiseGrid};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dense grids below this many bytes are materialized; larger ones are
/// regenerated on demand (same values either way).
pub const DENSE_THRESHOLD: u64 = 32 << 20;

/// Resolution and box policy for noise realizations built on the fly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub dt: f64,
    pub dx: f64,
    /// Box half-width beyond the data is `spread·√horizon + pad`.
    pub spread: f64,
    pub pad: f64,
    pub dense_threshold: u64,
}

impl NoiseSpec {
    pub fn new(dim: usize) -> Self {
        Self {
            dt: 1.0 / 32.0,
            dx: match dim {
                1 => 1.0 / 16.0,
                2 => 0.125,
                _ => 0.25,
            },
            spread: 8.0,
            pad: 1.0,
            dense_threshold: DENSE_THRESHOLD,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    /// Lattice-aligned box containing `[lo, hi]` plus the margin for `horizon`.
    pub fn geometry(&self, lo: &[f64], hi: &[f64], horizon: f64) -> Result<GridGeometry> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        let steps = steps_for(horizon, self.dt)?;
        let margin = self.spread * horizon.sqrt() + self.pad;
        let lower: Vec<f64> = lo
            .iter()
            .map(|&a| ((a - margin) / self.dx).floor() * self.dx)
            .collect();
        let cells = hi
            .iter()
            .zip(&lower)
            .map(|(&b, &l)| (((b + margin - l) / self.dx).ceil() as usize).max(1))
            .collect();
        Ok(GridGeometry {
            dim: lo.len(),
            dt: self.dt,
            dx: self.dx,
            steps,
            lower,
            cells,
        })
    }

    pub fn realize(&self, geometry: GridGeometry, seed: u64) -> Result<NoiseGrid> {
        if geometry.total_cells().saturating_mul(8) <= self.dense_threshold {
            NoiseGrid::sample_with_budget(geometry, seed, self.dense_threshold)
        } else {
            Ok(NoiseGrid::on_demand(geometry, seed))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_is_aligned_and_covers() {
        let s = NoiseSpec::new(1);
        let g = s.geometry(&[0.3], &[2.1], 4.0).unwrap();
        assert_eq!(g.steps, 128);
        let k = g.lower[0] / s.dx;
        assert!((k - k.round()).abs() < 1e-12);
        assert!(g.lower[0] <= 0.3 - 17.0 && g.upper(0) >= 2.1 + 17.0);
    }

    #[test]
    fn realize_policy_gives_identical_values() {
        let mut s = NoiseSpec::new(1);
        let g = s.geometry(&[0.0], &[0.0], 1.0).unwrap();
        let dense = s.realize(g.clone(), 5).unwrap();
        assert!(dense.is_dense());
        s.dense_threshold = 0;
        let lazy = s.realize(g, 5).unwrap();
        assert!(!lazy.is_dense());
        for k in [0, 7, 31] {
            for j in [0, 11, 100] {
                assert_eq!(dense.value(k, j), lazy.value(k, j));
            }
        }
    }

    #[test]
    fn rejects_indivisible_horizon() {
        assert!(NoiseSpec::new(1).geometry(&[0.0], &[0.0], 0.1).is_err());
    }
}
