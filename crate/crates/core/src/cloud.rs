use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Finite weighted point cloud in `R^d`, stored as flat coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedCloud {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedCloud {
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() != dim * weights.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * weights.len(),
                got: points.len(),
            });
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn point_mass(at: &[f64], mass: f64) -> Self {
        Self {
            dim: at.len(),
            points: at.to_vec(),
            weights: vec![mass],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn shifted(&self, by: &[f64]) -> Self {
        let mut points = self.points.clone();
        for (i, p) in points.iter_mut().enumerate() {
            *p += by[i % self.dim];
        }
        Self {
            dim: self.dim,
            points,
            weights: self.weights.clone(),
        }
    }

    pub fn scaled_mass(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            points: self.points.clone(),
            weights: self.weights.iter().map(|w| w * c).collect(),
        }
    }

    /// Mass-weighted mean position (origin for an empty or massless cloud).
    pub fn centroid(&self) -> Vec<f64> {
        let m = self.mass();
        let mut c = vec![0.0; self.dim];
        if m <= 0.0 {
            return c;
        }
        for (i, &w) in self.weights.iter().enumerate() {
            for a in 0..self.dim {
                c[a] += w * self.points[i * self.dim + a];
            }
        }
        c.iter_mut().for_each(|v| *v /= m);
        c
    }

    /// Per-axis bounding box `(lo, hi)`; `None` when empty.
    pub fn bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for i in 0..self.len() {
            for (a, &x) in self.point(i).iter().enumerate() {
                lo[a] = lo[a].min(x);
                hi[a] = hi[a].max(x);
            }
        }
        Some((lo, hi))
    }

    /// Drop atoms with weight at most `threshold`.
    pub fn pruned(&self, threshold: f64) -> Self {
        let mut out = Self::empty(self.dim);
        for i in 0..self.len() {
            if self.weights[i] > threshold {
                out.points.extend_from_slice(self.point(i));
                out.weights.push(self.weights[i]);
            }
        }
        out
    }

    /// Subset of atoms by index.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut out = Self::empty(self.dim);
        for &i in idx {
            out.points.extend_from_slice(self.point(i));
            out.weights.push(self.weights[i]);
        }
        out
    }
}
