use crate::error::{Error, Result};
use crate::rng::cell_normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Default cap on the bytes a dense grid may allocate.
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

const MAGIC: &[u8; 4] = b"WGMC";
const VERSION: u32 = 1;

/// Space-time box of the discretized white noise.
///
/// Slab `k` covers `[k dt, (k+1) dt)`; cell `j` along axis `a` covers
/// `[lower[a] + j dx, lower[a] + (j+1) dx)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub dim: usize,
    pub dt: f64,
    pub dx: f64,
    pub steps: usize,
    pub lower: Vec<f64>,
    pub cells: Vec<usize>,
}

impl GridGeometry {
    /// Box centered at `center` with at least `half_width` on each side.
    pub fn new(
        dim: usize,
        dt: f64,
        dx: f64,
        steps: usize,
        center: &[f64],
        half_width: &[f64],
    ) -> Result<Self> {
        if center.len() != dim || half_width.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: center.len().min(half_width.len()),
            });
        }
        if !(dt > 0.0 && dx > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {dt}, dx = {dx} must be positive")));
        }
        if half_width.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidParameter("box half-width must be positive".into()));
        }
        let cells: Vec<usize> = half_width
            .iter()
            .map(|&h| ((2.0 * h / dx) - 1e-9).ceil().max(1.0) as usize)
            .collect();
        let lower = center
            .iter()
            .zip(&cells)
            .map(|(&c, &n)| c - 0.5 * n as f64 * dx)
            .collect();
        Ok(Self {
            dim,
            dt,
            dx,
            steps,
            lower,
            cells,
        })
    }

    /// Box of half-width `spread·√horizon + pad` around `center`, with
    /// `horizon / dt` slabs.
    pub fn for_horizon(
        dim: usize,
        dt: f64,
        dx: f64,
        horizon: f64,
        center: &[f64],
        spread: f64,
        pad: f64,
    ) -> Result<Self> {
        let steps = steps_for(horizon, dt)?;
        let hw = spread * horizon.sqrt() + pad;
        Self::new(dim, dt, dx, steps, center, &vec![hw; dim])
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.lower[axis] + self.cells[axis] as f64 * self.dx
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|a| 0.5 * (self.lower[a] + self.upper(a)))
            .collect()
    }

    pub fn half_width(&self) -> Vec<f64> {
        self.cells.iter().map(|&n| 0.5 * n as f64 * self.dx).collect()
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn slab_len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn total_cells(&self) -> u64 {
        self.slab_len() as u64 * self.steps as u64
    }

    /// Center of cell `j` along `axis`.
    #[inline]
    pub fn cell_center(&self, axis: usize, j: usize) -> f64 {
        self.lower[axis] + (j as f64 + 0.5) * self.dx
    }

    /// Stable 64-bit fingerprint of the geometry (FNV-1a over the binary header fields).
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        feed(&(self.dim as u64).to_le_bytes());
        feed(&self.dt.to_le_bytes());
        feed(&self.dx.to_le_bytes());
        feed(&(self.steps as u64).to_le_bytes());
        for a in 0..self.dim {
            feed(&self.lower[a].to_le_bytes());
            feed(&(self.cells[a] as u64).to_le_bytes());
        }
        h
    }
}

/// Number of steps of size `dt` in `horizon`, requiring exact divisibility.
pub fn steps_for(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon >= 0.0 && dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} and step {dt} must be nonnegative / positive"
        )));
    }
    let m = (horizon / dt).round();
    if (m * dt - horizon).abs() > 1e-9 * horizon.max(dt) {
        return Err(Error::InvalidParameter(format!(
            "step {dt} does not divide horizon {horizon}"
        )));
    }
    Ok(m as usize)
}

#[derive(Clone, Debug)]
enum Storage {
    Dense(Vec<f64>),
    Counter { factor: f64 },
}

/// One realization of the discretized white noise: a standard normal `G_{k,j}`
/// per (time slab, space cell), stored densely or regenerated on demand.
#[derive(Clone, Debug)]
pub struct NoiseGrid {
    geometry: GridGeometry,
    seed: u64,
    storage: Storage,
}

impl NoiseGrid {
    /// Dense sample under the default memory budget.
    pub fn sample(geometry: GridGeometry, seed: u64) -> Result<Self> {
        Self::sample_with_budget(geometry, seed, DEFAULT_MEMORY_BUDGET)
    }

    pub fn sample_with_budget(geometry: GridGeometry, seed: u64, budget: u64) -> Result<Self> {
        let bytes = geometry.total_cells().saturating_mul(8);
        if bytes > budget {
            return Err(Error::Capacity {
                what: "dense noise grid (bytes)".into(),
                required: bytes,
                limit: budget,
            });
        }
        let slab = geometry.slab_len();
        let mut cells = vec![0.0; geometry.total_cells() as usize];
        if slab > 0 {
            cells.par_chunks_mut(slab).enumerate().for_each(|(k, chunk)| {
                for (j, c) in chunk.iter_mut().enumerate() {
                    *c = cell_normal(seed, k as u64, j as u64);
                }
            });
        }
        Ok(Self {
            geometry,
            seed,
            storage: Storage::Dense(cells),
        })
    }

    /// Grid whose values are regenerated from `(seed, slab, cell)` at each access.
    pub fn on_demand(geometry: GridGeometry, seed: u64) -> Self {
        Self {
            geometry,
            seed,
            storage: Storage::Counter { factor: 1.0 },
        }
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            seed: 0,
            storage: Storage::Counter { factor: 0.0 },
        }
    }

    pub fn from_cells(geometry: GridGeometry, seed: u64, cells: Vec<f64>) -> Result<Self> {
        if cells.len() as u64 != geometry.total_cells() {
            return Err(Error::GridMismatch(format!(
                "{} cells supplied for a geometry with {}",
                cells.len(),
                geometry.total_cells()
            )));
        }
        Ok(Self {
            geometry,
            seed,
            storage: Storage::Dense(cells),
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn cells(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense(c) => Some(c),
            Storage::Counter { .. } => None,
        }
    }

    #[inline]
    pub fn value(&self, slab: usize, cell: usize) -> f64 {
        match &self.storage {
            Storage::Dense(c) => c[slab * self.geometry.slab_len() + cell],
            Storage::Counter { factor } => {
                if *factor == 0.0 {
                    0.0
                } else {
                    factor * cell_normal(self.seed, slab as u64, cell as u64)
                }
            }
        }
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(v.iter().map(|x| c * x).collect()),
            Storage::Counter { factor } => Storage::Counter { factor: factor * c },
        };
        Self {
            geometry: self.geometry.clone(),
            seed: self.seed,
            storage,
        }
    }

    /// Merge `factor` consecutive slabs: `G' = Σ G / √factor`, so the cell
    /// integrals of the noise are preserved exactly.
    pub fn coarsen_time(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.geometry.steps % factor != 0 {
            return Err(Error::InvalidParameter(format!(
                "coarsening factor {factor} does not divide {} slabs",
                self.geometry.steps
            )));
        }
        let mut geometry = self.geometry.clone();
        geometry.steps /= factor;
        geometry.dt *= factor as f64;
        let slab = geometry.slab_len();
        let norm = 1.0 / (factor as f64).sqrt();
        let mut cells = vec![0.0; geometry.total_cells() as usize];
        if slab > 0 {
            cells.par_chunks_mut(slab).enumerate().for_each(|(k, chunk)| {
                for (j, c) in chunk.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for q in 0..factor {
                        s += self.value(k * factor + q, j);
                    }
                    *c = s * norm;
                }
            });
        }
        Ok(Self {
            geometry,
            seed: self.seed,
            storage: Storage::Dense(cells),
        })
    }

    /// Binary blob: magic, version, d, dt, dx, per-axis (lower, upper), seed,
    /// then the cells as little-endian f64 in time-major order.
    pub fn write_blob<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.geometry;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(g.dim as u32).to_le_bytes())?;
        w.write_all(&g.dt.to_le_bytes())?;
        w.write_all(&g.dx.to_le_bytes())?;
        for a in 0..g.dim {
            w.write_all(&g.lower[a].to_le_bytes())?;
            w.write_all(&g.upper(a).to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        let slab = g.slab_len();
        let mut buf = Vec::with_capacity(slab * 8);
        for k in 0..g.steps {
            buf.clear();
            for j in 0..slab {
                buf.extend_from_slice(&self.value(k, j).to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_blob<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dim = read_u32(&mut r)? as usize;
        if dim == 0 || dim > 16 {
            return Err(Error::Format(format!("dimension {dim}")));
        }
        let dt = read_f64(&mut r)?;
        let dx = read_f64(&mut r)?;
        let mut lower = Vec::with_capacity(dim);
        let mut cells = Vec::with_capacity(dim);
        for _ in 0..dim {
            let lo = read_f64(&mut r)?;
            let hi = read_f64(&mut r)?;
            let n = ((hi - lo) / dx).round();
            if !(n >= 1.0) {
                return Err(Error::Format(format!("box [{lo}, {hi}] with dx {dx}")));
            }
            lower.push(lo);
            cells.push(n as usize);
        }
        let seed = read_u64(&mut r)?;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        let slab: usize = cells.iter().product();
        if body.len() % (8 * slab) != 0 {
            return Err(Error::Format(format!(
                "body of {} bytes is not a whole number of {slab}-cell slabs",
                body.len()
            )));
        }
        let values: Vec<f64> = body
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let geometry = GridGeometry {
            dim,
            dt,
            dx,
            steps: values.len() / slab,
            lower,
            cells,
        };
        Self::from_cells(geometry, seed, values)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_blob(f)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::read_blob(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
