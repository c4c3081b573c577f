use super::grid::NoiseGrid;
use super::kernel::KernelV;
use super::mollifier::Mollifier;
use crate::error::{Error, Result};

/// Direction in which noise slabs are paired with path steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeOrder {
    /// Path step `k` reads slab `k`.
    Forward,
    /// Path step `k` reads slab `S - 1 - k`, where `S` is the number of slabs
    /// spanned by the path.
    Reversed,
}

/// Cells touched by the mollifier centered at one point, with weights
/// `c(x) φ(x - y_j) dx^{d/2}` normalized so that `Σ w_j² = ‖φ‖²`.
#[derive(Clone, Debug, Default)]
pub struct Stencil {
    pub cells: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Stencil {
    pub fn clear(&mut self) {
        self.cells.clear();
        self.weights.clear();
    }

    pub fn sum_sq(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

/// Mollified noise `∫ φ(x - y) B(dt, dy)` evaluated on a noise grid.
#[derive(Clone, Debug)]
pub struct Field<'a> {
    noise: &'a NoiseGrid,
    mollifier: Mollifier,
    order: TimeOrder,
    target: f64,
    sqrt_dt: f64,
}

impl<'a> Field<'a> {
    pub fn new(noise: &'a NoiseGrid, mollifier: &Mollifier) -> Result<Self> {
        Self::with_order(noise, mollifier, TimeOrder::Forward)
    }

    pub fn with_order(noise: &'a NoiseGrid, mollifier: &Mollifier, order: TimeOrder) -> Result<Self> {
        let g = noise.geometry();
        if g.dim != mollifier.dim() {
            return Err(Error::DimensionMismatch {
                expected: g.dim,
                got: mollifier.dim(),
            });
        }
        // Every point must see at least one cell center strictly inside the support.
        if 0.5 * g.dx * (g.dim as f64).sqrt() >= mollifier.support_radius() {
            return Err(Error::InvalidParameter(format!(
                "space step {} too coarse for mollifier radius {}",
                g.dx,
                mollifier.support_radius()
            )));
        }
        Ok(Self {
            noise,
            mollifier: mollifier.clone(),
            order,
            target: mollifier.l2_norm_sq(),
            sqrt_dt: g.dt.sqrt(),
        })
    }

    pub fn noise(&self) -> &NoiseGrid {
        self.noise
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    /// Fill `out` with the stencil at `x`; `step` only labels errors.
    pub fn stencil_into(&self, x: &[f64], step: usize, out: &mut Stencil) -> Result<()> {
        let g = self.noise.geometry();
        let d = g.dim;
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let r = self.mollifier.support_radius();
        let mut ranges = [(0usize, 0usize); 8];
        if d > ranges.len() {
            return Err(Error::InvalidParameter(format!("dimension {d} > 8")));
        }
        for a in 0..d {
            if !(x[a] - r >= g.lower[a] && x[a] + r <= g.upper(a)) {
                return Err(Error::OutOfDomain {
                    step,
                    point: x.to_vec(),
                    margin: r,
                });
            }
            let lo = ((x[a] - r - g.lower[a]) / g.dx - 0.5).ceil().max(0.0) as usize;
            let hi = (((x[a] + r - g.lower[a]) / g.dx - 0.5).floor() as usize).min(g.cells[a] - 1);
            ranges[a] = (lo, hi);
        }
        out.clear();
        let mut idx = [0usize; 8];
        for a in 0..d {
            idx[a] = ranges[a].0;
            if ranges[a].0 > ranges[a].1 {
                return Err(Error::InvalidParameter("empty stencil".into()));
            }
        }
        let mut sum_sq = 0.0;
        'cells: loop {
            let mut r2 = 0.0;
            let mut cell = 0usize;
            for a in 0..d {
                let y = g.cell_center(a, idx[a]);
                r2 += (x[a] - y) * (x[a] - y);
                cell = cell * g.cells[a] + idx[a];
            }
            let v = self.mollifier.eval_norm_sq(r2);
            if v > 0.0 {
                out.cells.push(cell);
                out.weights.push(v);
                sum_sq += v * v;
            }
            let mut a = d;
            loop {
                if a == 0 {
                    break 'cells;
                }
                a -= 1;
                if idx[a] < ranges[a].1 {
                    idx[a] += 1;
                    continue 'cells;
                }
                idx[a] = ranges[a].0;
            }
        }
        let cell_vol = g.dx.powi(d as i32);
        if sum_sq == 0.0 {
            return Err(Error::InvalidParameter(format!("no grid cell under the mollifier at {x:?}")));
        }
        let c = (self.target / (sum_sq * cell_vol)).sqrt() * cell_vol.sqrt();
        for w in out.weights.iter_mut() {
            *w *= c;
        }
        Ok(())
    }

    /// `Σ_j w_j G_{slab, j}`.
    #[inline]
    pub fn slab_sum(&self, stencil: &Stencil, slab: usize) -> f64 {
        stencil
            .cells
            .iter()
            .zip(&stencil.weights)
            .map(|(&c, &w)| w * self.noise.value(slab, c))
            .sum()
    }

    /// Noise slabs per path step, checking that `path_dt` is a multiple of the grid step.
    pub fn substeps(&self, path_dt: f64) -> Result<usize> {
        let dt = self.noise.geometry().dt;
        let q = (path_dt / dt).round();
        if q < 1.0 || (q * dt - path_dt).abs() > 1e-9 * path_dt {
            return Err(Error::GridMismatch(format!(
                "path step {path_dt} is not a positive multiple of noise step {dt}"
            )));
        }
        Ok(q as usize)
    }

    /// Slab read by path step `k`, substep `q`, for a path spanning `steps` path steps.
    #[inline]
    pub fn slab_index(&self, k: usize, q: usize, sub: usize, steps: usize) -> usize {
        match self.order {
            TimeOrder::Forward => k * sub + q,
            TimeOrder::Reversed => steps * sub - 1 - (k * sub + q),
        }
    }

    fn check_span(&self, steps: usize, sub: usize) -> Result<()> {
        let have = self.noise.geometry().steps;
        if steps * sub > have {
            return Err(Error::GridMismatch(format!(
                "path needs {} noise slabs but the grid has {have}",
                steps * sub
            )));
        }
        Ok(())
    }

    /// Increment of the field over path step `k` given the stencil at `W_{t_k}`.
    #[inline]
    pub fn increment(&self, stencil: &Stencil, k: usize, sub: usize, steps: usize) -> f64 {
        let mut s = 0.0;
        for q in 0..sub {
            s += self.slab_sum(stencil, self.slab_index(k, q, sub, steps));
        }
        self.sqrt_dt * s
    }

    /// Left-point increments `H(t_{k+1}) - H(t_k)` along a flattened path of
    /// `m + 1` points.
    pub fn path_increments(&self, path: &[f64], path_dt: f64) -> Result<Vec<f64>> {
        let d = self.mollifier.dim();
        if path.len() % d != 0 || path.len() < d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: path.len() % d,
            });
        }
        let steps = path.len() / d - 1;
        let sub = self.substeps(path_dt)?;
        self.check_span(steps, sub)?;
        let mut st = Stencil::default();
        let mut out = Vec::with_capacity(steps);
        for k in 0..steps {
            self.stencil_into(&path[k * d..(k + 1) * d], k, &mut st)?;
            out.push(self.increment(&st, k, sub, steps));
        }
        Ok(out)
    }

    /// Running field `H(t_k)`, `k = 0..=m`, starting at 0.
    pub fn cumulative(&self, path: &[f64], path_dt: f64) -> Result<Vec<f64>> {
        let inc = self.path_increments(path, path_dt)?;
        let mut out = Vec::with_capacity(inc.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for h in inc {
            acc += h;
            out.push(acc);
        }
        Ok(out)
    }
}

fn path_steps(path: &[f64], d: usize, path_dt: f64, horizon: f64) -> Result<usize> {
    if d == 0 || path.len() % d != 0 || path.len() < d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: path.len(),
        });
    }
    let m = path.len() / d - 1;
    if ((m as f64) * path_dt - horizon).abs() > 1e-9 * horizon.max(path_dt) {
        return Err(Error::GridMismatch(format!(
            "path of {m} steps of {path_dt} does not span horizon {horizon}"
        )));
    }
    Ok(m)
}

/// Left-point discretization of `∫₀^T ∫ φ(W_s - y) B(ds, dy)` along one path.
pub fn field_energy(
    path: &[f64],
    path_dt: f64,
    noise: &NoiseGrid,
    mollifier: &Mollifier,
    horizon: f64,
) -> Result<f64> {
    path_steps(path, mollifier.dim(), path_dt, horizon)?;
    Ok(Field::new(noise, mollifier)?
        .path_increments(path, path_dt)?
        .iter()
        .sum())
}

/// Left-point discretization of `∫₀^T V(W¹_s - W²_s) ds`; never exceeds `T V(0)`.
pub fn field_covariance(
    path1: &[f64],
    path2: &[f64],
    path_dt: f64,
    kernel: &KernelV,
    horizon: f64,
) -> Result<f64> {
    let d = kernel.dim();
    let m1 = path_steps(path1, d, path_dt, horizon)?;
    let m2 = path_steps(path2, d, path_dt, horizon)?;
    if m1 != m2 {
        return Err(Error::GridMismatch(format!("paths have {m1} and {m2} steps")));
    }
    let v0 = kernel.v0();
    let mut deficit = 0.0;
    for k in 0..m1 {
        let v = kernel.eval_diff(&path1[k * d..(k + 1) * d], &path2[k * d..(k + 1) * d]);
        deficit += v0 - v;
    }
    Ok(m1 as f64 * path_dt * v0 - path_dt * deficit)
}
