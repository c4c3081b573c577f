use super::mollifier::Mollifier;
use crate::error::{Error, Result};
use crate::quadrature::CompositeRule;
use rayon::prelude::*;

const PROBES: [f64; 5] = [0.0, 0.2, 0.45, 0.7, 0.9];
const MAX_PANELS: usize = 128;
const REL_TOL: f64 = 1e-11;

/// Radial table of `V = φ ⋆ φ` on `[0, 1]` (unit scale) with linear interpolation.
#[derive(Clone, Debug)]
pub struct KernelV {
    dim: usize,
    scale: f64,
    table: Vec<f64>,
    v0: f64,
}

/// Unit-scale `V(r)` with `panels` Gauss–Legendre panels per axis.
fn convolve(dim: usize, norm: f64, r: f64, panels: usize) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let phi = |s2: f64| {
        let q = 1.0 - 4.0 * s2;
        if q <= 0.0 {
            0.0
        } else {
            norm * (-1.0 / q).exp()
        }
    };
    let axial = CompositeRule::new(r - 0.5, 0.5, panels);
    if dim == 1 {
        return axial.integrate(|a| phi(a * a) * phi((a - r) * (a - r)));
    }
    let area = super::mollifier::sphere_area(dim - 1);
    let p = dim as i32 - 2;
    axial.integrate(|a| {
        let far = a.abs().max((a - r).abs());
        let rho_max2 = 0.25 - far * far;
        if rho_max2 <= 0.0 {
            return 0.0;
        }
        let radial = CompositeRule::new(0.0, rho_max2.sqrt(), panels);
        area * radial.integrate(|rho| {
            let r2 = rho * rho;
            rho.powi(p) * phi(a * a + r2) * phi((a - r) * (a - r) + r2)
        })
    })
}

impl KernelV {
    /// Build the table with `resolution` intervals on `[0, 1]` (at least 64).
    pub fn build(mollifier: &Mollifier, resolution: usize) -> Result<Self> {
        if resolution < 64 {
            return Err(Error::InvalidParameter(format!(
                "kernel resolution {resolution} < 64"
            )));
        }
        let dim = mollifier.dim();
        let norm = mollifier.normalization();
        let l2_unit = mollifier.with_scale(1.0)?.l2_norm_sq();
        let mut panels = 4;
        let mut prev: Vec<f64> = PROBES.iter().map(|&r| convolve(dim, norm, r, panels)).collect();
        loop {
            if panels >= MAX_PANELS {
                return Err(Error::Quadrature(format!(
                    "kernel convolution not converged with {MAX_PANELS} panels"
                )));
            }
            panels *= 2;
            let cur: Vec<f64> = PROBES.iter().map(|&r| convolve(dim, norm, r, panels)).collect();
            let gap = cur
                .iter()
                .zip(&prev)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            prev = cur;
            if gap <= REL_TOL * l2_unit {
                break;
            }
        }
        let mut table: Vec<f64> = (0..=resolution)
            .into_par_iter()
            .map(|i| convolve(dim, norm, i as f64 / resolution as f64, panels))
            .collect();
        if ((table[0] - l2_unit) / l2_unit).abs() > 1e-8 {
            return Err(Error::Quadrature(format!(
                "V(0) = {} disagrees with |φ|² = {l2_unit}",
                table[0]
            )));
        }
        table[0] = l2_unit;
        for v in table.iter_mut() {
            *v = v.clamp(0.0, l2_unit);
        }
        table[resolution] = 0.0;
        Ok(Self {
            dim,
            scale: mollifier.scale(),
            table,
            v0: l2_unit / mollifier.scale().powi(dim as i32),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn resolution(&self) -> usize {
        self.table.len() - 1
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    /// Support radius of `V` (twice that of φ).
    pub fn support_radius(&self) -> f64 {
        self.scale
    }

    /// `V` at distance `r`.
    #[inline]
    pub fn eval_radius(&self, r: f64) -> f64 {
        let u = r.abs() / self.scale;
        if u >= 1.0 {
            return 0.0;
        }
        let n = self.resolution();
        let pos = u * n as f64;
        let i = (pos as usize).min(n - 1);
        let f = pos - i as f64;
        let v = self.table[i] * (1.0 - f) + self.table[i + 1] * f;
        v / self.scale.powi(self.dim as i32)
    }

    #[inline]
    pub fn eval_diff(&self, x: &[f64], y: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if r2 >= self.scale * self.scale {
            return 0.0;
        }
        self.eval_radius(r2.sqrt())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.eval_radius(x.iter().map(|v| v * v).sum::<f64>().sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn direct_1d(m: &Mollifier, r: f64) -> f64 {
        // Midpoint rule oracle with a fine step.
        let n = 200_000;
        let h = 1.0 / n as f64;
        (0..n)
            .map(|i| {
                let z = -0.5 + (i as f64 + 0.5) * h;
                m.eval_radius(z.abs()) * m.eval_radius((z - r).abs()) * h
            })
            .sum()
    }

    #[test]
    fn one_dimensional_kernel_matches_direct_convolution() {
        let m = Mollifier::new(1).unwrap();
        let k = KernelV::build(&m, 1024).unwrap();
        for r in [0.0, 0.1, 0.33, 0.6, 0.9] {
            assert!((k.eval_radius(r) - direct_1d(&m, r)).abs() < 1e-5);
        }
        assert_relative_eq!(k.v0(), 1.3502336260193954, max_relative = 1e-4);
    }

    #[test]
    fn v0_is_l2_norm_in_each_dimension() {
        for (d, v0) in [(1, 1.3502336260193954), (2, 2.1672617792924185), (3, 3.951603745653337)] {
            let k = KernelV::build(&Mollifier::new(d).unwrap(), 256).unwrap();
            assert_relative_eq!(k.v0(), v0, max_relative = 1e-4);
            let mut x = vec![0.0; d];
            x[0] = 1.2;
            assert_eq!(k.eval(&x).unwrap(), 0.0);
            x[0] = 0.37;
            let a = k.eval(&x).unwrap();
            x[0] = -0.37;
            assert_eq!(a, k.eval(&x).unwrap());
        }
    }

    #[test]
    fn kernel_in_two_dimensions_matches_cartesian_sum() {
        let m = Mollifier::new(2).unwrap();
        let k = KernelV::build(&m, 512).unwrap();
        let h = 1.0 / 500.0;
        let r = 0.4;
        let mut s = 0.0;
        for i in 0..500 {
            for j in 0..500 {
                let x = -0.5 + (i as f64 + 0.5) * h;
                let y = -0.5 + (j as f64 + 0.5) * h;
                s += m.eval(&[x, y]).unwrap() * m.eval(&[x - r, y]).unwrap() * h * h;
            }
        }
        assert!((k.eval_radius(r) - s).abs() < 1e-4);
    }

    #[test]
    fn kernel_integrates_to_one_in_1d() {
        let k = KernelV::build(&Mollifier::new(1).unwrap(), 1024).unwrap();
        let n = 100_000;
        let h = 2.0 / n as f64;
        let s: f64 = (0..n)
            .map(|i| k.eval_radius(-1.0 + (i as f64 + 0.5) * h) * h)
            .sum();
        assert!((s - 1.0).abs() < 1e-5);
    }

    #[test]
    fn bounds_hold_on_table() {
        let k = KernelV::build(&Mollifier::new(3).unwrap(), 128).unwrap();
        for i in 0..=200 {
            let v = k.eval_radius(i as f64 / 150.0);
            assert!(v >= 0.0 && v <= k.v0());
        }
    }

    #[test]
    fn rejects_low_resolution() {
        assert!(KernelV::build(&Mollifier::new(1).unwrap(), 10).is_err());
    }

    #[test]
    fn scaled_kernel() {
        let m = Mollifier::new(1).unwrap();
        let k1 = KernelV::build(&m, 512).unwrap();
        let k = KernelV::build(&m.with_scale(0.5).unwrap(), 512).unwrap();
        assert_relative_eq!(k.v0(), 2.0 * k1.v0(), max_relative = 1e-12);
        assert_relative_eq!(k.eval_radius(0.2), 2.0 * k1.eval_radius(0.4), max_relative = 1e-12);
        assert_eq!(k.eval_radius(0.5), 0.0);
    }
}
