use crate::error::{Error, Result};
use crate::quadrature;
use statrs::function::gamma::gamma;

/// Radius of the unit-scale support ball.
pub const SUPPORT_RADIUS: f64 = 0.5;

/// Surface area of the unit sphere `S^{d-1}` in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// Unnormalized bump profile `exp(-1/(1-(2r)^2))` for `r < 1/2`.
#[inline]
pub fn bump(r: f64) -> f64 {
    let s = 2.0 * r;
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

/// Spherically symmetric smooth bump of unit mass supported in `B_{scale/2}(0)`.
///
/// `scale = 1` is the base mollifier; `with_scale(eps)` gives
/// `φ_ε(x) = ε^{-d} φ(x/ε)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mollifier {
    dim: usize,
    scale: f64,
    norm: f64,
    l2_unit: f64,
}

impl Mollifier {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let area = sphere_area(dim);
        let radial = |p: i32| {
            quadrature::integrate(
                |r| r.powi(dim as i32 - 1) * bump(r).powi(p),
                0.0,
                SUPPORT_RADIUS,
                1e-15,
            )
        };
        // In d = 1 the "sphere" is the two points ±1, so the radial formula still applies.
        let mass = area * radial(1)?;
        let norm = 1.0 / mass;
        let l2_unit = norm * norm * area * radial(2)?;
        Ok(Self {
            dim,
            scale: 1.0,
            norm,
            l2_unit,
        })
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("mollifier scale {scale}")));
        }
        Ok(Self {
            scale,
            ..self.clone()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn support_radius(&self) -> f64 {
        SUPPORT_RADIUS * self.scale
    }

    /// Normalization constant of the unit-scale profile.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// `‖φ‖²₂`, equal to `V(0)` of the associated kernel.
    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_unit / self.scale.powi(self.dim as i32)
    }

    /// `φ` as a function of `|x|`.
    #[inline]
    pub fn eval_radius(&self, r: f64) -> f64 {
        let s = self.scale;
        self.norm * bump(r / s) / s.powi(self.dim as i32)
    }

    /// `φ` at a point given by its squared norm.
    #[inline]
    pub fn eval_norm_sq(&self, r2: f64) -> f64 {
        let s = self.scale;
        let q = 1.0 - 4.0 * r2 / (s * s);
        if q <= 0.0 {
            0.0
        } else {
            self.norm * (-1.0 / q).exp() / s.powi(self.dim as i32)
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.eval_norm_sq(x.iter().map(|v| v * v).sum()))
    }
}
