//! Composite Gauss–Legendre integration with panel doubling.

use crate::error::{Error, Result};
use gauss_quad::GaussLegendre;
use std::num::NonZeroUsize;

const ORDER: usize = 16;
const MAX_PANELS: usize = 1 << 14;

/// Fixed composite rule: `panels` equal panels, each with a 16-point Gauss–Legendre rule.
#[derive(Clone, Debug)]
pub struct CompositeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(ORDER).unwrap());
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * ORDER);
        let mut weights = Vec::with_capacity(panels * ORDER);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for &(x, w) in gl.iter() {
                nodes.push(lo + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Integrate `f` over `[a, b]`, doubling panels until two successive estimates
/// agree to `tol` (absolute, scaled by `max(1, |I|)`).
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut panels = 4;
    let mut prev = CompositeRule::new(a, b, panels).integrate(&mut f);
    while panels < MAX_PANELS {
        panels *= 2;
        let cur = CompositeRule::new(a, b, panels).integrate(&mut f);
        if (cur - prev).abs() <= tol * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!(
        "no convergence on [{a}, {b}] after {MAX_PANELS} panels"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_and_exponentials() {
        let v = integrate(|x| x * x, 0.0, 3.0, 1e-14).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let v = integrate(f64::exp, 0.0, 1.0, 1e-14).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn non_convergent_refinement_is_reported() {
        let r = integrate(|x| (1.0 / x).sin() / x, 1e-9, 1.0, 1e-15);
        assert!(matches!(r, Err(Error::Quadrature(_))));
    }
}
