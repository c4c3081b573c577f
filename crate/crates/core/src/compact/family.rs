use super::config::SubProbConfig;
use crate::cloud::WeightedCloud;
use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Atoms beyond this count per component are refused (dense `N²` kernels).
pub const MAX_COMPONENT_ATOMS: usize = 4096;

/// Atoms lighter than this fraction of their component are ignored in Λ.
const PRUNE_FRACTION: f64 = 1e-15;

/// Default truncation rank of the metric.
pub const DEFAULT_RANK: usize = 24;

/// `h(x_1..x_k) = Π_{i<j} exp(-|x_i - x_j|² / (2σ²))`, translation invariant with `‖h‖∞ = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub arity: usize,
    pub sigma: f64,
}

#[inline]
fn gauss(r2: f64, sigma: f64) -> f64 {
    (-r2 / (2.0 * sigma * sigma)).exp()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl TestFunction {
    pub fn sup_norm(&self) -> f64 {
        1.0
    }

    pub fn eval(&self, points: &[&[f64]]) -> f64 {
        let mut v = 1.0;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                v *= gauss(sq_dist(points[i], points[j]), self.sigma);
            }
        }
        v
    }

    /// `Λ(h, ξ) = Σ_α ∫ h dα^{⊗k}`.
    pub fn lambda(&self, xi: &SubProbConfig) -> Result<f64> {
        let mut s = 0.0;
        for c in xi.components() {
            let g = gram(c, &[self.sigma])?;
            s += lambda_from_gram(self.arity, &g.0[0], &g.1);
        }
        Ok(s)
    }
}

/// Gaussian Gram matrices of a (pruned) component for several σ, plus its masses.
fn gram(c: &WeightedCloud, sigmas: &[f64]) -> Result<(Vec<Array2<f64>>, Vec<f64>)> {
    let c = c.pruned(PRUNE_FRACTION * c.mass());
    let n = c.len();
    if n > MAX_COMPONENT_ATOMS {
        return Err(Error::Capacity {
            what: "atoms per component for test-function sums".into(),
            required: n as u64,
            limit: MAX_COMPONENT_ATOMS as u64,
        });
    }
    let mut d2 = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let v = sq_dist(c.point(i), c.point(j));
            d2[[i, j]] = v;
            d2[[j, i]] = v;
        }
    }
    let gs = sigmas
        .iter()
        .map(|&s| d2.mapv(|r2| gauss(r2, s)))
        .collect();
    Ok((gs, c.weights))
}

fn lambda_from_gram(arity: usize, g: &Array2<f64>, m: &[f64]) -> f64 {
    let n = m.len();
    let mv = ndarray::ArrayView1::from(m);
    match arity {
        2 => mv.dot(&g.dot(&mv)),
        3 => {
            // Σ_{a,b} m_a m_b g_ab Σ_c g_ac m_c g_cb
            let mut gm = g.clone();
            for i in 0..n {
                for j in 0..n {
                    gm[[i, j]] *= m[j];
                }
            }
            let h = gm.dot(g);
            let mut s = 0.0;
            for a in 0..n {
                let mut row = 0.0;
                for b in 0..n {
                    row += m[b] * g[[a, b]] * h[[a, b]];
                }
                s += m[a] * row;
            }
            s
        }
        k => {
            // Generic enumeration, used only for tiny inputs.
            let mut idx = vec![0usize; k];
            let mut s = 0.0;
            loop {
                let mut w = 1.0;
                for &i in &idx {
                    w *= m[i];
                }
                for i in 0..k {
                    for j in i + 1..k {
                        w *= g[[idx[i], idx[j]]];
                    }
                }
                s += w;
                let mut p = k;
                loop {
                    if p == 0 {
                        return s;
                    }
                    p -= 1;
                    idx[p] += 1;
                    if idx[p] < n {
                        break;
                    }
                    idx[p] = 0;
                }
            }
        }
    }
}

/// `Λ(h, ξ)` as a free function.
pub fn lambda_functional(h: &TestFunction, xi: &SubProbConfig) -> Result<f64> {
    h.lambda(xi)
}

/// Countable family `{h_r}` with weights `2^{-r} / (1 + ‖h_r‖∞)`, `r = 1, 2, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    entries: Vec<TestFunction>,
}

impl Default for TestFunctionFamily {
    /// Pair products of Gaussians with σ on octaves `2^{-3}..2^5` (broad scales
    /// first), then half-octaves; each σ appears with arity 2 and then 3.
    fn default() -> Self {
        let octaves = [0, 1, -1, 2, -2, 3, -3, 4, 5];
        let halves = [0.5, -0.5, 1.5, -1.5, 2.5, -2.5, 3.5, 4.5];
        let mut sigmas: Vec<f64> = octaves.iter().map(|&e| 2f64.powi(e)).collect();
        sigmas.extend(halves.iter().map(|&e| 2f64.powf(e)));
        let entries = sigmas
            .into_iter()
            .flat_map(|sigma| [TestFunction { arity: 2, sigma }, TestFunction { arity: 3, sigma }])
            .collect();
        Self { entries }
    }
}

impl TestFunctionFamily {
    pub fn new(entries: Vec<TestFunction>) -> Result<Self> {
        if entries.iter().any(|h| h.arity < 2 || !(h.sigma > 0.0)) {
            return Err(Error::InvalidParameter("test functions need arity ≥ 2 and σ > 0".into()));
        }
        Ok(Self { entries })
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[TestFunction] {
        &self.entries
    }

    /// Weight of the `r`-th entry, 1-based.
    pub fn weight(&self, r: usize) -> f64 {
        0.5f64.powi(r as i32) / (1.0 + self.entries[r - 1].sup_norm())
    }

    /// `Σ_{r > R} 2^{-r}`.
    pub fn truncation_bound(rank: usize) -> f64 {
        0.5f64.powi(rank as i32)
    }

    /// `(Λ(h_1, ξ), …, Λ(h_R, ξ))`.
    pub fn features(&self, xi: &SubProbConfig, rank: usize) -> Result<Vec<f64>> {
        if rank > self.rank() {
            return Err(Error::InvalidParameter(format!(
                "rank {rank} exceeds family size {}",
                self.rank()
            )));
        }
        let used = &self.entries[..rank];
        let mut sigmas: Vec<f64> = Vec::new();
        for h in used {
            if !sigmas.contains(&h.sigma) {
                sigmas.push(h.sigma);
            }
        }
        let mut out = vec![0.0; rank];
        for c in xi.components() {
            let (gs, m) = gram(c, &sigmas)?;
            for (r, h) in used.iter().enumerate() {
                let s = sigmas.iter().position(|&x| x == h.sigma).unwrap();
                out[r] += lambda_from_gram(h.arity, &gs[s], &m);
            }
        }
        Ok(out)
    }

    /// Weighted ℓ¹ distance between feature vectors.
    pub fn feature_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(r, (x, y))| self.weight(r + 1) * (x - y).abs())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_family_shape() {
        let f = TestFunctionFamily::default();
        assert_eq!(f.rank(), 34);
        assert_eq!(f.entries()[0], TestFunction { arity: 2, sigma: 1.0 });
        assert_eq!(f.entries()[1], TestFunction { arity: 3, sigma: 1.0 });
        assert_eq!(f.weight(1), 0.25);
        assert_eq!(TestFunctionFamily::truncation_bound(24), 2f64.powi(-24));
    }

    #[test]
    fn translation_invariance_and_decay() {
        for h in TestFunctionFamily::default().entries() {
            let p = [[0.3, -1.0], [1.2, 0.4], [-0.5, 0.9]];
            let pts: Vec<&[f64]> = p[..h.arity].iter().map(|x| &x[..]).collect();
            let q: Vec<[f64; 2]> = p.iter().map(|x| [x[0] + 7.1, x[1] - 3.3]).collect();
            let qts: Vec<&[f64]> = q[..h.arity].iter().map(|x| &x[..]).collect();
            assert!((h.eval(&pts) - h.eval(&qts)).abs() < 1e-12);
            let far = [0.0, 100.0 * h.sigma];
            let o = [0.0, 0.0];
            let mut f: Vec<&[f64]> = vec![&o, &far];
            if h.arity == 3 {
                f.push(&o);
            }
            assert!(h.eval(&f) < 1e-8);
        }
    }

    #[test]
    fn lambda_examples() {
        let h2 = TestFunction { arity: 2, sigma: 1.0 };
        let h3 = TestFunction { arity: 3, sigma: 0.5 };
        assert_eq!(h2.lambda(&SubProbConfig::empty(1)).unwrap(), 0.0);
        let unit = SubProbConfig::point_mass(2, 1.0).unwrap();
        assert_eq!(h2.lambda(&unit).unwrap(), 1.0);
        assert_eq!(h3.lambda(&unit).unwrap(), 1.0);
        let two = SubProbConfig::new(
            1,
            vec![
                WeightedCloud::point_mass(&[0.0], 0.5),
                WeightedCloud::point_mass(&[3.0], 0.5),
            ],
            0.0,
        )
        .unwrap();
        assert_eq!(h2.lambda(&two).unwrap(), 2.0 * 0.25);
        assert_eq!(h3.lambda(&two).unwrap(), 2.0 * 0.125);
    }

    #[test]
    fn gram_sums_match_enumeration() {
        let c = WeightedCloud::new(1, vec![0.0, 0.7, -1.1, 2.0], vec![0.1, 0.2, 0.3, 0.15]).unwrap();
        let xi = SubProbConfig::single(c.clone()).unwrap();
        for h in [TestFunction { arity: 2, sigma: 0.8 }, TestFunction { arity: 3, sigma: 1.3 }] {
            let mut s = 0.0;
            let n = c.len();
            for a in 0..n {
                for b in 0..n {
                    if h.arity == 2 {
                        s += c.weights[a] * c.weights[b] * h.eval(&[c.point(a), c.point(b)]);
                    } else {
                        for e in 0..n {
                            s += c.weights[a] * c.weights[b] * c.weights[e]
                                * h.eval(&[c.point(a), c.point(b), c.point(e)]);
                        }
                    }
                }
            }
            assert_relative_eq!(h.lambda(&xi).unwrap(), s, max_relative = 1e-13);
            let g = gram(&c, &[h.sigma]).unwrap();
            assert_relative_eq!(lambda_from_gram(h.arity, &g.0[0], &g.1), s, max_relative = 1e-13);
        }
        let h4 = TestFunction { arity: 4, sigma: 1.0 };
        assert!(h4.lambda(&xi).unwrap() > 0.0);
    }

    #[test]
    fn capacity_error_on_huge_components() {
        let n = MAX_COMPONENT_ATOMS + 1;
        let c = WeightedCloud::new(1, (0..n).map(|i| i as f64).collect(), vec![1.0 / n as f64; n]).unwrap();
        let xi = SubProbConfig::single(c).unwrap();
        assert!(matches!(
            TestFunction { arity: 2, sigma: 1.0 }.lambda(&xi),
            Err(Error::Capacity { .. })
        ));
    }
}
