use super::config::SubProbConfig;
use crate::cloud::WeightedCloud;
use crate::error::{Error, Result};
use crate::spatial::CellIndex;
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;

/// Default single-linkage distance.
pub const DEFAULT_SEPARATION: f64 = 5.0;
/// Default minimum component mass.
pub const DEFAULT_MASS_FLOOR: f64 = 0.01;

/// `μ(B_r(x))` (open ball) for every atom `x` of `μ`.
pub fn ball_masses(mu: &WeightedCloud, r: f64) -> Vec<f64> {
    if mu.is_empty() {
        return Vec::new();
    }
    let idx = CellIndex::new(mu.dim, &mu.points, r.max(1e-12));
    (0..mu.len())
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            idx.for_each_within(mu.point(i), r, false, |j, _| s += mu.weights[j]);
            s
        })
        .collect()
}

/// `max_x μ(B_r(x))` over atom-centered open balls. This is a lower bound on
/// the supremum over all centers; any ball of radius `r` is contained in a ball
/// of radius `2r` centered at one of its atoms.
pub fn concentration_function(mu: &WeightedCloud, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {r} must be positive")));
    }
    Ok(ball_masses(mu, r).into_iter().fold(0.0, f64::max))
}

/// Connected components of the graph linking atoms at distance `≤ s`, as atom index lists
/// ordered by smallest member.
pub fn link_clusters(mu: &WeightedCloud, s: f64) -> Vec<Vec<usize>> {
    let n = mu.len();
    let mut uf = UnionFind::<usize>::new(n);
    if n > 0 {
        let idx = CellIndex::new(mu.dim, &mu.points, s);
        for i in 0..n {
            idx.for_each_within(mu.point(i), s, true, |j, _| {
                if j > i {
                    uf.union(i, j);
                }
            });
        }
    }
    let labels = uf.into_labeling();
    let mut order: Vec<usize> = Vec::new();
    let mut groups: std::collections::HashMap<usize, Vec<usize>> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        groups
            .entry(l)
            .or_insert_with(|| {
                order.push(l);
                Vec::new()
            })
            .push(i);
    }
    order.into_iter().map(|l| groups.remove(&l).unwrap()).collect()
}

/// Single-linkage clustering at distance `s`; clusters of mass `≥ η` become
/// components and the rest is reported as residual mass.
pub fn decompose(mu: &WeightedCloud, s: f64, eta: f64) -> Result<SubProbConfig> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("separation {s} must be positive")));
    }
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("mass floor {eta} outside [0, 1)")));
    }
    let mut comps = Vec::new();
    let mut residual = 0.0;
    for cluster in link_clusters(mu, s) {
        let c = mu.select(&cluster);
        let m = c.mass();
        if m >= eta && m > 0.0 {
            comps.push(c);
        } else {
            residual += m;
        }
    }
    SubProbConfig::new(mu.dim, comps, residual)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concentration_examples() {
        let unit = WeightedCloud::point_mass(&[3.0, 1.0], 1.0);
        assert_eq!(concentration_function(&unit, 0.1).unwrap(), 1.0);
        let n = 10;
        let spaced = WeightedCloud::new(1, (0..n).map(|i| 2.0 * i as f64).collect(), vec![0.1; n]).unwrap();
        assert_eq!(concentration_function(&spaced, 1.0).unwrap(), 0.1);
        assert_eq!(concentration_function(&WeightedCloud::empty(1), 1.0).unwrap(), 0.0);
        assert!(concentration_function(&unit, 0.0).is_err());
    }

    #[test]
    fn two_bumps_split() {
        let mut pts = Vec::new();
        for i in 0..50 {
            pts.push(0.01 * i as f64);
        }
        for i in 0..50 {
            pts.push(100.0 + 0.02 * i as f64);
        }
        let mu = WeightedCloud::new(1, pts, vec![0.01; 100]).unwrap();
        let xi = decompose(&mu, 5.0, 0.01).unwrap();
        assert_eq!(xi.components().len(), 2);
        for c in xi.components() {
            assert!((c.mass() - 0.5).abs() < 1e-12);
        }
        assert!(xi.residual_mass() < 1e-12);
    }

    #[test]
    fn tight_cluster_and_dust() {
        let tight = WeightedCloud::new(2, vec![0.0, 0.0, 0.5, 0.5, 1.0, 0.2], vec![0.3, 0.3, 0.4]).unwrap();
        let xi = decompose(&tight, 5.0, 0.01).unwrap();
        assert_eq!(xi.components().len(), 1);
        assert!((xi.total_mass() - 1.0).abs() < 1e-15);
        let n = 20;
        let dust = WeightedCloud::new(1, (0..n).map(|i| 6.0 * i as f64).collect(), vec![0.05; n]).unwrap();
        let xi = decompose(&dust, 5.0, 0.06).unwrap();
        assert!(xi.is_empty());
        assert!((xi.residual_mass() - 1.0).abs() < 1e-12);
    }
}
