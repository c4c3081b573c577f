use super::config::SubProbConfig;
use super::family::TestFunctionFamily;
use crate::error::Result;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub truncation_bound: f64,
}

/// `D(ξ1, ξ2) = Σ_{r ≤ R} w_r |Λ(h_r, ξ1) - Λ(h_r, ξ2)|`, with the tail bound `Σ_{r>R} 2^{-r}`.
pub fn metric_d(
    xi1: &SubProbConfig,
    xi2: &SubProbConfig,
    family: &TestFunctionFamily,
    rank: usize,
) -> Result<MetricValue> {
    let a = family.features(xi1, rank)?;
    let b = family.features(xi2, rank)?;
    Ok(MetricValue {
        value: family.feature_distance(&a, &b),
        truncation_bound: TestFunctionFamily::truncation_bound(rank),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::WeightedCloud;
    use crate::compact::family::DEFAULT_RANK;

    #[test]
    fn point_mass_to_empty_is_diagonal_sum() {
        let f = TestFunctionFamily::default();
        let unit = SubProbConfig::point_mass(1, 1.0).unwrap();
        let d = metric_d(&unit, &SubProbConfig::empty(1), &f, DEFAULT_RANK).unwrap();
        let oracle: f64 = (1..=DEFAULT_RANK).map(|r| 0.5f64.powi(r as i32) / 2.0).sum();
        assert!((d.value - oracle).abs() < 1e-15);
        assert_eq!(d.truncation_bound, 2f64.powi(-24));
        assert!(metric_d(&unit, &unit, &f, 40).is_err());
    }

    #[test]
    fn identity_and_orbit_invariance() {
        let f = TestFunctionFamily::default();
        let xi = SubProbConfig::new(
            2,
            vec![
                WeightedCloud::new(2, vec![0.0, 0.0, 1.0, 0.5], vec![0.2, 0.3]).unwrap(),
                WeightedCloud::new(2, vec![4.0, 4.0, 4.5, 3.0], vec![0.1, 0.15]).unwrap(),
            ],
            0.0,
        )
        .unwrap();
        assert_eq!(metric_d(&xi, &xi, &f, 24).unwrap().value, 0.0);
        let moved = xi.shifted(&[vec![100.0, -3.0], vec![-55.5, 12.25]]);
        assert!(metric_d(&xi, &moved, &f, 24).unwrap().value < 1e-12);
    }
}
