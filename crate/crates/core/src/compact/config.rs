use crate::cloud::WeightedCloud;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance on the total mass of a configuration.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A finite collection of subprobability point clouds, each meaningful only up
/// to translation, with total mass at most one. Components are kept in
/// descending order of mass.
#[derive(Clone, Debug, PartialEq)]
pub struct SubProbConfig {
    dim: usize,
    components: Vec<WeightedCloud>,
    residual_mass: f64,
}

#[derive(Serialize, Deserialize)]
struct ComponentJson {
    mass: f64,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConfigJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    components: Vec<ComponentJson>,
    residual_mass: f64,
}

impl SubProbConfig {
    pub fn new(dim: usize, components: Vec<WeightedCloud>, residual_mass: f64) -> Result<Self> {
        let mut kept = Vec::with_capacity(components.len());
        let mut total = 0.0;
        for c in components {
            if c.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.dim,
                });
            }
            let c = WeightedCloud::new(dim, c.points, c.weights)?;
            let m = c.mass();
            total += m;
            if m > 0.0 {
                kept.push(c);
            }
        }
        if total > 1.0 + MASS_TOLERANCE {
            return Err(Error::InvalidParameter(format!("total mass {total} exceeds 1")));
        }
        if !(residual_mass >= 0.0) {
            return Err(Error::InvalidParameter(format!("residual mass {residual_mass}")));
        }
        kept.sort_by(|a, b| b.mass().total_cmp(&a.mass()));
        Ok(Self {
            dim,
            components: kept,
            residual_mass,
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            components: Vec::new(),
            residual_mass: 0.0,
        }
    }

    /// One atom of the given mass.
    pub fn point_mass(dim: usize, mass: f64) -> Result<Self> {
        Self::new(dim, vec![WeightedCloud::point_mass(&vec![0.0; dim], mass)], 0.0)
    }

    /// A single component carrying the whole cloud.
    pub fn single(cloud: WeightedCloud) -> Result<Self> {
        Self::new(cloud.dim, vec![cloud], 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[WeightedCloud] {
        &self.components
    }

    pub fn residual_mass(&self) -> f64 {
        self.residual_mass
    }

    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(WeightedCloud::mass).sum()
    }

    pub fn atom_count(&self) -> usize {
        self.components.iter().map(WeightedCloud::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Translate component `i` by `shifts[i]`.
    pub fn shifted(&self, shifts: &[Vec<f64>]) -> Self {
        Self {
            dim: self.dim,
            components: self
                .components
                .iter()
                .zip(shifts)
                .map(|(c, s)| c.shifted(s))
                .collect(),
            residual_mass: self.residual_mass,
        }
    }

    /// Translate each component so its centroid lies within half a `pitch` of
    /// the origin; shifts are multiples of `pitch`, so lattice-aligned data stays aligned.
    pub fn recentered(&self, pitch: f64) -> Self {
        let shifts: Vec<Vec<f64>> = self
            .components
            .iter()
            .map(|c| c.centroid().iter().map(|x| -(x / pitch).round() * pitch).collect())
            .collect();
        self.shifted(&shifts)
    }

    pub fn to_json(&self) -> Result<String> {
        let j = ConfigJson {
            dim: Some(self.dim),
            components: self
                .components
                .iter()
                .map(|c| ComponentJson {
                    mass: c.mass(),
                    points: (0..c.len()).map(|i| c.point(i).to_vec()).collect(),
                    weights: c.weights.clone(),
                })
                .collect(),
            residual_mass: self.residual_mass,
        };
        Ok(serde_json::to_string(&j)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: ConfigJson = serde_json::from_str(s)?;
        let dim = j
            .dim
            .or_else(|| j.components.iter().flat_map(|c| c.points.first()).map(Vec::len).next())
            .ok_or_else(|| Error::InvalidParameter("cannot infer dimension of an empty config".into()))?;
        let mut comps = Vec::new();
        for c in j.components {
            let mut pts = Vec::new();
            for p in &c.points {
                if p.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: p.len(),
                    });
                }
                pts.extend_from_slice(p);
            }
            let cloud = WeightedCloud::new(dim, pts, c.weights)?;
            if (cloud.mass() - c.mass).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "component mass {} disagrees with its weights ({})",
                    c.mass,
                    cloud.mass()
                )));
            }
            comps.push(cloud);
        }
        Self::new(dim, comps, j.residual_mass)
    }
}

/// Equal-weight empirical distribution over configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigDistribution {
    samples: Vec<SubProbConfig>,
}

impl ConfigDistribution {
    pub fn new(samples: Vec<SubProbConfig>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("a config distribution needs at least one sample".into()));
        }
        Ok(Self { samples })
    }

    pub fn singleton(xi: SubProbConfig) -> Self {
        Self { samples: vec![xi] }
    }

    pub fn samples(&self) -> &[SubProbConfig] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}
