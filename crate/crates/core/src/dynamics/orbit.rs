use crate::compact::{ConfigDistribution, SubProbConfig};
use crate::error::{Error, Result};
use crate::functionals::{islands, phi_functional, psi};
use crate::noise::KernelV;
use crate::paths::{EndpointMeasure, WeightedEnsemble};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Endpoint orbit `t ↦ Q̃_t` sampled at `t_0 = 0, Δ, 2Δ, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub times: Vec<f64>,
    pub configs: Vec<SubProbConfig>,
}

impl Orbit {
    pub fn new(times: Vec<f64>, configs: Vec<SubProbConfig>) -> Result<Self> {
        if times.len() != configs.len() || times.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{} times for {} snapshots",
                times.len(),
                configs.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("orbit times must increase".into()));
        }
        Ok(Self { times, configs })
    }

    /// Snapshots every `stride` path steps, including `t = 0`.
    pub fn from_ensemble(ens: &WeightedEnsemble, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidParameter("stride must be positive".into()));
        }
        let ks: Vec<usize> = (0..=ens.paths().steps()).step_by(stride).collect();
        let configs = ks
            .par_iter()
            .map(|&k| endpoint_config(&ens.endpoint_at(k)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ks.iter().map(|&k| k as f64 * ens.paths().dt()).collect(), configs)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Common spacing of the time grid, if uniform.
    pub fn spacing(&self) -> Option<f64> {
        if self.len() < 2 {
            return None;
        }
        let d = self.times[1] - self.times[0];
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - d).abs() <= 1e-9 * d)
            .then_some(d)
    }
}

/// A normalized endpoint measure as a one-component configuration.
pub fn endpoint_config(q: &EndpointMeasure) -> Result<SubProbConfig> {
    let mut cloud = q.cloud.clone();
    let m = cloud.mass();
    if m > 1.0 {
        cloud = cloud.scaled_mass(1.0 / m);
    }
    SubProbConfig::single(cloud)
}

/// `ν_T`: equal-weight snapshots of an orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationMeasure {
    pub times: Vec<f64>,
    pub snapshots: Vec<SubProbConfig>,
}

impl OccupationMeasure {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn distribution(&self) -> ConfigDistribution {
        ConfigDistribution::new(self.snapshots.clone()).expect("occupation measures are nonempty")
    }
}

/// Snapshots at indices `0, stride, 2·stride, …` of the orbit.
pub fn occupation_measure(run: &Orbit, stride: usize) -> Result<OccupationMeasure> {
    if run.len() < 2 {
        return Err(Error::InvalidParameter("orbit needs at least two snapshots".into()));
    }
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be positive".into()));
    }
    let idx: Vec<usize> = (0..run.len()).step_by(stride).collect();
    Ok(OccupationMeasure {
        times: idx.iter().map(|&i| run.times[i]).collect(),
        snapshots: idx.iter().map(|&i| run.configs[i].clone()).collect(),
    })
}

/// One line of a run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLogRecord {
    pub time: f64,
    pub config: String,
    pub psi: f64,
    pub phi: f64,
    pub island_count: usize,
    pub covered_mass: f64,
    pub ess: f64,
}

/// Records every `stride` path steps from `stride` on, islands at scale `eps(t)`.
pub fn run_log(
    ens: &WeightedEnsemble,
    stride: usize,
    kernel: &KernelV,
    eps: impl Fn(f64) -> f64 + Sync,
) -> Result<Vec<RunLogRecord>> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be positive".into()));
    }
    let ks: Vec<usize> = (stride..=ens.paths().steps()).step_by(stride).collect();
    ks.par_iter()
        .map(|&k| {
            let q = ens.endpoint_at(k);
            let xi = endpoint_config(&q)?;
            let isl = islands(&q, eps(q.t), false);
            Ok(RunLogRecord {
                time: q.t,
                config: format!("snapshot-{k}"),
                psi: psi(&xi),
                phi: phi_functional(&xi, ens.beta(), kernel),
                island_count: isl.island_count,
                covered_mass: isl.covered_mass,
                ess: ens.ess_at(k),
            })
        })
        .collect()
}

/// JSON lines, one record per line.
pub fn write_run_log<W: Write>(mut w: W, records: &[RunLogRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
