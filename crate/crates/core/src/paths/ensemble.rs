use super::pathset::PathSet;
use crate::cloud::WeightedCloud;
use crate::error::{Error, Result};
use crate::noise::{Field, Mollifier, NoiseGrid, TimeOrder};
use crate::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Identity of the noise realization an ensemble was weighed against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseIdentity {
    pub seed: u64,
    pub geometry_hash: u64,
}

impl NoiseIdentity {
    pub fn of(noise: &NoiseGrid) -> Self {
        Self {
            seed: noise.seed(),
            geometry_hash: noise.geometry().fingerprint(),
        }
    }
}

/// `½ β² t V(0)`, the log of `E exp(β H_t)`.
#[inline]
pub fn renormalization(beta: f64, t: f64, v0: f64) -> f64 {
    0.5 * beta * beta * t * v0
}

/// Brownian paths with their running fields `H_t(W_i)`; log-weights are `β H`.
#[derive(Clone, Debug)]
pub struct WeightedEnsemble {
    paths: PathSet,
    beta: f64,
    fields: Vec<f64>,
    noise: NoiseIdentity,
    v0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionEstimate {
    pub z_hat: f64,
    pub scr_z_hat: f64,
    pub log_z_hat: f64,
    pub log_scr_z_hat: f64,
}

/// Normalized weighted point cloud representing the endpoint law at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointMeasure {
    pub t: f64,
    pub cloud: WeightedCloud,
    pub normalized: bool,
}

impl EndpointMeasure {
    pub fn dim(&self) -> usize {
        self.cloud.dim
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub n: usize,
    pub dim: usize,
    pub beta: f64,
    pub horizon: f64,
    pub dt: f64,
    pub path_seed: u64,
    pub noise: NoiseIdentity,
    pub v0: f64,
    pub ess: f64,
    pub log_z_hat: f64,
    pub log_scr_z_hat: f64,
}

impl WeightedEnsemble {
    pub fn weigh(paths: PathSet, noise: &NoiseGrid, mollifier: &Mollifier, beta: f64) -> Result<Self> {
        Self::weigh_ordered(paths, noise, mollifier, beta, TimeOrder::Forward)
    }

    pub fn weigh_ordered(
        paths: PathSet,
        noise: &NoiseGrid,
        mollifier: &Mollifier,
        beta: f64,
        order: TimeOrder,
    ) -> Result<Self> {
        if paths.dim() != mollifier.dim() {
            return Err(Error::DimensionMismatch {
                expected: mollifier.dim(),
                got: paths.dim(),
            });
        }
        let field = Field::with_order(noise, mollifier, order)?;
        let stride = paths.steps() + 1;
        let per_path: Result<Vec<Vec<f64>>> = (0..paths.n())
            .into_par_iter()
            .map(|i| field.cumulative(paths.path(i), paths.dt()))
            .collect();
        let mut fields = Vec::with_capacity(paths.n() * stride);
        for h in per_path? {
            fields.extend_from_slice(&h);
        }
        Ok(Self {
            paths,
            beta,
            fields,
            noise: NoiseIdentity::of(noise),
            v0: mollifier.l2_norm_sq(),
        })
    }

    pub fn paths(&self) -> &PathSet {
        &self.paths
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn noise(&self) -> NoiseIdentity {
        self.noise
    }

    pub fn n(&self) -> usize {
        self.paths.n()
    }

    pub fn horizon(&self) -> f64 {
        self.paths.horizon()
    }

    /// `H_{t_k}(W_i)`.
    #[inline]
    pub fn field(&self, i: usize, k: usize) -> f64 {
        self.fields[i * (self.paths.steps() + 1) + k]
    }

    pub fn log_weights_at(&self, k: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.beta * self.field(i, k)).collect()
    }

    /// `ℓ_i = β H_T(W_i)`.
    pub fn log_weights(&self) -> Vec<f64> {
        self.log_weights_at(self.paths.steps())
    }

    pub fn ess_at(&self, k: usize) -> f64 {
        stats::effective_sample_size(&self.log_weights_at(k))
    }

    pub fn ess(&self) -> f64 {
        self.ess_at(self.paths.steps())
    }

    pub fn partition_at(&self, k: usize) -> PartitionEstimate {
        let l = self.log_weights_at(k);
        let log_z = stats::log_sum_exp(&l) - (l.len() as f64).ln();
        let log_scr = log_z - renormalization(self.beta, k as f64 * self.paths.dt(), self.v0);
        PartitionEstimate {
            z_hat: log_z.exp(),
            scr_z_hat: log_scr.exp(),
            log_z_hat: log_z,
            log_scr_z_hat: log_scr,
        }
    }

    pub fn partition_function(&self) -> PartitionEstimate {
        self.partition_at(self.paths.steps())
    }

    /// Endpoint law at grid index `k`, weighted by `exp(β H_{t_k})`.
    pub fn endpoint_at(&self, k: usize) -> EndpointMeasure {
        let w = stats::normalized_weights(&self.log_weights_at(k));
        EndpointMeasure {
            t: k as f64 * self.paths.dt(),
            cloud: WeightedCloud {
                dim: self.paths.dim(),
                points: self.paths.positions_at(k),
                weights: w,
            },
            normalized: true,
        }
    }

    pub fn endpoint_measure(&self, t: f64) -> Result<EndpointMeasure> {
        Ok(self.endpoint_at(self.paths.index_of(t)?))
    }

    /// Endpoint measures at every `stride`-th grid index starting at `stride`.
    pub fn endpoint_run(&self, stride: usize) -> Result<Vec<EndpointMeasure>> {
        if stride == 0 {
            return Err(Error::InvalidParameter("stride must be positive".into()));
        }
        Ok((1..=self.paths.steps() / stride)
            .map(|j| self.endpoint_at(j * stride))
            .collect())
    }

    pub fn manifest(&self) -> EnsembleManifest {
        let p = self.partition_function();
        EnsembleManifest {
            n: self.n(),
            dim: self.paths.dim(),
            beta: self.beta,
            horizon: self.horizon(),
            dt: self.paths.dt(),
            path_seed: self.paths.seed(),
            noise: self.noise,
            v0: self.v0,
            ess: self.ess(),
            log_z_hat: p.log_z_hat,
            log_scr_z_hat: p.log_scr_z_hat,
        }
    }

    /// CSV rows `path_id, t, x0.., log_weight` for every path and grid time.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.paths.dim();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["path_id".to_string(), "t".to_string()];
        header.extend((0..d).map(|a| format!("x{a}")));
        header.push("log_weight".into());
        wr.write_record(&header)?;
        for i in 0..self.n() {
            for k in 0..=self.paths.steps() {
                let mut rec = vec![i.to_string(), format!("{}", k as f64 * self.paths.dt())];
                rec.extend(self.paths.point(i, k).iter().map(|x| format!("{x}")));
                rec.push(format!("{}", self.beta * self.field(i, k)));
                wr.write_record(&rec)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::GridGeometry;

    fn setup(beta: f64, n: usize) -> WeightedEnsemble {
        let m = Mollifier::new(1).unwrap();
        let g = GridGeometry::for_horizon(1, 1.0 / 16.0, 1.0 / 16.0, 1.0, &[0.0], 8.0, 1.0).unwrap();
        let noise = NoiseGrid::sample(g, 5).unwrap();
        let paths = PathSet::simulate(n, 1.0, 1.0 / 16.0, 1, &[0.0], 6).unwrap();
        WeightedEnsemble::weigh(paths, &noise, &m, beta).unwrap()
    }

    #[test]
    fn zero_beta_is_trivial() {
        let e = setup(0.0, 64);
        assert!(e.log_weights().iter().all(|&l| l == 0.0));
        let p = e.partition_function();
        assert_eq!(p.z_hat, 1.0);
        assert_eq!(p.scr_z_hat, 1.0);
        let q = e.endpoint_measure(0.5).unwrap();
        assert!(q.cloud.weights.iter().all(|&w| w == 1.0 / 64.0));
        assert_eq!(q.cloud.points, e.paths().positions_at(8));
    }

    #[test]
    fn log_weights_are_linear_in_beta() {
        let a = setup(0.5, 32);
        let b = setup(1.0, 32);
        for (x, y) in a.log_weights().iter().zip(b.log_weights()) {
            assert_eq!(2.0 * x, y);
        }
    }

    #[test]
    fn endpoint_mass_and_grid_checks() {
        let e = setup(2.0, 100);
        let q = e.endpoint_measure(1.0).unwrap();
        assert!((q.cloud.mass() - 1.0).abs() < 1e-12);
        assert!(e.endpoint_measure(0.3).is_err());
        assert!(e.ess() >= 1.0 && e.ess() <= 100.0);
        assert_eq!(e.endpoint_run(4).unwrap().len(), 4);
    }

    #[test]
    fn log_domain_is_safe() {
        let l = [700.0, 699.0, -700.0];
        let lz = stats::log_sum_exp(&l) - 3f64.ln();
        assert!(lz.is_finite());
    }

    #[test]
    fn csv_and_manifest() {
        let e = setup(0.5, 3);
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("path_id,t,x0,log_weight"));
        assert_eq!(text.lines().count(), 1 + 3 * 17);
        let m = e.manifest();
        assert_eq!(m.n, 3);
        assert!(serde_json::to_string(&m).unwrap().contains("geometry_hash"));
    }
}
