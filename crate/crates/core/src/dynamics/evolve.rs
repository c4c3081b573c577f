use crate::cloud::WeightedCloud;
use crate::compact::SubProbConfig;
use crate::error::{Error, Result};
use crate::noise::{Mollifier, NoiseGrid, NoiseSpec};
use crate::paths::{renormalization, PathSet, WeightedEnsemble};
use crate::rng::derive_seed;
use crate::stats::log_sum_exp;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Noise source for configuration dynamics: component `i` is driven by its own
/// realization, seeded from `(seed, i)`, on a box around the component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub spec: NoiseSpec,
}

impl Environment {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            seed,
            spec: NoiseSpec::new(dim),
        }
    }

    pub fn with_spec(seed: u64, spec: NoiseSpec) -> Self {
        Self { seed, spec }
    }

    /// Same resolution, different seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            seed,
            spec: self.spec.clone(),
        }
    }

    pub fn component_noise(&self, component: &WeightedCloud, index: usize, horizon: f64) -> Result<NoiseGrid> {
        let (lo, hi) = component
            .bounds()
            .ok_or_else(|| Error::InvalidParameter("empty component".into()))?;
        let g = self.spec.geometry(&lo, &hi, horizon)?;
        self.spec.realize(g, derive_seed(self.seed, "component", index as u64))
    }

    pub fn component_paths(&self, component: &WeightedCloud, index: usize, horizon: f64, per_atom: usize) -> Result<PathSet> {
        PathSet::simulate_from(
            &component.points,
            component.dim,
            per_atom,
            horizon,
            self.spec.dt,
            derive_seed(self.seed, "paths", index as u64),
        )
    }
}

/// Paths launched from one component with their log masses `log(m_a / p)`.
pub(crate) struct Launched {
    pub noise: NoiseGrid,
    pub paths: PathSet,
    pub log_mass: Vec<f64>,
}

pub(crate) fn launch(
    xi: &SubProbConfig,
    env: &Environment,
    horizon: f64,
    per_atom: usize,
) -> Result<Vec<Launched>> {
    if per_atom == 0 {
        return Err(Error::InvalidParameter("at least one path per atom".into()));
    }
    let lp = (per_atom as f64).ln();
    xi.components()
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let noise = env.component_noise(c, i, horizon)?;
            let paths = env.component_paths(c, i, horizon, per_atom)?;
            let log_mass = c
                .weights
                .iter()
                .flat_map(|&m| std::iter::repeat_n(m.ln() - lp, per_atom))
                .collect();
            Ok(Launched {
                noise,
                paths,
                log_mass,
            })
        })
        .collect()
}

/// `log u_i = log m_i + β H_t(W_i)` per launched path.
fn terminal_log_weights(l: &Launched, mollifier: &Mollifier, beta: f64) -> Result<Vec<f64>> {
    let ens = WeightedEnsemble::weigh(l.paths.clone(), &l.noise, mollifier, beta)?;
    let k = l.paths.steps();
    Ok(l.log_mass
        .iter()
        .enumerate()
        .map(|(i, &lm)| lm + beta * ens.field(i, k))
        .collect())
}

/// Result of one transition `ξ ↦ ξ^{(t)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolvedConfig {
    pub input: SubProbConfig,
    pub horizon: f64,
    pub output: SubProbConfig,
    /// `𝓕_t(ξ)`.
    pub scr_f: f64,
    /// `log N`, `N = 𝓕_t(ξ) + (1 - Ψ(ξ)) e^{β² t V(0)/2}`.
    pub log_normalizer: f64,
}

impl EvolvedConfig {
    pub fn normalizer(&self) -> f64 {
        self.log_normalizer.exp()
    }
}

fn check(xi: &SubProbConfig, mollifier: &Mollifier, t: f64) -> Result<()> {
    if xi.dim() != mollifier.dim() {
        return Err(Error::DimensionMismatch {
            expected: mollifier.dim(),
            got: xi.dim(),
        });
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("horizon {t} must be nonnegative")));
    }
    Ok(())
}

/// `log 𝓕_t(ξ)`; `-inf` for the empty configuration.
pub fn log_scr_f(
    xi: &SubProbConfig,
    env: &Environment,
    mollifier: &Mollifier,
    beta: f64,
    t: f64,
    per_atom: usize,
) -> Result<f64> {
    check(xi, mollifier, t)?;
    if xi.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    if t == 0.0 || beta == 0.0 {
        return Ok(xi.total_mass().ln());
    }
    let xi = xi.recentered(env.spec.dx);
    let launched = launch(&xi, env, t, per_atom)?;
    let mut all = Vec::new();
    for l in &launched {
        all.extend(terminal_log_weights(l, mollifier, beta)?);
    }
    Ok(log_sum_exp(&all))
}

/// `𝓕_t(ξ) = Σ_i ∫ α_i(dz) E_z[exp(β H_t)]`, estimated with `per_atom` paths per atom.
pub fn scr_f(
    xi: &SubProbConfig,
    env: &Environment,
    mollifier: &Mollifier,
    beta: f64,
    t: f64,
    per_atom: usize,
) -> Result<f64> {
    Ok(log_scr_f(xi, env, mollifier, beta, t, per_atom)?.exp())
}

/// One step of the configuration dynamics. Components are re-centered on the
/// noise lattice before launching paths; endpoints keep the shifted frame.
pub fn evolve_config(
    xi: &SubProbConfig,
    env: &Environment,
    mollifier: &Mollifier,
    beta: f64,
    t: f64,
    per_atom: usize,
) -> Result<EvolvedConfig> {
    check(xi, mollifier, t)?;
    let psi = xi.total_mass().min(1.0);
    if t == 0.0 || xi.is_empty() {
        let log_n = if xi.is_empty() {
            renormalization(beta, t, mollifier.l2_norm_sq())
        } else {
            0.0
        };
        return Ok(EvolvedConfig {
            input: xi.clone(),
            horizon: t,
            output: if xi.is_empty() { SubProbConfig::empty(xi.dim()) } else { xi.clone() },
            scr_f: psi,
            log_normalizer: log_n,
        });
    }
    let shifted = xi.recentered(env.spec.dx);
    let launched = launch(&shifted, env, t, per_atom)?;
    let log_u: Vec<Vec<f64>> = launched
        .iter()
        .map(|l| terminal_log_weights(l, mollifier, beta))
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = log_u.iter().flatten().copied().collect();
    let log_f = log_sum_exp(&flat);
    let dust = 1.0 - psi;
    let mut terms = flat;
    if dust > 0.0 {
        terms.push(dust.ln() + renormalization(beta, t, mollifier.l2_norm_sq()));
    }
    let log_n = log_sum_exp(&terms);
    let d = xi.dim();
    let mut comps = Vec::with_capacity(launched.len());
    for (l, lu) in launched.iter().zip(&log_u) {
        let k = l.paths.steps();
        let points: Vec<f64> = (0..l.paths.n())
            .flat_map(|i| l.paths.point(i, k).to_vec())
            .collect();
        let weights = lu.iter().map(|&x| (x - log_n).exp()).collect();
        comps.push(WeightedCloud::new(d, points, weights)?);
    }
    let total: f64 = comps.iter().map(WeightedCloud::mass).sum();
    // Rounding in the normalization may push the total a hair above one.
    if total > 1.0 {
        comps = comps.into_iter().map(|c| c.scaled_mass(1.0 / total)).collect();
    }
    let total = total.min(1.0);
    Ok(EvolvedConfig {
        input: xi.clone(),
        horizon: t,
        output: SubProbConfig::new(d, comps, 1.0 - total)?,
        scr_f: log_f.exp(),
        log_normalizer: log_n,
    })
}
