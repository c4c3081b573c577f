use super::evolve::{evolve_config, launch, Environment};
use super::orbit::{endpoint_config, Orbit};
use crate::compact::{wasserstein, ConfigDistribution, SubProbConfig, TestFunction, TestFunctionFamily};
use crate::error::{Error, Result};
use crate::ito::{dust_series, ito_series, ladder_factors, Bundle, LadderRung};
use crate::noise::{Mollifier, NoiseSpec};
use crate::paths::{PathSet, WeightedEnsemble};
use crate::rng::derive_seed;
use crate::stats::{self, KsResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Fewer conditional replicas than this are flagged as insufficient.
pub const MIN_CONDITIONAL_REPLICAS: usize = 16;

/// Default number of fresh replicas per conditional expectation.
pub const DEFAULT_CONDITIONAL_REPLICAS: usize = 64;

/// `Q̃_t` of `n` paths from the origin, noise and paths seeded from `seed`.
pub fn endpoint_at_horizon(
    spec: &NoiseSpec,
    mollifier: &Mollifier,
    beta: f64,
    n: usize,
    horizon: f64,
    seed: u64,
) -> Result<SubProbConfig> {
    let d = mollifier.dim();
    let origin = vec![0.0; d];
    let g = spec.geometry(&origin, &origin, horizon)?;
    let noise = spec.realize(g, derive_seed(seed, "noise", 0))?;
    let paths = PathSet::simulate(n, horizon, spec.dt, d, &origin, derive_seed(seed, "paths", 0))?;
    let ens = WeightedEnsemble::weigh(paths, &noise, mollifier, beta)?;
    endpoint_config(&ens.endpoint_at(ens.paths().steps()))
}

/// The first `k` entries of the default family.
pub fn default_panel(k: usize) -> Vec<TestFunction> {
    TestFunctionFamily::default().entries()[..k].to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovParams {
    pub beta: f64,
    pub t: f64,
    pub r: f64,
    pub replicas: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub spec: NoiseSpec,
    pub panel: Vec<TestFunction>,
}

impl MarkovParams {
    pub fn new(dim: usize, beta: f64, t: f64, r: f64, replicas: usize, seed: u64) -> Self {
        Self {
            beta,
            t,
            r,
            replicas,
            n_paths: 128,
            seed,
            spec: NoiseSpec::new(dim),
            panel: default_panel(6),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    pub panel: Vec<TestFunction>,
    pub tests: Vec<KsResult>,
    /// `Λ(h_j, Q̃_t^{(r)})` per replica, indexed `[j][replica]`.
    pub two_stage: Vec<Vec<f64>>,
    /// `Λ(h_j, Q̃_{t+r})` per replica.
    pub direct: Vec<Vec<f64>>,
}

impl MarkovReport {
    pub fn p_values(&self) -> Vec<f64> {
        self.tests.iter().map(|t| t.p_value).collect()
    }

    pub fn min_p_value(&self) -> f64 {
        self.tests.iter().map(|t| t.p_value).fold(1.0, f64::min)
    }
}

fn panel_values(panel: &[TestFunction], xi: &SubProbConfig) -> Result<Vec<f64>> {
    panel.iter().map(|h| h.lambda(xi)).collect()
}

fn transpose(rows: Vec<Vec<f64>>, k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// Compares `Q̃_t` evolved by `r` (one path per atom, fresh noise) with `Q̃_{t+r}`
/// over independent replicas, one two-sample KS test per panel entry.
pub fn markov_consistency(p: &MarkovParams, mollifier: &Mollifier) -> Result<MarkovReport> {
    if !(p.t > 0.0 && p.r >= 0.0) {
        return Err(Error::InvalidParameter(format!("t = {}, r = {}", p.t, p.r)));
    }
    if p.replicas < 2 || p.panel.is_empty() {
        return Err(Error::InvalidParameter("need ≥ 2 replicas and a nonempty panel".into()));
    }
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..p.replicas)
        .into_par_iter()
        .map(|j| {
            let j = j as u64;
            let first = endpoint_at_horizon(&p.spec, mollifier, p.beta, p.n_paths, p.t, derive_seed(p.seed, "markov-first", j))?;
            let a = if p.r == 0.0 {
                first
            } else {
                let env = Environment::with_spec(derive_seed(p.seed, "markov-second", j), p.spec.clone());
                evolve_config(&first, &env, mollifier, p.beta, p.r, 1)?.output
            };
            let la = panel_values(&p.panel, &a)?;
            let lb = if p.r == 0.0 {
                la.clone()
            } else {
                let b = endpoint_at_horizon(
                    &p.spec,
                    mollifier,
                    p.beta,
                    p.n_paths,
                    p.t + p.r,
                    derive_seed(p.seed, "markov-direct", j),
                )?;
                panel_values(&p.panel, &b)?
            };
            Ok((la, lb))
        })
        .collect::<Result<_>>()?;
    let k = p.panel.len();
    let (a, b): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let two_stage = transpose(a, k);
    let direct = transpose(b, k);
    let tests = two_stage
        .iter()
        .zip(&direct)
        .map(|(x, y)| stats::ks_two_sample(x, y))
        .collect();
    Ok(MarkovReport {
        panel: p.panel.clone(),
        tests,
        two_stage,
        direct,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResidual {
    pub value: f64,
    pub std_err: f64,
    pub values: Vec<f64>,
}

/// `𝒲(θ, Π_t θ)` averaged over `replicas` independent push-forwards; sample `i`
/// of replica `r` is evolved under its own noise.
#[allow(clippy::too_many_arguments)]
pub fn fixed_point_residual(
    theta: &ConfigDistribution,
    env: &Environment,
    mollifier: &Mollifier,
    beta: f64,
    t: f64,
    per_atom: usize,
    replicas: usize,
    family: &TestFunctionFamily,
    rank: usize,
) -> Result<FixedPointResidual> {
    if replicas == 0 {
        return Err(Error::InvalidParameter("at least one replica".into()));
    }
    let n = theta.len() as u64;
    let values: Vec<f64> = (0..replicas as u64)
        .map(|r| {
            let pushed = theta
                .samples()
                .par_iter()
                .enumerate()
                .map(|(i, xi)| {
                    let e = env.reseeded(derive_seed(env.seed, "fixed-point", r * n + i as u64));
                    Ok(evolve_config(xi, &e, mollifier, beta, t, per_atom)?.output)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(wasserstein(theta, &ConfigDistribution::new(pushed)?, family, rank)?.value)
        })
        .collect::<Result<_>>()?;
    Ok(FixedPointResidual {
        value: stats::mean(&values),
        std_err: stats::std_err(&values),
        values,
    })
}

/// `ℓ(ξ) = c · Λ(h, ξ)`; Lipschitz for `D` when `c` is at most the family weight of `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelFunctional {
    pub weight: f64,
    pub h: TestFunction,
}

impl PanelFunctional {
    pub fn eval(&self, xi: &SubProbConfig) -> Result<f64> {
        Ok(self.weight * self.h.lambda(xi)?)
    }
}

/// `ℓ_r = w_r Λ(h_r, ·)` for the given 1-based family indices.
pub fn family_panel(family: &TestFunctionFamily, indices: &[usize]) -> Vec<PanelFunctional> {
    indices
        .iter()
        .map(|&r| PanelFunctional {
            weight: family.weight(r),
            h: family.entries()[r - 1],
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlnParams {
    pub beta: f64,
    pub s: f64,
    pub conditional_replicas: usize,
    pub seed: u64,
    pub spec: NoiseSpec,
    pub panel: Vec<PanelFunctional>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlnResidual {
    pub horizon: f64,
    /// `Θ_T(ℓ)` per panel entry.
    pub theta: Vec<f64>,
    /// `max_ℓ |Θ_T(ℓ)| / T`.
    pub value: f64,
    pub insufficient_replicas: bool,
}

/// `Θ_T(ℓ) = Σ_t [ℓ(Q̃_{t+s}) - Ê(ℓ(Q̃_{t+s}) | 𝓕_t)] Δ` over the orbit grid, the
/// conditional expectation estimated by evolving `Q̃_t` by `s` under fresh noise.
pub fn lln_residual(run: &Orbit, mollifier: &Mollifier, p: &LlnParams) -> Result<LlnResidual> {
    let horizon = run.horizon();
    if p.panel.is_empty() {
        return Err(Error::InvalidParameter("empty panel".into()));
    }
    if p.s == 0.0 {
        return Ok(LlnResidual {
            horizon,
            theta: vec![0.0; p.panel.len()],
            value: 0.0,
            insufficient_replicas: false,
        });
    }
    let delta = run
        .spacing()
        .ok_or_else(|| Error::InvalidParameter("orbit needs a uniform grid".into()))?;
    let lag = (p.s / delta).round();
    if !(p.s > 0.0) || lag < 1.0 || (lag * delta - p.s).abs() > 1e-9 * p.s {
        return Err(Error::GridMismatch(format!("lag {} is not a multiple of the spacing {delta}", p.s)));
    }
    if horizon < 2.0 * p.s {
        return Err(Error::InvalidParameter(format!("horizon {horizon} < 2s = {}", 2.0 * p.s)));
    }
    if p.conditional_replicas == 0 {
        return Err(Error::InvalidParameter("at least one conditional replica".into()));
    }
    let lag = lag as usize;
    let m = p.conditional_replicas as u64;
    let k_max = run.len() - 1 - lag;
    let terms: Vec<Vec<f64>> = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let realized: Vec<f64> = p
                .panel
                .iter()
                .map(|l| l.eval(&run.configs[k + lag]))
                .collect::<Result<_>>()?;
            let mut cond = vec![0.0; p.panel.len()];
            for j in 0..m {
                let env = Environment::with_spec(derive_seed(p.seed, "lln", k as u64 * m + j), p.spec.clone());
                let next = evolve_config(&run.configs[k], &env, mollifier, p.beta, p.s, 1)?.output;
                for (c, l) in cond.iter_mut().zip(&p.panel) {
                    *c += l.eval(&next)?;
                }
            }
            Ok(realized
                .iter()
                .zip(&cond)
                .map(|(r, c)| (r - c / m as f64) * delta)
                .collect())
        })
        .collect::<Result<_>>()?;
    let theta: Vec<f64> = (0..p.panel.len())
        .map(|r| terms.iter().map(|t| t[r]).sum())
        .collect();
    let value = theta.iter().map(|x| x.abs()).fold(0.0, f64::max) / horizon;
    Ok(LlnResidual {
        horizon,
        theta,
        value,
        insufficient_replicas: p.conditional_replicas < MIN_CONDITIONAL_REPLICAS,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItoScrFReport {
    pub horizon: f64,
    pub beta: f64,
    pub rungs: Vec<LadderRung>,
}

/// Terminal gap between `log F̄_T(ξ)` and its Itô expansion along a coarse-to-fine
/// `ladder`. Each replica draws one fine noise and one set of fine paths per
/// component; coarser rungs subsample the paths and integrate the same noise.
#[allow(clippy::too_many_arguments)]
pub fn ito_scr_f_check(
    xi: &SubProbConfig,
    env: &Environment,
    mollifier: &Mollifier,
    beta: f64,
    horizon: f64,
    ladder: &[f64],
    per_atom: usize,
    replicas: usize,
) -> Result<ItoScrFReport> {
    let (fine, factors) = ladder_factors(ladder)?;
    if replicas == 0 {
        return Err(Error::InvalidParameter("at least one replica".into()));
    }
    let psi = xi.total_mass().min(1.0);
    let v0 = mollifier.l2_norm_sq();
    let shifted = xi.recentered(env.spec.dx);
    let spec = env.spec.clone().with_dt(fine);
    let per_replica: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            if xi.is_empty() {
                return factors
                    .iter()
                    .map(|&f| {
                        let dt = fine * f as f64;
                        Ok(dust_series(crate::noise::steps_for(horizon, dt)?, dt, v0, beta).terminal_residual())
                    })
                    .collect();
            }
            let e = Environment::with_spec(derive_seed(env.seed, "ito", r), spec.clone());
            let launched = launch(&shifted, &e, horizon, per_atom)?;
            factors
                .iter()
                .map(|&f| {
                    let coarse: Vec<PathSet> = launched
                        .iter()
                        .map(|l| l.paths.subsample(f))
                        .collect::<Result<_>>()?;
                    let bundles: Vec<Bundle> = launched
                        .iter()
                        .zip(&coarse)
                        .map(|(l, p)| Bundle {
                            noise: &l.noise,
                            paths: p,
                            log_mass: l.log_mass.clone(),
                        })
                        .collect();
                    Ok(ito_series(&bundles, 1.0 - psi, mollifier, beta)?.terminal_residual())
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rungs = ladder
        .iter()
        .enumerate()
        .map(|(j, &dt)| LadderRung::from_residuals(dt, per_replica.iter().map(|r| r[j]).collect()))
        .collect();
    Ok(ItoScrFReport { horizon, beta, rungs })
}
