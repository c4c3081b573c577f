//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p wgmc --test acceptance -- 3 9`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;
use wgmc::cloud::WeightedCloud;
use wgmc::compact::{concentration_function, metric_d, wasserstein, ConfigDistribution, SubProbConfig, TestFunctionFamily};
use wgmc::dynamics::{evolve_config, markov_consistency, Environment, MarkovParams};
use wgmc::free_energy::{
    ito_decomposition_check, ito_ledger, lyapunov_scan, qv_bound_check, strong_disorder_flag, FreeEnergyParams,
};
use wgmc::functionals::{localization_statistic, phi_functional, psi, psi_eps};
use wgmc::noise::{field_covariance, field_energy, KernelV, Mollifier, NoiseSpec};
use wgmc::paths::{scaling_check, PathSet, ScalingMode, SheParams, WeightedEnsemble};
use wgmc::rng::derive_seed;
use wgmc::stats;

const SEED: u64 = 20_240_917;

// Pinned tolerances.
const C1_Z: f64 = 4.0;
const C2_Z: f64 = 4.0;
/// Finest-rung RMS residual over `β² T V(0) / 2`; pilot (400 replicas, n = 128) gave 1.9%.
const C3_RELATIVE: f64 = 0.05;
const C4_EQUALITY: f64 = 1e-9;
const C5_EXACT: f64 = 1e-12;
const C5_WASSERSTEIN: f64 = 1e-14;
const C6_EXACT: f64 = 1e-12;
const C7_MARGIN_SE: f64 = 2.0;
const C7_ABSORPTION: f64 = 1e-12;
const C8_MIN_P: f64 = 0.001;
const C9_SE: f64 = 2.0;
const C10_SE: f64 = 3.0;
const C10_ORACLE_Z: f64 = 4.0;
const C11_SLOPE: f64 = 0.15;
const C12_Z: f64 = 4.0;
/// Per-run `|gap - M_T/T|` over the rate scale `β² V(0) / 2`; pilot max over 20 runs was
/// 7.3% at dt = 1/64 and 4.8% at dt = 1/256.
const C13_RELATIVE: f64 = 0.10;
/// RMS of the same quantity across runs, matching the Itô residual bound.
const C13_RMS: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn kernel(m: &Mollifier) -> KernelV {
    KernelV::build(m, 256).unwrap()
}

fn c1_covariance() -> Outcome {
    let (t, dt, replicas) = (2.0, 1.0 / 32.0, 2000u64);
    let m = Mollifier::new(1).unwrap();
    let k = kernel(&m);
    let spec = NoiseSpec::new(1).with_dt(dt);
    let starts = [0.0, 0.0, 0.25, 0.5, 1.0];
    let pairs: Vec<(PathSet, PathSet)> = starts
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let a = PathSet::simulate(1, t, dt, 1, &[0.0], derive_seed(SEED, "c1-a", j as u64)).unwrap();
            let b = PathSet::simulate(1, t, dt, 1, &[s], derive_seed(SEED, "c1-b", j as u64)).unwrap();
            (a, b)
        })
        .collect();
    let g = spec.geometry(&[0.0], &[1.0], t).unwrap();
    let h: Vec<Vec<(f64, f64)>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let noise = spec.realize(g.clone(), derive_seed(SEED, "c1-noise", r)).unwrap();
            pairs
                .iter()
                .map(|(a, b)| {
                    (
                        field_energy(a.path(0), dt, &noise, &m, t).unwrap(),
                        field_energy(b.path(0), dt, &noise, &m, t).unwrap(),
                    )
                })
                .collect()
        })
        .collect();
    let bound = t * k.v0();
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut dominated = true;
    for (j, (a, b)) in pairs.iter().enumerate() {
        let x: Vec<f64> = h.iter().map(|r| r[j].0).collect();
        let y: Vec<f64> = h.iter().map(|r| r[j].1).collect();
        let oracle = field_covariance(a.path(0), b.path(0), dt, &k, t).unwrap();
        let z = (stats::covariance(&x, &y) - oracle) / stats::covariance_std_err(&x, &y);
        worst = worst.max(z.abs());
        pass &= z.abs() <= C1_Z;
        dominated &= oracle <= bound;
    }
    outcome(
        pass && dominated,
        format!("max |z| = {worst:.2} (≤ {C1_Z}) over 5 pairs × {replicas} replicas; domination by T·V(0) = {bound:.4}: {dominated}"),
    )
}

fn c2_mean_partition() -> Outcome {
    let (beta, t, n, replicas) = (0.5, 2.0, 64, 500);
    let m = Mollifier::new(1).unwrap();
    let p = FreeEnergyParams::new(1, t, replicas, n, derive_seed(SEED, "c2", 0));
    let z: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let (noise, paths) = p.replica(&m, r).unwrap();
            WeightedEnsemble::weigh(paths, &noise, &m, beta).unwrap().partition_function().z_hat
        })
        .collect();
    let target = (0.5 * beta * beta * t * m.l2_norm_sq()).exp();
    let zscore = (stats::mean(&z) - target) / stats::std_err(&z);
    outcome(
        zscore.abs() <= C2_Z,
        format!("mean Ẑ = {:.5} vs exp(β²TV(0)/2) = {target:.5}, z = {zscore:.2} (≤ {C2_Z})", stats::mean(&z)),
    )
}

fn c3_ito() -> Outcome {
    let m = Mollifier::new(1).unwrap();
    let p = FreeEnergyParams::new(1, 2.0, 400, 128, derive_seed(SEED, "c3", 0));
    let rep = ito_decomposition_check(0.5, &[1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0], &p, &m).unwrap();
    let rms: Vec<String> = rep.rungs.iter().map(|r| format!("{:.5}", r.rms)).collect();
    outcome(
        rep.residuals_decrease() && rep.relative_residual <= C3_RELATIVE,
        format!(
            "RMS residual along dt = 1/64, 1/128, 1/256: {}; relative {:.2}% (≤ {}%)",
            rms.join(" > "),
            100.0 * rep.relative_residual,
            100.0 * C3_RELATIVE
        ),
    )
}

fn c4_quadratic_variation() -> Outcome {
    let m = Mollifier::new(1).unwrap();
    let k = kernel(&m);
    let beta = 1.0;
    let p = FreeEnergyParams::new(1, 2.0, 100, 64, derive_seed(SEED, "c4", 0));
    let single = FreeEnergyParams::new(1, 2.0, 100, 1, derive_seed(SEED, "c4-single", 0));
    let res: Vec<(bool, f64)> = (0..100)
        .into_par_iter()
        .map(|r| {
            let (noise, paths) = p.replica(&m, r).unwrap();
            let held = qv_bound_check(&ito_ledger(&paths, &noise, &m, beta).unwrap(), &k).holds;
            let (noise, paths) = single.replica(&m, r).unwrap();
            let q = qv_bound_check(&ito_ledger(&paths, &noise, &m, beta).unwrap(), &k);
            (held, (q.qv - q.bound).abs())
        })
        .collect();
    let held = res.iter().filter(|r| r.0).count();
    let worst = res.iter().map(|r| r.1).fold(0.0, f64::max);
    outcome(
        held == 100 && worst <= C4_EQUALITY,
        format!("bound held on {held}/100 runs; n = 1 max |⟨M⟩_T - Tβ²V(0)| = {worst:.2e} (≤ {C4_EQUALITY:e})"),
    )
}

/// Clustered random configuration with up to three components.
fn random_config(rng: &mut ChaCha8Rng, dim: usize) -> SubProbConfig {
    let k = rng.random_range(0..=3usize);
    let budget: f64 = rng.random_range(0.0..=1.0);
    let mut shares: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = shares.iter().sum();
    shares.iter_mut().for_each(|x| *x *= budget / s.max(1e-300));
    let comps: Vec<WeightedCloud> = shares
        .iter()
        .map(|&mass| {
            let atoms = rng.random_range(1..=5usize);
            let spread = rng.random_range(0.0..2.5);
            let w: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
            let ws: f64 = w.iter().sum();
            let pts = (0..atoms * dim).map(|_| rng.random_range(-spread..=spread)).collect();
            WeightedCloud::new(dim, pts, w.iter().map(|x| x * mass / ws).collect()).unwrap()
        })
        .collect();
    let used: f64 = comps.iter().map(|c| c.mass()).sum();
    SubProbConfig::new(dim, comps, (1.0 - used).max(0.0)).unwrap()
}

fn brute_force_w1(cost: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                if a != b && b != c && a != c {
                    best = best.min(cost[0][a] + cost[1][b] + cost[2][c]);
                }
            }
        }
    }
    best / 3.0
}

fn c5_metric() -> Outcome {
    let fam = TestFunctionFamily::default();
    let rank = 24;
    let per_pair: Vec<(f64, f64, f64, f64)> = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(SEED, "c5", i));
            let dim = 1 + (i % 2) as usize;
            let (a, b, c) = (random_config(&mut rng, dim), random_config(&mut rng, dim), random_config(&mut rng, dim));
            let d = |x: &SubProbConfig, y: &SubProbConfig| metric_d(x, y, &fam, rank).unwrap().value;
            let ab = d(&a, &b);
            let shifts: Vec<Vec<f64>> = a
                .components()
                .iter()
                .map(|_| (0..dim).map(|_| rng.random_range(-40.0..40.0)).collect())
                .collect();
            (
                (ab - d(&b, &a)).abs(),
                ab - d(&a, &c) - d(&c, &b),
                d(&a, &a),
                d(&a, &a.shifted(&shifts)),
            )
        })
        .collect();
    let sym = per_pair.iter().map(|x| x.0).fold(0.0, f64::max);
    let tri = per_pair.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let id = per_pair.iter().map(|x| x.2).fold(0.0, f64::max);
    let shift = per_pair.iter().map(|x| x.3).fold(0.0, f64::max);
    let w_gap = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(SEED, "c5-w", i));
            let mut draw = || ConfigDistribution::new((0..3).map(|_| random_config(&mut rng, 1)).collect()).unwrap();
            let (x, y) = (draw(), draw());
            let cost: Vec<Vec<f64>> = x
                .samples()
                .iter()
                .map(|p| y.samples().iter().map(|q| metric_d(p, q, &fam, rank).unwrap().value).collect())
                .collect();
            (wasserstein(&x, &y, &fam, rank).unwrap().value - brute_force_w1(&cost)).abs()
        })
        .reduce(|| 0.0, f64::max);
    outcome(
        sym <= C5_EXACT && tri <= C5_EXACT && id <= C5_EXACT && shift <= C5_EXACT && w_gap <= C5_WASSERSTEIN,
        format!(
            "500 pairs: symmetry {sym:.1e}, triangle excess {tri:.1e}, identity {id:.1e}, shift {shift:.1e}; W1 vs brute force {w_gap:.1e}"
        ),
    )
}

fn c6_functionals() -> Outcome {
    let beta = 1.0;
    let mut ok = true;
    let mut notes = Vec::new();
    for dim in [1usize, 2] {
        let m = Mollifier::new(dim).unwrap();
        let k = kernel(&m);
        let top = 0.5 * beta * beta * k.v0();
        let empty = phi_functional(&SubProbConfig::empty(dim), beta, &k);
        let point = phi_functional(&SubProbConfig::point_mass(dim, 1.0).unwrap(), beta, &k);
        ok &= empty == top && point == 0.0;
        let eps_grid: Vec<f64> = (1..20).map(|j| j as f64 * 0.05).collect();
        let bad: usize = (0..1000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(SEED, "c6", i + 1000 * dim as u64));
                let xi = random_config(&mut rng, dim);
                let f = phi_functional(&xi, beta, &k);
                let mut bad = usize::from(!(f >= -C6_EXACT && f <= top + C6_EXACT));
                let ps: Vec<f64> = eps_grid.iter().map(|&e| psi_eps(&xi, e).unwrap()).collect();
                bad += usize::from(ps.windows(2).any(|w| w[1] > w[0] + C6_EXACT));
                bad += usize::from(ps.iter().any(|&p| p > psi(&xi) + C6_EXACT));
                bad
            })
            .sum();
        ok &= bad == 0;
        notes.push(format!("d={dim}: Φ(∅) = {empty:.6} = β²V(0)/2, Φ(δ) = {point}, violations {bad}/1000"));
    }
    outcome(ok, notes.join("; "))
}

fn c7_contraction() -> Outcome {
    let (beta, t, per_atom, replicas) = (1.0, 1.0, 64, 200u64);
    let m = Mollifier::new(1).unwrap();
    let half = SubProbConfig::point_mass(1, 0.5).unwrap();
    let run = |xi: &SubProbConfig, tag: &str, reps: u64| -> Vec<f64> {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let env = Environment::new(1, derive_seed(SEED, tag, r));
                psi(&evolve_config(xi, &env, &m, beta, t, per_atom).unwrap().output)
            })
            .collect()
    };
    let after = run(&half, "c7", replicas);
    let (mu, se) = (stats::mean(&after), stats::std_err(&after));
    let margin = (0.5 - mu) / se;
    let zero = run(&SubProbConfig::empty(1), "c7-zero", 20);
    let one = run(&SubProbConfig::point_mass(1, 1.0).unwrap(), "c7-one", 20);
    let absorbed = zero.iter().all(|&p| p.abs() <= C7_ABSORPTION) && one.iter().all(|&p| (p - 1.0).abs() <= C7_ABSORPTION);
    outcome(
        margin >= C7_MARGIN_SE && absorbed,
        format!("mean Ψ(ξ^(t)) = {mu:.4} ± {se:.4}, below 0.5 by {margin:.1} se (≥ {C7_MARGIN_SE}); absorption at 0 and 1: {absorbed}"),
    )
}

fn c8_markov() -> Outcome {
    let m = Mollifier::new(1).unwrap();
    let rep = markov_consistency(&MarkovParams::new(1, 0.5, 1.0, 1.0, 200, derive_seed(SEED, "c8", 0)), &m).unwrap();
    let p: Vec<String> = rep.p_values().iter().map(|p| format!("{p:.3}")).collect();
    outcome(
        rep.min_p_value() > C8_MIN_P,
        format!("KS p-values over the panel: [{}], min > {C8_MIN_P}", p.join(", ")),
    )
}

fn c9_lyapunov() -> Outcome {
    let m = Mollifier::new(1).unwrap();
    let v0 = m.l2_norm_sq();
    let betas = [0.0, 0.25, 0.5, 1.0, 2.0];
    let p = FreeEnergyParams::new(1, 8.0, 16, 256, derive_seed(SEED, "c9", 0));
    let scan = lyapunov_scan(&betas, &p, &m).unwrap();
    let zero = scan[0].lambda_hat == 0.0;
    let monotone = scan.windows(2).all(|w| {
        let se = (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt();
        w[1].lambda_hat >= w[0].lambda_hat - C9_SE * se
    });
    let kahane = scan
        .iter()
        .all(|e| e.lambda_hat <= 0.5 * e.beta * e.beta * v0 + C9_SE * e.std_err);
    let flagged: Vec<&_> = scan.iter().filter(|e| strong_disorder_flag(e)).collect();
    let decays = flagged.iter().all(|e| e.decay.decreasing);
    let table: Vec<String> = scan
        .iter()
        .map(|e| format!("Λ̂({}) = {:.4}±{:.4}", e.beta, e.lambda_hat + 0.0, e.std_err))
        .collect();
    outcome(
        zero && monotone && kahane && decays,
        format!(
            "{}; Λ̂(0)=0: {zero}, nondecreasing: {monotone}, Kahane: {kahane}, decay where flagged ({}): {decays}",
            table.join(", "),
            flagged.len()
        ),
    )
}

fn eps_schedule(t: f64) -> f64 {
    0.5 * t.powf(-0.25)
}

/// `(1/T) ∫₀^T P(m_t(X) > 2 ε_t) dt` for `X ~ N(0, t)`, `m_t(x) = P(|X - x| < 1)`, by
/// a Riemann sum on the snapshot grid. `m_t` is even and decreasing in `|x|`,
/// so the event is `|X| < x*` with `m_t(x*) = 2 ε_t`.
fn free_cesaro_oracle(horizon: f64, dt: f64) -> f64 {
    let n = (horizon / dt).round() as usize;
    let mut acc = 0.0;
    for k in 1..=n {
        let t = k as f64 * dt;
        let s = t.sqrt();
        let mass = |x: f64| stats::normal_cdf((x + 1.0) / s) - stats::normal_cdf((x - 1.0) / s);
        let thr = 2.0 * eps_schedule(t);
        let p = if mass(0.0) <= thr {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, 10.0 * s + 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mass(mid) > thr {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            2.0 * stats::normal_cdf(lo / s) - 1.0
        };
        acc += p * dt;
    }
    acc / horizon
}

fn c10_localization() -> Outcome {
    let (t, n, replicas, stride) = (30.0, 1024, 20, 2);
    let m = Mollifier::new(1).unwrap();
    let p = FreeEnergyParams::new(1, t, replicas, n, derive_seed(SEED, "c10", 0));
    let betas = [0.0, 0.25, 2.0];
    let stats_by_replica: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let (noise, paths) = p.replica(&m, r).unwrap();
            betas
                .iter()
                .map(|&b| {
                    let ens = WeightedEnsemble::weigh(paths.clone(), &noise, &m, b).unwrap();
                    localization_statistic(&ens.endpoint_run(stride).unwrap(), eps_schedule).unwrap().cesaro
                })
                .collect()
        })
        .collect();
    let col = |j: usize| stats_by_replica.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let (free, low, high) = (col(0), col(1), col(2));
    let se = (stats::std_err(&low).powi(2) + stats::std_err(&high).powi(2)).sqrt();
    let excess = (stats::mean(&high) - stats::mean(&low)) / se;
    let oracle = free_cesaro_oracle(t, stride as f64 * p.spec.dt);
    let free_se = stats::std_err(&free);
    let free_gap = (stats::mean(&free) - oracle).abs();
    // Within MC error: z below the bound, or an exact match when the statistic has no spread.
    let free_ok = if free_se > 0.0 { free_gap / free_se <= C10_ORACLE_Z } else { free_gap <= 1e-12 };
    outcome(
        excess >= C10_SE && free_ok,
        format!(
            "Cesàro β=2: {:.4}, β=0.25: {:.4}, excess {excess:.1} combined se (≥ {C10_SE}); β=0: {:.4} vs free oracle {oracle:.4}",
            stats::mean(&high),
            stats::mean(&low),
            stats::mean(&free)
        ),
    )
}

fn c11_disintegration() -> Outcome {
    let times = [4.0, 16.0, 64.0];
    let mut ok = true;
    let mut notes = Vec::new();
    for (dim, n) in [(1usize, 10_000usize), (2, 40_000)] {
        let m = Mollifier::new(dim).unwrap();
        let origin = vec![0.0; dim];
        let conc: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let spec = NoiseSpec::new(dim).with_dt(t);
                let g = spec.geometry(&origin, &origin, t).unwrap();
                let noise = spec.realize(g, derive_seed(SEED, "c11-noise", j as u64)).unwrap();
                let paths = PathSet::simulate(n, t, t, dim, &origin, derive_seed(SEED, "c11-paths", (dim * 10 + j) as u64)).unwrap();
                let ens = WeightedEnsemble::weigh(paths, &noise, &m, 0.0).unwrap();
                concentration_function(&ens.endpoint_measure(t).unwrap().cloud, 1.0).unwrap()
            })
            .collect();
        let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = conc.iter().map(|c| c.ln()).collect();
        let slope = stats::ols(&x, &y).slope;
        let target = -(dim as f64) / 2.0;
        ok &= (slope - target).abs() <= C11_SLOPE;
        notes.push(format!("d={dim}: slope {slope:.3} vs {target} (±{C11_SLOPE})"));
    }
    outcome(ok, notes.join("; "))
}

fn c12_she() -> Outcome {
    // Unit-scale horizon t/ε² = 2.
    let mut p = SheParams::new(3, 0.5, 0.25, 0.5, 256);
    p.dt = 1.0 / 16.0;
    p.spread = 6.0;
    let rep = scaling_check(&p, 200, derive_seed(SEED, "c12", 0), ScalingMode::Independent).unwrap();
    outcome(
        rep.z_mean.abs() <= C12_Z && rep.z_var.abs() <= C12_Z,
        format!(
            "d=3, ε=1/2, β=0.25: mean u {:.4} vs scrZ {:.4} (z {:.2}); var {:.2e} vs {:.2e} (z {:.2}); bound {C12_Z}",
            rep.mean_u, rep.mean_z, rep.z_mean, rep.var_u, rep.var_z, rep.z_var
        ),
    )
}

fn c13_occupation() -> Outcome {
    let (beta, t, n, runs) = (1.0, 2.0, 512, 20);
    let m = Mollifier::new(1).unwrap();
    let k = kernel(&m);
    let v0 = k.v0();
    let mut p = FreeEnergyParams::new(1, t, runs, n, derive_seed(SEED, "c13", 0));
    // Finest rung of the Itô ladder.
    p.spec = p.spec.clone().with_dt(1.0 / 256.0);
    let disc: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let (noise, paths) = p.replica(&m, r).unwrap();
            let ledger = ito_ledger(&paths, &noise, &m, beta).unwrap();
            let ens = WeightedEnsemble::weigh(paths, &noise, &m, beta).unwrap();
            let steps = ens.paths().steps();
            let dt = ens.paths().dt();
            // Φ from the raw weights and positions: β²/2 (V(0) - Σ w_a w_b V(x_a - x_b)).
            let mut int_phi = 0.0;
            for s in 0..steps {
                let w = stats::normalized_weights(&ens.log_weights_at(s));
                let x = ens.paths().positions_at(s);
                let mut overlap = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        overlap += w[a] * w[b] * k.eval_radius((x[a] - x[b]).abs());
                    }
                }
                int_phi += 0.5 * beta * beta * (v0 - overlap) * dt;
            }
            let gap = (ens.partition_function().log_z_hat - int_phi) / t;
            (gap - ledger.terminal_martingale() / t).abs()
        })
        .collect();
    let scale = 0.5 * beta * beta * v0;
    let worst = disc.iter().copied().fold(0.0, f64::max);
    let rms = (disc.iter().map(|d| d * d).sum::<f64>() / disc.len() as f64).sqrt();
    outcome(
        worst / scale <= C13_RELATIVE && rms / scale <= C13_RMS,
        format!(
            "|(log Z_T - ∫Φ)/T - M_T/T| over {runs} runs: max {:.2}% of β²V(0)/2 (≤ {}%), RMS {:.2}% (≤ {}%)",
            100.0 * worst / scale,
            100.0 * C13_RELATIVE,
            100.0 * rms / scale,
            100.0 * C13_RMS
        ),
    )
}

fn main() {
    let criteria: [(usize, &str, fn() -> Outcome); 13] = [
        (1, "covariance identity", c1_covariance),
        (2, "mean partition function", c2_mean_partition),
        (3, "Itô decomposition", c3_ito),
        (4, "quadratic-variation bound", c4_quadratic_variation),
        (5, "metric suite", c5_metric),
        (6, "functional suite", c6_functionals),
        (7, "mass-transport contraction", c7_contraction),
        (8, "Markov consistency", c8_markov),
        (9, "Lyapunov properties", c9_lyapunov),
        (10, "localization trend", c10_localization),
        (11, "free-case disintegration", c11_disintegration),
        (12, "SHE scaling", c12_she),
        (13, "occupation consistency", c13_occupation),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {verdict} {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
