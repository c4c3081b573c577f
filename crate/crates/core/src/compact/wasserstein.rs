use super::assignment;
use super::config::ConfigDistribution;
use super::family::TestFunctionFamily;
use crate::error::{Error, Result};
use crate::stats::log_sum_exp;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest sample count solved by exact assignment.
pub const EXACT_LIMIT: usize = 256;
/// Largest cost matrix assembled.
pub const MAX_COST_ENTRIES: usize = 4_000_000;

const SINKHORN_MAX_ITER: usize = 20_000;
const SINKHORN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WassersteinValue {
    pub value: f64,
    /// Entropic regularization used, or `None` for the exact assignment.
    pub regularization: Option<f64>,
    pub truncation_bound: f64,
}

/// `D` cost matrix between the samples of two distributions.
pub fn cost_matrix(
    a: &ConfigDistribution,
    b: &ConfigDistribution,
    family: &TestFunctionFamily,
    rank: usize,
) -> Result<Vec<Vec<f64>>> {
    let entries = a.len().saturating_mul(b.len());
    if entries > MAX_COST_ENTRIES {
        return Err(Error::Capacity {
            what: "Wasserstein cost matrix entries".into(),
            required: entries as u64,
            limit: MAX_COST_ENTRIES as u64,
        });
    }
    let fa: Result<Vec<Vec<f64>>> = a.samples().par_iter().map(|x| family.features(x, rank)).collect();
    let fb: Result<Vec<Vec<f64>>> = b.samples().par_iter().map(|x| family.features(x, rank)).collect();
    let (fa, fb) = (fa?, fb?);
    Ok(fa
        .par_iter()
        .map(|x| fb.iter().map(|y| family.feature_distance(x, y)).collect())
        .collect())
}

/// Log-domain Sinkhorn with uniform marginals; returns `⟨P, C⟩`.
pub fn sinkhorn(cost: &[Vec<f64>], reg: f64) -> f64 {
    let (n, m) = (cost.len(), cost[0].len());
    let (la, lb) = (-(n as f64).ln(), -(m as f64).ln());
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut buf = vec![0.0; n.max(m)];
    for _ in 0..SINKHORN_MAX_ITER {
        for i in 0..n {
            for j in 0..m {
                buf[j] = (g[j] - cost[i][j]) / reg;
            }
            f[i] = reg * (la - log_sum_exp(&buf[..m]));
        }
        for j in 0..m {
            for i in 0..n {
                buf[i] = (f[i] - cost[i][j]) / reg;
            }
            g[j] = reg * (lb - log_sum_exp(&buf[..n]));
        }
        // Column marginals are exact after the g-update; check rows.
        let mut err: f64 = 0.0;
        for i in 0..n {
            let row: f64 = (0..m).map(|j| ((f[i] + g[j] - cost[i][j]) / reg).exp()).sum();
            err = err.max((row - 1.0 / n as f64).abs());
        }
        if err < SINKHORN_TOL {
            break;
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            total += ((f[i] + g[j] - cost[i][j]) / reg).exp() * cost[i][j];
        }
    }
    total
}

/// Wasserstein-1 distance over `(X̃, D)` between two empirical distributions.
pub fn wasserstein(
    a: &ConfigDistribution,
    b: &ConfigDistribution,
    family: &TestFunctionFamily,
    rank: usize,
) -> Result<WassersteinValue> {
    let cost = cost_matrix(a, b, family, rank)?;
    let tb = TestFunctionFamily::truncation_bound(rank);
    let (n, m) = (a.len(), b.len());
    if n == m && n <= EXACT_LIMIT {
        let p = assignment::solve(&cost);
        let s: f64 = p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        return Ok(WassersteinValue {
            value: s / n as f64,
            regularization: None,
            truncation_bound: tb,
        });
    }
    let mut all: Vec<f64> = cost.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    let median = all[all.len() / 2];
    let scale = if median > 0.0 {
        median
    } else {
        all.iter().sum::<f64>() / all.len() as f64
    };
    if scale == 0.0 {
        return Ok(WassersteinValue {
            value: 0.0,
            regularization: Some(0.0),
            truncation_bound: tb,
        });
    }
    let reg = 0.01 * scale;
    Ok(WassersteinValue {
        value: sinkhorn(&cost, reg),
        regularization: Some(reg),
        truncation_bound: tb,
    })
}
