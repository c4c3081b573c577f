use super::estimate::{FreeEnergyEstimate, FreeEnergyParams};
use super::ledger::{ito_ledger, ItoLedger};
use crate::error::Result;
use crate::noise::Mollifier;
use crate::paths::renormalization;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// One `(β, replica)` line of the free-energy table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyRow {
    pub beta: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub replica: usize,
    pub log_z: f64,
    pub log_scr_z: f64,
    pub m_t: f64,
    pub int_phi: f64,
    pub residual: f64,
    pub qv: f64,
    pub ess: f64,
}

impl FreeEnergyRow {
    pub fn from_ledger(l: &ItoLedger, replica: usize) -> Self {
        let t = l.horizon();
        Self {
            beta: l.beta,
            horizon: t,
            replica,
            log_z: l.terminal_log_z(),
            log_scr_z: l.terminal_log_z() - renormalization(l.beta, t, l.v0),
            m_t: l.terminal_martingale(),
            int_phi: l.terminal_int_phi(),
            residual: l.residual,
            qv: l.terminal_qv(),
            ess: l.terminal_ess,
        }
    }
}

/// Full ledgers for every `(β, replica)` pair, replicas shared across β.
pub fn free_energy_rows(betas: &[f64], p: &FreeEnergyParams, mollifier: &Mollifier) -> Result<Vec<FreeEnergyRow>> {
    let per: Vec<Vec<FreeEnergyRow>> = (0..p.replicas)
        .into_par_iter()
        .map(|r| {
            let (noise, paths) = p.replica(mollifier, r)?;
            betas
                .iter()
                .map(|&b| {
                    let l = ito_ledger(&paths, &noise, mollifier, b)?;
                    Ok(FreeEnergyRow::from_ledger(&l, r))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<FreeEnergyRow> = per.into_iter().flatten().collect();
    rows.sort_by(|a, b| a.beta.total_cmp(&b.beta).then(a.replica.cmp(&b.replica)));
    Ok(rows)
}

pub fn write_rows<W: Write>(w: W, rows: &[FreeEnergyRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(r: R) -> Result<Vec<FreeEnergyRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// JSON summary of a β scan with standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergySummary {
    pub schema_version: u32,
    pub entries: Vec<SummaryEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub beta: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub replicas: usize,
    pub lambda_hat: f64,
    pub std_err: f64,
    pub ci95: [f64; 2],
    pub min_ess: f64,
    pub reliable: bool,
    pub strong_disorder: bool,
}

impl FreeEnergySummary {
    pub fn from_estimates(es: &[FreeEnergyEstimate]) -> Self {
        Self {
            schema_version: 1,
            entries: es
                .iter()
                .map(|e| SummaryEntry {
                    beta: e.beta,
                    horizon: e.horizon,
                    replicas: e.replicas,
                    lambda_hat: e.lambda_hat,
                    std_err: e.std_err,
                    ci95: [e.lambda_hat - 1.96 * e.std_err, e.lambda_hat + 1.96 * e.std_err],
                    min_ess: e.min_ess,
                    reliable: e.reliable,
                    strong_disorder: super::estimate::strong_disorder_flag(e),
                })
                .collect(),
        }
    }
}
