use crate::config::Kind;
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::suites::{ConsistencyRow, CovarianceRow, DynamicsRow, LadderRow, LocalizationRow};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use wgmc::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: String,
    pub config_hash: String,
    pub sections: Vec<Section>,
}

fn section(title: &str, columns: &[&str], rows: Vec<Vec<Value>>) -> Section {
    Section {
        title: title.into(),
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
    }
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::Io {
        path: path.into(),
        message: e.to_string(),
    })?;
    rd.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Io {
            path: path.into(),
            message: e.to_string(),
        })
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io {
        path: path.into(),
        message: e.to_string(),
    })
}

/// Groups values by β, keeping β in ascending order.
fn by_beta<T>(rows: &[T], beta: impl Fn(&T) -> f64, value: impl Fn(&T) -> f64) -> Vec<(f64, Vec<f64>)> {
    let mut groups: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let b = beta(r);
        groups.entry(b.to_bits()).or_insert((b, Vec::new())).1.push(value(r));
    }
    let mut out: Vec<(f64, Vec<f64>)> = groups.into_values().collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Pure read of the artifacts listed in a manifest.
pub fn report(manifest_path: &Path) -> Result<Report> {
    let (m, dir) = RunManifest::load(manifest_path)?;
    if m.files.is_empty() {
        return Err(CliError::EmptyArtifacts);
    }
    for f in &m.files {
        let p = dir.join(&f.path);
        if !p.is_file() {
            return Err(CliError::MissingArtifact { path: p });
        }
    }
    let path = |name: &str| -> Result<PathBuf> {
        m.file(name).map(|f| dir.join(&f.path)).ok_or_else(|| CliError::MissingArtifact {
            path: dir.join(name),
        })
    };
    let sections = match m.config.kind {
        Kind::FreeEnergy => {
            let rows = wgmc::free_energy::read_rows(
                std::fs::File::open(path("free_energy.csv")?).map_err(|e| CliError::io(&dir, e))?,
            )?;
            let groups = by_beta(&rows, |r| r.beta, |r| -r.log_scr_z / r.horizon);
            let table = groups
                .iter()
                .map(|(b, v)| {
                    let (l, se) = (stats::mean(v), stats::std_err(v));
                    vec![json!(b), json!(v.len()), json!(l), json!(se), json!(l - 1.96 * se), json!(l + 1.96 * se)]
                })
                .collect();
            vec![section(
                "lyapunov exponent",
                &["beta", "replicas", "lambda_hat", "std_err", "ci95_lo", "ci95_hi"],
                table,
            )]
        }
        Kind::Ito => {
            let rows: Vec<LadderRow> = read_csv(&path("ito_ladder.csv")?)?;
            let table = rows
                .iter()
                .map(|r| vec![json!(r.beta), json!(r.dt), json!(r.rms), json!(r.std_err), json!(r.relative_rms)])
                .collect();
            vec![section(
                "residual ladder",
                &["beta", "dt", "rms_residual", "std_err", "relative"],
                table,
            )]
        }
        Kind::Localization => {
            let rows: Vec<LocalizationRow> = read_csv(&path("localization.csv")?)?;
            let groups = by_beta(&rows, |r| r.beta, |r| r.cesaro);
            let stats_of: Vec<(f64, f64, f64, usize)> = groups
                .iter()
                .map(|(b, v)| (*b, stats::mean(v), stats::std_err(v), v.len()))
                .collect();
            let table = stats_of
                .iter()
                .map(|(b, mu, se, n)| {
                    vec![json!(b), json!(n), json!(mu), json!(se), json!(mu - 1.96 * se), json!(mu + 1.96 * se)]
                })
                .collect();
            let trend = stats_of
                .windows(2)
                .map(|w| {
                    let diff = w[1].1 - w[0].1;
                    let se = (w[0].2 * w[0].2 + w[1].2 * w[1].2).sqrt();
                    vec![json!(w[0].0), json!(w[1].0), json!(diff), json!(if se > 0.0 { diff / se } else { 0.0 })]
                })
                .collect();
            vec![
                section(
                    "cesaro localization statistic",
                    &["beta", "replicas", "mean", "std_err", "ci95_lo", "ci95_hi"],
                    table,
                ),
                section("localization trend", &["beta_from", "beta_to", "difference", "z"], trend),
            ]
        }
        Kind::Covariance => {
            let rows: Vec<CovarianceRow> = read_csv(&path("covariance.csv")?)?;
            let table = rows
                .iter()
                .map(|r| {
                    vec![json!(r.pair), json!(r.oracle), json!(r.empirical), json!(r.std_err), json!(r.z), json!(r.dominated)]
                })
                .collect();
            vec![section(
                "hamiltonian covariance",
                &["pair", "oracle", "empirical", "std_err", "z", "dominated"],
                table,
            )]
        }
        Kind::Dynamics => {
            let traj: Vec<DynamicsRow> = read_csv(&path("dynamics.csv")?)?;
            let cons: Vec<ConsistencyRow> = read_csv(&path("dynamics_consistency.csv")?)?;
            let psi = by_beta(&traj, |r| r.beta, |r| r.psi);
            let phi = by_beta(&traj, |r| r.beta, |r| r.phi);
            let disc = by_beta(&cons, |r| r.beta, |r| r.discrepancy);
            let table = psi
                .iter()
                .zip(&phi)
                .zip(&disc)
                .map(|(((b, p), (_, f)), (_, d))| {
                    vec![
                        json!(b),
                        json!(stats::mean(p)),
                        json!(stats::std_err(p)),
                        json!(stats::mean(f)),
                        json!(d.iter().copied().fold(0.0, f64::max)),
                    ]
                })
                .collect();
            vec![section(
                "orbit averages",
                &["beta", "mean_psi", "psi_std_err", "mean_phi", "max_consistency_gap"],
                table,
            )]
        }
        Kind::SheScaling => json_section("she scaling", &read_json(&path("she_summary.json")?)?),
        Kind::MetricSuite => json_section("metric suite", &read_json(&path("metric_summary.json")?)?),
    };
    Ok(Report {
        kind: m.config.kind.name().into(),
        config_hash: m.config_hash.clone(),
        sections,
    })
}

/// One row per object (or a single row for a lone object), columns from its keys.
fn json_section(title: &str, v: &Value) -> Vec<Section> {
    let items: Vec<&serde_json::Map<String, Value>> = match v {
        Value::Array(a) => a.iter().filter_map(Value::as_object).collect(),
        Value::Object(o) => vec![o],
        _ => vec![],
    };
    let Some(first) = items.first() else {
        return vec![];
    };
    let columns: Vec<String> = first.keys().cloned().collect();
    let rows = items
        .iter()
        .map(|o| columns.iter().map(|c| o.get(c).cloned().unwrap_or(Value::Null)).collect())
        .collect();
    vec![Section {
        title: title.into(),
        columns,
        rows,
    }]
}

fn cell(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.6}"),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut out = format!("kind: {}\nconfig: {}\n", self.kind, self.config_hash);
        for s in &self.sections {
            let cells: Vec<Vec<String>> = s.rows.iter().map(|r| r.iter().map(cell).collect()).collect();
            let widths: Vec<usize> = (0..s.columns.len())
                .map(|j| {
                    cells
                        .iter()
                        .map(|r| r.get(j).map_or(0, String::len))
                        .chain([s.columns[j].len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let line = |r: &[String]| {
                r.iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:>w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            out.push_str(&format!("\n{}\n", s.title));
            out.push_str(&line(&s.columns));
            out.push('\n');
            for r in &cells {
                out.push_str(&line(r));
                out.push('\n');
            }
        }
        out
    }
}
