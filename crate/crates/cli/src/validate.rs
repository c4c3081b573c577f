use crate::config::{ExperimentConfig, Kind};
use serde::{Deserialize, Serialize};
use wgmc::noise::{DEFAULT_MEMORY_BUDGET, DENSE_THRESHOLD};

/// Radius of the mollifier support; the box must clear the paths by this much.
const SUPPORT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub field: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub diagnostics: Vec<Diagnostic>,
    pub memory_estimate_bytes: u64,
}

impl Validation {
    pub fn is_clean(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

fn diag(code: &str, field: &str, message: String, bound: Option<f64>) -> Diagnostic {
    Diagnostic {
        code: code.into(),
        field: field.into(),
        message,
        bound,
    }
}

fn divides(step: f64, horizon: f64) -> bool {
    let q = horizon / step;
    q >= 1.0 - 1e-9 && (q - q.round()).abs() <= 1e-9 * q.max(1.0)
}

/// Peak bytes per worker: paths, their field values, and the dense noise grid when
/// it fits under the dense threshold.
pub fn memory_estimate(cfg: &ExperimentConfig) -> u64 {
    let dt = match cfg.kind {
        Kind::Ito => cfg.ladder.iter().copied().fold(cfg.dt, f64::min),
        _ => cfg.dt,
    };
    let steps = (cfg.horizon / dt).round().max(1.0) as u64;
    let per_axis = (2.0 * cfg.box_half_width / cfg.dx).ceil().max(1.0) as u64;
    let grid = per_axis.saturating_pow(cfg.dim as u32).saturating_mul(steps).saturating_mul(8);
    let grid = if grid <= DENSE_THRESHOLD { grid } else { 0 };
    let paths = (cfg.n_paths as u64).saturating_mul(steps + 1).saturating_mul(8 * (cfg.dim as u64 + 1));
    grid.saturating_add(paths)
}

/// Pure diagnostics; never mutates anything.
pub fn validate(cfg: &ExperimentConfig, workers: usize) -> Validation {
    let mut out = Vec::new();
    let t = cfg.horizon;
    let needed = 6.0 * t.sqrt() + SUPPORT;
    if cfg.box_half_width < needed {
        out.push(diag(
            "box-too-small",
            "box",
            format!(
                "box half-width {} is below the bound 6*sqrt(T) + 1/2 = {needed:.6}",
                cfg.box_half_width
            ),
            Some(needed),
        ));
    }
    if cfg.dt > t {
        out.push(diag("dt-exceeds-horizon", "dt", format!("dt = {} exceeds T = {t}", cfg.dt), Some(t)));
    } else if !divides(cfg.dt, t) {
        out.push(diag("dt-not-dividing", "dt", format!("dt = {} does not divide T = {t}", cfg.dt), None));
    }
    match cfg.kind {
        Kind::Ito => {
            if cfg.ladder.len() < 2 {
                out.push(diag("ladder-too-short", "ladder", "the ladder needs at least two rungs".into(), None));
            } else if let Err(e) = wgmc::ito::ladder_factors(&cfg.ladder) {
                out.push(diag("ladder-invalid", "ladder", e.to_string(), None));
            }
            for (i, h) in cfg.ladder.iter().enumerate() {
                if !divides(*h, t) {
                    out.push(diag(
                        "dt-not-dividing",
                        &format!("ladder[{i}]"),
                        format!("rung {h} does not divide T = {t}"),
                        None,
                    ));
                }
            }
        }
        Kind::Localization | Kind::Dynamics => {
            let snapshots = (t / cfg.dt).round() as usize / cfg.stride;
            if snapshots < 2 {
                out.push(diag(
                    "too-few-snapshots",
                    "stride",
                    format!("stride {} leaves {snapshots} snapshots; at least 2 are needed", cfg.stride),
                    Some(2.0),
                ));
            }
        }
        Kind::SheScaling => {
            if cfg.dim < 3 {
                out.push(diag(
                    "she-dimension",
                    "dim",
                    "the scaling relation fixes the coupling only for d >= 3".into(),
                    Some(3.0),
                ));
            }
        }
        _ => {}
    }
    let needs_spread = matches!(
        cfg.kind,
        Kind::FreeEnergy | Kind::Localization | Kind::SheScaling | Kind::Covariance | Kind::Ito
    );
    if needs_spread && cfg.replicas < 2 {
        out.push(diag(
            "too-few-replicas",
            "replicas",
            "standard errors need at least two replicas".into(),
            Some(2.0),
        ));
    }
    let mem = memory_estimate(cfg).saturating_mul(workers.max(1) as u64);
    if mem > DEFAULT_MEMORY_BUDGET {
        out.push(diag(
            "memory",
            "n_paths",
            format!("estimated {mem} bytes across {workers} workers exceeds the budget of {DEFAULT_MEMORY_BUDGET}"),
            Some(DEFAULT_MEMORY_BUDGET as f64),
        ));
    }
    Validation {
        diagnostics: out,
        memory_estimate_bytes: mem,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;
    use serde_json::json;

    fn cfg(v: serde_json::Value) -> ExperimentConfig {
        ExperimentConfig::from_value(v, &Overrides::default()).unwrap()
    }

    fn base() -> serde_json::Value {
        json!({"kind": "free-energy", "dim": 1, "beta": 1.0, "T": 4.0, "n_paths": 64, "replicas": 8, "seed": 1})
    }

    #[test]
    fn valid_config_is_clean() {
        let v = validate(&cfg(base()), 1);
        assert!(v.is_clean(), "{:?}", v.diagnostics);
        assert!(v.memory_estimate_bytes > 0);
    }

    #[test]
    fn small_box_names_the_bound() {
        let mut b = base();
        b["box"] = json!(5.0);
        let v = validate(&cfg(b), 1);
        assert_eq!(v.diagnostics.len(), 1);
        assert_eq!(v.diagnostics[0].code, "box-too-small");
        assert_eq!(v.diagnostics[0].bound, Some(12.5));
        assert!(v.diagnostics[0].message.contains("6*sqrt(T) + 1/2"));
    }

    #[test]
    fn non_dividing_step() {
        let mut b = base();
        b["dt"] = json!(0.3);
        let v = validate(&cfg(b), 1);
        assert_eq!(v.diagnostics.len(), 1);
        assert_eq!(v.diagnostics[0].code, "dt-not-dividing");
        let mut b = base();
        b["dt"] = json!(8.0);
        assert_eq!(validate(&cfg(b), 1).diagnostics[0].code, "dt-exceeds-horizon");
    }

    #[test]
    fn kind_specific_checks() {
        let mut b = base();
        b["kind"] = json!("ito");
        b["ladder"] = json!([0.125, 0.3]);
        let codes: Vec<String> = validate(&cfg(b), 1).diagnostics.into_iter().map(|d| d.code).collect();
        assert!(codes.contains(&"ladder-invalid".to_string()));
        assert!(codes.contains(&"dt-not-dividing".to_string()));
        let mut b = base();
        b["kind"] = json!("she-scaling");
        assert_eq!(validate(&cfg(b), 1).diagnostics[0].code, "she-dimension");
        let mut b = base();
        b["kind"] = json!("localization");
        b["stride"] = json!(100);
        assert_eq!(validate(&cfg(b), 1).diagnostics[0].code, "too-few-snapshots");
    }

    #[test]
    fn memory_budget() {
        let mut b = base();
        b["n_paths"] = json!(4_000_000);
        b["T"] = json!(64.0);
        let v = validate(&cfg(b), 4);
        assert!(v.diagnostics.iter().any(|d| d.code == "memory"));
    }
}
