use crate::error::{CliError, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};
use wgmc::compact::DEFAULT_RANK;
use wgmc::noise::NoiseSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Covariance,
    FreeEnergy,
    Ito,
    Localization,
    Dynamics,
    SheScaling,
    MetricSuite,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Covariance => "covariance",
            Kind::FreeEnergy => "free-energy",
            Kind::Ito => "ito",
            Kind::Localization => "localization",
            Kind::Dynamics => "dynamics",
            Kind::SheScaling => "she-scaling",
            Kind::MetricSuite => "metric-suite",
        }
    }
}

/// A single β or a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    One(f64),
    Grid(Vec<f64>),
}

impl BetaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            BetaSpec::One(b) => vec![*b],
            BetaSpec::Grid(g) => g.clone(),
        }
    }
}

/// `ε_t = eps0 · t^{-a}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsSchedule {
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_eps_a")]
    pub a: f64,
}

fn default_eps0() -> f64 {
    0.5
}

fn default_eps_a() -> f64 {
    0.25
}

impl Default for EpsSchedule {
    fn default() -> Self {
        Self {
            eps0: default_eps0(),
            a: default_eps_a(),
        }
    }
}

impl EpsSchedule {
    pub fn at(&self, t: f64) -> f64 {
        self.eps0 * t.powf(-self.a)
    }
}

/// The document as written; optional fields are filled in by [`ExperimentConfig::resolve`].
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Kind,
    #[serde(alias = "d")]
    dim: usize,
    beta: BetaSpec,
    #[serde(rename = "T")]
    horizon: f64,
    dt: Option<f64>,
    dx: Option<f64>,
    #[serde(rename = "box")]
    box_half_width: Option<f64>,
    n_paths: usize,
    replicas: usize,
    seed: Option<u64>,
    #[serde(default)]
    epsilon: EpsSchedule,
    rank: Option<usize>,
    out: Option<PathBuf>,
    ladder: Option<Vec<f64>>,
    stride: Option<usize>,
    she_eps: Option<f64>,
    she_mode: Option<wgmc::paths::ScalingMode>,
    pairs: Option<usize>,
}

/// Fully resolved experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub dim: usize,
    pub beta: BetaSpec,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    pub dx: f64,
    /// Half-width of the noise box around the origin.
    #[serde(rename = "box")]
    pub box_half_width: f64,
    pub n_paths: usize,
    pub replicas: usize,
    pub seed: u64,
    pub epsilon: EpsSchedule,
    pub rank: usize,
    pub out: PathBuf,
    /// Time steps of the residual ladder, coarse to fine.
    pub ladder: Vec<f64>,
    /// Path steps between recorded snapshots.
    pub stride: usize,
    pub she_eps: f64,
    pub she_mode: wgmc::paths::ScalingMode,
    /// Path pairs (covariance) or configuration pairs (metric suite).
    pub pairs: usize,
}

/// Values supplied on the command line; they replace file values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub const NOISE_PAD: f64 = 1.0;

impl ExperimentConfig {
    /// Parses TOML or JSON (chosen by extension, falling back to content sniffing).
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let json_ext = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let value = parse_document(&text, json_ext || text.trim_start().starts_with('{'))?;
        Self::from_value(value, overrides)
    }

    pub fn from_value(mut value: Value, overrides: &Overrides) -> Result<Self> {
        if let Value::Object(map) = &mut value {
            if let Some(s) = overrides.seed {
                map.insert("seed".into(), Value::from(s));
            }
            if let Some(o) = &overrides.out {
                map.insert("out".into(), Value::from(o.to_string_lossy().into_owned()));
            }
        }
        let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| CliError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        Self::resolve(raw)
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let schema = |path: &str, message: String| CliError::Schema {
            path: path.into(),
            message,
        };
        let seed = raw
            .seed
            .ok_or_else(|| schema("seed", "a seed is required; there is no wall-clock seeding".into()))?;
        if !(1..=3).contains(&raw.dim) {
            return Err(schema("dim", format!("dimension must be 1, 2 or 3, got {}", raw.dim)));
        }
        let defaults = NoiseSpec::new(raw.dim);
        let horizon = raw.horizon;
        let cfg = Self {
            kind: raw.kind,
            dim: raw.dim,
            beta: raw.beta,
            horizon,
            dt: raw.dt.unwrap_or(defaults.dt),
            dx: raw.dx.unwrap_or(defaults.dx),
            box_half_width: raw
                .box_half_width
                .unwrap_or_else(|| defaults.spread * horizon.max(0.0).sqrt() + NOISE_PAD),
            n_paths: raw.n_paths,
            replicas: raw.replicas,
            seed,
            epsilon: raw.epsilon,
            rank: raw.rank.unwrap_or(DEFAULT_RANK),
            out: raw.out.unwrap_or_else(|| PathBuf::from("wgmc-out")),
            ladder: raw.ladder.unwrap_or_else(|| vec![1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0]),
            stride: raw.stride.unwrap_or(8),
            she_eps: raw.she_eps.unwrap_or(0.5),
            she_mode: raw.she_mode.unwrap_or(wgmc::paths::ScalingMode::Independent),
            pairs: raw.pairs.unwrap_or(match raw.kind {
                Kind::MetricSuite => 500,
                _ => 5,
            }),
        };
        cfg.check_positive()?;
        Ok(cfg)
    }

    fn check_positive(&self) -> Result<()> {
        let schema = |path: String, message: &str| {
            Err(CliError::Schema {
                path,
                message: message.into(),
            })
        };
        let positive = [
            ("T", self.horizon),
            ("dt", self.dt),
            ("dx", self.dx),
            ("box", self.box_half_width),
            ("epsilon.eps0", self.epsilon.eps0),
            ("epsilon.a", self.epsilon.a),
            ("she_eps", self.she_eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return schema(name.into(), "must be positive and finite");
            }
        }
        let counts = [
            ("n_paths", self.n_paths),
            ("replicas", self.replicas),
            ("rank", self.rank),
            ("stride", self.stride),
            ("pairs", self.pairs),
        ];
        for (name, v) in counts {
            if v == 0 {
                return schema(name.into(), "must be positive");
            }
        }
        let betas = self.beta.values();
        if betas.is_empty() {
            return schema("beta".into(), "the grid is empty");
        }
        for (i, b) in betas.iter().enumerate() {
            if !(*b >= 0.0 && b.is_finite()) {
                let path = match self.beta {
                    BetaSpec::One(_) => "beta".to_string(),
                    BetaSpec::Grid(_) => format!("beta[{i}]"),
                };
                return schema(path, "must be nonnegative and finite");
            }
        }
        for (i, h) in self.ladder.iter().enumerate() {
            if !(*h > 0.0 && h.is_finite()) {
                return schema(format!("ladder[{i}]"), "must be positive and finite");
            }
        }
        Ok(())
    }

    pub fn betas(&self) -> Vec<f64> {
        self.beta.values()
    }

    /// Noise discretization with the margin set by the configured box.
    pub fn noise_spec(&self) -> NoiseSpec {
        let mut s = NoiseSpec::new(self.dim).with_dt(self.dt);
        s.dx = self.dx;
        s.pad = NOISE_PAD;
        s.spread = ((self.box_half_width - NOISE_PAD) / self.horizon.sqrt()).max(0.0);
        s
    }

    /// Canonical JSON: object keys sorted at every level, no whitespace.
    pub fn canonical_json(&self) -> String {
        canonical(&serde_json::to_value(self).expect("config serializes"))
    }

    /// SHA-256 of the canonical JSON without `out`, so relocating a run keeps its hash.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(m) = &mut v {
            m.remove("out");
        }
        hex::encode(Sha256::digest(canonical(&v).as_bytes()))
    }
}

fn parse_document(text: &str, json: bool) -> Result<Value> {
    if json {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            format: "json",
            message: e.to_string(),
        })
    } else {
        let v: toml::Value = toml::from_str(text).map_err(|e| CliError::Parse {
            format: "toml",
            message: e.to_string(),
        })?;
        serde_json::to_value(v).map_err(|e| CliError::Parse {
            format: "toml",
            message: e.to_string(),
        })
    }
}

pub fn canonical(v: &Value) -> String {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .iter()
                .map(|k| format!("{}:{}", Value::from(k.as_str()), canonical(&m[k.as_str()])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(a) => format!("[{}]", a.iter().map(canonical).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}
