use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DiscCheck,
    NormScan,
    SidonCheck,
    MeasureCheck,
    RelationCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::DiscCheck => "disc-check",
            Experiment::NormScan => "norm-scan",
            Experiment::SidonCheck => "sidon-check",
            Experiment::MeasureCheck => "measure-check",
            Experiment::RelationCheck => "relation-check",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fully resolved parameters of one run. Every field is present in the
/// output, so a report can be replayed from its own `config` object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Experiment,
    /// Rotation number: `a/b`, a decimal, `golden`, `sqrt2-1`, `(sqrt(N)-K)/M`.
    pub theta: String,
    /// Target of the embedding search and partner of the pair search.
    pub gamma: String,
    pub pair_gamma: String,
    /// Exponents as strings; `inf` is accepted.
    pub p: Vec<String>,
    pub degree: u64,
    pub grid: Option<usize>,
    pub seed: u64,
    pub restarts: usize,
    pub iterations: usize,
    pub ladder: usize,
    /// Scan length for searches; bit cap for the Sidon construction.
    pub budget: u64,
    pub digits: u32,
    pub samples: usize,
    pub pairs: Vec<[u64; 2]>,
    pub symbol: String,
    /// When positive, a 1-D symbol is periodized at this order before `⊗ 1`.
    pub periodize: u64,
    pub functions: Vec<String>,
    pub orders: Vec<u64>,
    pub horizon: usize,
    pub span_start: usize,
    pub span: usize,
    pub trials: usize,
    pub count: u64,
    pub period: u64,
    pub eps: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Config {
    pub fn defaults(experiment: Experiment) -> Config {
        let mut c = Config {
            experiment,
            theta: "golden".into(),
            gamma: "1/3".into(),
            pair_gamma: "golden".into(),
            p: vec!["4".into()],
            degree: 2,
            grid: None,
            seed: 0,
            restarts: 4,
            iterations: 120,
            ladder: 4,
            budget: 1_000_000,
            digits: 50,
            samples: 10_000,
            pairs: vec![[1, 4], [2, 8], [4, 32], [8, 128]],
            symbol: "pisier:7:3".into(),
            periodize: 0,
            functions: vec!["one".into(), "affine".into(), "inverse-sinc:160".into()],
            orders: vec![1, 2, 4, 8, 16, 32, 64],
            horizon: 10,
            span_start: 6,
            span: 8,
            trials: 100,
            count: 8,
            period: 1,
            eps: 0.05,
            format: Format::Json,
            out: None,
        };
        match experiment {
            Experiment::DiscCheck => {
                c.p = ["1", "2", "4", "inf"].map(String::from).to_vec();
            }
            Experiment::SidonCheck => {
                c.theta = "sqrt2-1".into();
                c.digits = 120;
                c.horizon = 14;
                c.budget = 512;
                c.ladder = 6;
            }
            Experiment::RelationCheck => {
                c.theta = "sqrt2-1".into();
            }
            Experiment::NormScan | Experiment::MeasureCheck => {}
        }
        c
    }

    /// Defaults, then the keys of a JSON object, each checked on its own so
    /// that errors name the key.
    pub fn layered(experiment: Experiment, file: Option<&Path>) -> Result<Config, ConfigError> {
        let base = Config::defaults(experiment);
        let Some(path) = file else {
            return Ok(base);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        let overlay: Map<String, Value> = serde_json::from_str(&text)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        let Value::Object(mut merged) = serde_json::to_value(&base).expect("config serializes") else {
            unreachable!()
        };
        for (key, value) in overlay {
            let Some(slot) = merged.get_mut(&key) else {
                return Err(ConfigError::new(&key, "unknown key".into()));
            };
            *slot = value;
            if let Err(e) = serde_json::from_value::<Config>(Value::Object(merged.clone())) {
                return Err(ConfigError::new(&key, e.to_string()));
            }
            if key == "experiment" && merged[&key] != Value::from(experiment.name()) {
                return Err(ConfigError::new(&key, format!("file is for {}, not {experiment}", merged[&key])));
            }
        }
        Ok(serde_json::from_value(Value::Object(merged)).expect("checked key by key"))
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(key: &str, reason: String) -> Self {
        ConfigError {
            key: key.to_string(),
            reason,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.key, self.reason)
    }
}

pub fn parse_p(s: &str) -> Result<f64, ConfigError> {
    let t = s.trim().to_ascii_lowercase();
    let p = match t.as_str() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        _ => t
            .parse::<f64>()
            .map_err(|_| ConfigError::new("p", format!("not a number: {s:?}")))?,
    };
    if !(p >= 1.0) {
        return Err(ConfigError::new("p", format!("{s} is below 1")));
    }
    Ok(p)
}
