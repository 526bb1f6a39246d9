use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classifier::LossKind;
use crate::error::{Error, Result};
use crate::scattering::ScatteringConfig;
use crate::synthetic::SyntheticConfig;
use crate::wavelets::{FamilyKind, WaveletFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Feature,
    Node,
    Graph,
    /// Feature or node at random.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemovalProtocol {
    /// Share of training graphs that receive one request each.
    pub fraction: f64,
    /// Exact request count instead of `fraction`; graphs may repeat.
    pub count: Option<usize>,
    pub kind: ProtocolKind,
    pub order_seed: u64,
}

impl Default for RemovalProtocol {
    fn default() -> Self {
        RemovalProtocol {
            fraction: 0.1,
            count: None,
            kind: ProtocolKind::Node,
            order_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatteringParams {
    pub family: FamilyKind,
    /// J
    pub scales: usize,
    /// L
    pub layers: usize,
    /// Q
    pub moments: usize,
    pub count_moments: bool,
}

impl Default for ScatteringParams {
    fn default() -> Self {
        ScatteringParams {
            family: FamilyKind::Diffusion,
            scales: 3,
            layers: 3,
            moments: 1,
            count_moments: false,
        }
    }
}

impl ScatteringParams {
    pub fn build(&self) -> Result<ScatteringConfig> {
        let family = WaveletFamily::new(self.family, self.scales, self.moments)?;
        let mut c = ScatteringConfig::new(family, self.layers)?;
        c.count_moments = self.count_moments;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset directory; the synthetic generator is used when absent.
    pub dataset: Option<PathBuf>,
    pub synthetic: SyntheticConfig,
    pub synthetic_seed: u64,
    /// Train, validation and test ratios.
    pub split: [f64; 3],
    pub seeds: Vec<u64>,
    pub scattering: ScatteringParams,
    pub loss: LossKind,
    pub lambda: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub removal: RemovalProtocol,
    /// Also run the arm that retrains after every request.
    pub retrain_arm: bool,
    /// Record wall times; off yields byte-identical reports across runs.
    pub record_timing: bool,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            synthetic: SyntheticConfig::default(),
            synthetic_seed: 0,
            split: [0.1, 0.1, 0.8],
            seeds: vec![0],
            scattering: ScatteringParams::default(),
            loss: LossKind::Logistic,
            lambda: 1e-4,
            alpha: 0.1,
            epsilon: 1.0,
            delta: 1e-4,
            removal: RemovalProtocol::default(),
            retrain_arm: true,
            record_timing: true,
            output: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.split.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.split.iter().any(|r| *r < 0.0) {
            return Err(Error::Parameter(format!(
                "split ratios {:?} must be nonnegative and sum to 1",
                self.split
            )));
        }
        if !(0.0..=1.0).contains(&self.removal.fraction) {
            return Err(Error::Parameter(format!(
                "removal fraction {} outside [0, 1]",
                self.removal.fraction
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Parameter("at least one seed is required".into()));
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return Err(Error::Parameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.alpha.is_nan() || self.alpha < 0.0 {
            return Err(Error::Parameter(format!(
                "alpha must be nonnegative, got {}",
                self.alpha
            )));
        }
        crate::unlearn::BudgetLedger::threshold_for(self.epsilon, self.delta, self.alpha)?;
        self.scattering.build()?;
        Ok(())
    }

    /// Reads a JSON or TOML document; the format follows the extension,
    /// anything but `.toml` is parsed as JSON.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        if is_toml {
            toml::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
        } else {
            serde_json::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// Applies `key = value` overrides. Keys are field names, nested with
    /// dots (`removal.fraction`), dashes allowed for underscores. Values are
    /// parsed as JSON and fall back to plain strings.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc = serde_json::to_value(self).map_err(|e| Error::Serde(e.to_string()))?;
        for (key, raw) in overrides {
            let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.clone()));
            let mut cursor = &mut doc;
            let parts: Vec<String> = key.split('.').map(|p| p.replace('-', "_")).collect();
            for (i, part) in parts.iter().enumerate() {
                let obj = cursor
                    .as_object_mut()
                    .ok_or_else(|| Error::Parameter(format!("--{key}: {part} is not a section")))?;
                if !obj.contains_key(part.as_str()) {
                    return Err(Error::Parameter(format!("unknown config key --{key}")));
                }
                if i + 1 == parts.len() {
                    obj.insert(part.clone(), value.clone());
                    break;
                }
                cursor = obj.get_mut(part.as_str()).expect("checked above");
            }
        }
        serde_json::from_value(doc).map_err(|e| Error::Parameter(format!("invalid override: {e}")))
    }
}

/// Splits `--key value` pairs (also `--key=value`).
pub fn parse_override_args(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(key) = a.strip_prefix("--") else {
            return Err(Error::Parameter(format!("expected --key, found {a:?}")));
        };
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
            continue;
        }
        let value = it
            .next()
            .ok_or_else(|| Error::Parameter(format!("--{key} needs a value")))?;
        out.push((key.to_string(), value.clone()));
    }
    Ok(out)
}
