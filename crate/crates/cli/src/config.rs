//! Layered run configuration: an optional JSON file whose keys are then
//! overridden by command-line flags, deserialized into a typed config.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use ssate_core::estimators::Method;
use ssate_core::nuisance::NuisanceConfig;
use ssate_core::oracle::DgpSpec;
use ssate_core::sim::McConfig;

use crate::CliError;

fn default_folds() -> usize {
    2
}

fn default_level() -> f64 {
    0.95
}

fn default_method() -> Method {
    Method::OsEff
}

fn default_alpha() -> f64 {
    0.5
}

fn default_grid_step() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateOsConfig {
    pub input: PathBuf,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub nuisance: NuisanceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateTsConfig {
    pub labeled: PathBuf,
    pub unlabeled: PathBuf,
    pub beta_star: Option<f64>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub nuisance: NuisanceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub dgp: DgpSpec,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    #[default]
    Mc,
    InfiniteUnlabeled,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateConfig {
    #[serde(flatten)]
    pub mc: McConfig,
    pub study: Study,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

/// Raw key-value layers before typing.
#[derive(Debug, Default)]
pub struct Layers(Map<String, Value>);

impl Layers {
    pub fn from_file(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        match serde_json::from_str(&text) {
            Ok(Value::Object(map)) => Ok(Self(map)),
            Ok(_) => Err(CliError::Usage(format!(
                "config {} must hold a JSON object",
                path.display()
            ))),
            Err(e) => Err(CliError::Usage(format!("config {}: {e}", path.display()))),
        }
    }

    /// Override the value at a dotted key path, creating objects as needed.
    pub fn set(&mut self, key: &str, value: Option<Value>) {
        let Some(value) = value else { return };
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop().expect("nonempty key");
        let mut map = &mut self.0;
        for p in parts {
            let slot = map
                .entry(p.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
            if !slot.is_object() {
                *slot = Value::Object(Map::new());
            }
            map = slot.as_object_mut().expect("just made an object");
        }
        map.insert(last.to_string(), value);
    }

    pub fn take(&mut self, key: &str) -> Option<Value> {
        self.0.remove(key)
    }

    /// Replace a `dgp_preset` key by the named spec under `dgp`.
    pub fn resolve_preset(&mut self) -> Result<(), CliError> {
        if let Some(v) = self.take("dgp_preset") {
            let name = v
                .as_str()
                .ok_or_else(|| CliError::Usage("dgp_preset must be a string".into()))?;
            let spec = DgpSpec::preset(name).ok_or_else(|| {
                CliError::Usage(format!("unknown DGP preset {name:?} (expected d1 or d2)"))
            })?;
            self.set("dgp", Some(to_value(&spec)));
        }
        Ok(())
    }

    pub fn into_typed<T: DeserializeOwned>(self) -> Result<T, CliError> {
        serde_json::from_value(Value::Object(self.0))
            .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config types serialize to JSON")
}

/// `--dgp` accepts either an inline JSON object or a path to one.
pub fn dgp_arg(arg: &str) -> Result<Value, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)
            .map_err(|e| CliError::Usage(format!("cannot read DGP spec {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("DGP spec {arg}: {e}")))
}

/// `--hook zero_mu` or `--hook '{"constant_g": 0.3}'`.
pub fn hook_arg(arg: &str) -> Result<Value, CliError> {
    if arg.trim_start().starts_with('{') {
        serde_json::from_str(arg).map_err(|e| CliError::Usage(format!("hook {arg}: {e}")))
    } else {
        Ok(Value::String(arg.to_string()))
    }
}

pub fn simulate_config(mut layers: Layers) -> Result<SimulateConfig, CliError> {
    layers.resolve_preset()?;
    let study = match layers.take("study") {
        Some(v) => serde_json::from_value(v)
            .map_err(|e| CliError::Usage(format!("invalid configuration: study: {e}")))?,
        None => Study::Mc,
    };
    let ratio = match layers.take("ratio") {
        Some(v) => Some(
            v.as_f64()
                .ok_or_else(|| CliError::Usage("ratio must be a number".into()))?,
        ),
        None => None,
    };
    if study == Study::InfiniteUnlabeled && ratio.is_none() {
        return Err(CliError::Usage(
            "the infinite_unlabeled study needs a ratio (--ratio)".into(),
        ));
    }
    Ok(SimulateConfig {
        mc: layers.into_typed()?,
        study,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flags_override_nested_file_keys() {
        let mut l = Layers(
            json!({"input": "a.csv", "nuisance": {"clip_eps": 0.05, "basis": {"degree": 3}}})
                .as_object()
                .unwrap()
                .clone(),
        );
        l.set("nuisance.basis.degree", Some(json!(2)));
        l.set("seed", Some(json!(9)));
        l.set("level", None);
        let cfg: EstimateOsConfig = l.into_typed().unwrap();
        assert_eq!(cfg.nuisance.basis.degree, 2);
        assert_eq!(cfg.nuisance.clip_eps, 0.05);
        assert!(cfg.nuisance.basis.intercept);
        assert_eq!((cfg.seed, cfg.level), (9, 0.95));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut l = Layers::default();
        l.set("input", Some(json!("a.csv")));
        l.set("sed", Some(json!(1)));
        assert!(l.into_typed::<EstimateOsConfig>().is_err());
    }

    #[test]
    fn simulate_layers() {
        let mut l = Layers::default();
        l.set("dgp_preset", Some(json!("d2")));
        l.set("method", Some(json!("TS-eff")));
        l.set("m", Some(json!(100)));
        l.set("reps", Some(json!(2)));
        l.set("study", Some(json!("infinite_unlabeled")));
        l.set("ratio", Some(json!(10.0)));
        let cfg = simulate_config(l).unwrap();
        assert_eq!(cfg.study, Study::InfiniteUnlabeled);
        assert_eq!(cfg.mc.dgp, DgpSpec::d2());
        let echoed = to_value(&cfg);
        assert_eq!(echoed["ratio"], json!(10.0));
        assert_eq!(echoed["m"], json!(100));
    }
}
