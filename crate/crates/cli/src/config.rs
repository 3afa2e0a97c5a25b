//! JSON experiment configuration.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use unitexp::expansion::Order;

use crate::CliError;

pub const DEFAULT_FOCK_DIM: usize = 20;
pub const DEFAULT_SUBSTEPS: usize = 10;

fn one() -> f64 {
    1.0
}

fn default_fock_dim() -> usize {
    DEFAULT_FOCK_DIM
}

fn default_substeps() -> usize {
    DEFAULT_SUBSTEPS
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub methods: Vec<String>,
    pub grid: GridConfig,
    pub initial: String,
    pub targets: Vec<String>,
    /// Scan multiplier applied to `H_int`.
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ModelConfig {
    DrivenOscillator(DrivenConfig),
    Raman(RamanConfig),
    Rabi(RabiConfig),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::DrivenOscillator(_) => "driven_oscillator",
            ModelConfig::Raman(_) => "raman",
            ModelConfig::Rabi(_) => "rabi",
        }
    }

    pub fn fock_dim_mut(&mut self) -> &mut usize {
        match self {
            ModelConfig::DrivenOscillator(c) => &mut c.fock_dim,
            ModelConfig::Raman(c) => &mut c.fock_dim,
            ModelConfig::Rabi(c) => &mut c.fock_dim,
        }
    }

    /// Frequency that converts `t` to the dimensionless `tau` column.
    pub fn time_unit(&self) -> f64 {
        match self {
            ModelConfig::DrivenOscillator(c) => c.omega,
            ModelConfig::Rabi(c) => c.omega,
            ModelConfig::Raman(_) => 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DrivenConfig {
    #[serde(default = "one")]
    pub omega: f64,
    pub g: f64,
    pub drive: DriveConfig,
    #[serde(default = "default_fock_dim")]
    pub fock_dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveConfig {
    /// `amplitude cos(nu t + phase)`.
    Cos {
        nu: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    Constant { value: f64 },
    /// `amplitude exp(-(t - center)^2 / (2 width^2))`.
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RamanConfig {
    pub omega_ig: f64,
    pub omega_eg: f64,
    pub omega_1: f64,
    pub omega_gi: f64,
    pub omega_ei: f64,
    #[serde(default)]
    pub n0: usize,
    #[serde(default = "default_fock_dim")]
    pub fock_dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RabiConfig {
    #[serde(default = "one")]
    pub omega: f64,
    pub omega0: f64,
    pub g: f64,
    #[serde(default = "default_fock_dim")]
    pub fock_dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// End time in units of the model's reference period.
    pub t_end: f64,
    /// Defaults to 200 steps per unit of `t_end`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<i64>,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
}

/// A requested propagation method, parsed from its config name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodName {
    Exact,
    H0Only,
    Product(usize),
    Born(usize),
    CNumber,
    Analytic,
}

impl MethodName {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "exact" => MethodName::Exact,
            "h0_only" => MethodName::H0Only,
            "w1" => MethodName::Product(2),
            "w1w2" => MethodName::Product(3),
            "born1" => MethodName::Born(1),
            "born2" => MethodName::Born(2),
            "cnumber" => MethodName::CNumber,
            "analytic" => MethodName::Analytic,
            other => {
                let n: usize = other.strip_prefix("product_")?.parse().ok()?;
                Order::new(n).ok()?;
                MethodName::Product(n)
            }
        })
    }

    pub fn is_unitary(self) -> bool {
        !matches!(self, MethodName::Born(_))
    }
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

const REQUIRED_KEYS: [&str; 5] = ["model", "methods", "grid", "initial", "targets"];

/// Parses and validates a JSON document; errors carry the offending key path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Config(
            "empty document; required keys: model, methods, grid, initial, targets".into(),
        ));
    }
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed JSON: {e}")))?;
    if let Some(obj) = value.as_object() {
        let missing: Vec<&str> = REQUIRED_KEYS.iter().copied().filter(|k| !obj.contains_key(*k)).collect();
        if !missing.is_empty() {
            return Err(CliError::Config(format!("missing required keys: {}", missing.join(", "))));
        }
    }
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(&value).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{path}: {}", e.into_inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(path, format!("must be a positive number, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, "must be finite"))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let model = self.model.name();
        match &self.model {
            ModelConfig::DrivenOscillator(c) => {
                positive("model.driven_oscillator.omega", c.omega)?;
                finite("model.driven_oscillator.g", c.g)?;
                match c.drive {
                    DriveConfig::Cos { nu, amplitude, phase } => {
                        finite("model.driven_oscillator.drive.cos.nu", nu)?;
                        finite("model.driven_oscillator.drive.cos.amplitude", amplitude)?;
                        finite("model.driven_oscillator.drive.cos.phase", phase)?;
                    }
                    DriveConfig::Constant { value } => finite("model.driven_oscillator.drive.constant.value", value)?,
                    DriveConfig::Gaussian { center, width, amplitude } => {
                        finite("model.driven_oscillator.drive.gaussian.center", center)?;
                        positive("model.driven_oscillator.drive.gaussian.width", width)?;
                        finite("model.driven_oscillator.drive.gaussian.amplitude", amplitude)?;
                    }
                }
            }
            ModelConfig::Raman(c) => {
                for (k, v) in [
                    ("omega_ig", c.omega_ig),
                    ("omega_eg", c.omega_eg),
                    ("omega_1", c.omega_1),
                    ("omega_gi", c.omega_gi),
                    ("omega_ei", c.omega_ei),
                ] {
                    finite(&format!("model.raman.{k}"), v)?;
                }
            }
            ModelConfig::Rabi(c) => {
                positive("model.rabi.omega", c.omega)?;
                finite("model.rabi.omega0", c.omega0)?;
                finite("model.rabi.g", c.g)?;
            }
        }
        let fock = match &self.model {
            ModelConfig::DrivenOscillator(c) => c.fock_dim,
            ModelConfig::Raman(c) => c.fock_dim,
            ModelConfig::Rabi(c) => c.fock_dim,
        };
        if fock < 2 {
            return Err(invalid(&format!("model.{model}.fock_dim"), "must be >= 2"));
        }

        if self.methods.is_empty() {
            return Err(invalid("methods", "at least one method is required"));
        }
        let mut seen = HashSet::new();
        for (i, m) in self.methods.iter().enumerate() {
            let path = format!("methods[{i}]");
            let parsed = MethodName::parse(m).ok_or_else(|| {
                invalid(&path, format!("unknown method {m:?} (exact, h0_only, w1, w1w2, born1, born2, product_N with 2 <= N <= 6, cnumber, analytic)"))
            })?;
            if matches!(parsed, MethodName::CNumber | MethodName::Analytic)
                && !matches!(self.model, ModelConfig::DrivenOscillator(_))
            {
                return Err(invalid(&path, format!("{m} is only available for driven_oscillator")));
            }
            if !seen.insert(m.as_str()) {
                return Err(invalid(&path, format!("duplicate method {m:?}")));
            }
        }

        positive("grid.t_end", self.grid.t_end)?;
        if let Some(n) = self.grid.n_steps {
            if n < 1 {
                return Err(invalid("grid.n_steps", format!("must be >= 1, got {n}")));
            }
        }
        if self.grid.substeps == 0 {
            return Err(invalid("grid.substeps", "must be >= 1"));
        }
        positive("lambda", self.lambda)?;
        if let Some(s) = &self.sweep {
            if s.lambdas.is_empty() {
                return Err(invalid("sweep.lambdas", "must not be empty"));
            }
            for (i, l) in s.lambdas.iter().enumerate() {
                positive(&format!("sweep.lambdas[{i}]"), *l)?;
            }
        }
        if self.targets.is_empty() {
            return Err(invalid("targets", "at least one target state is required"));
        }
        crate::experiment::resolve_label(&self.model, &self.initial).map_err(|e| invalid("initial", e))?;
        let mut labels = HashSet::new();
        for (i, t) in self.targets.iter().enumerate() {
            crate::experiment::resolve_label(&self.model, t).map_err(|e| invalid(&format!("targets[{i}]"), e))?;
            if !labels.insert(crate::experiment::column_label(t)) {
                return Err(invalid(&format!("targets[{i}]"), format!("duplicate target {t:?}")));
            }
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        match self.grid.n_steps {
            Some(n) => n as usize,
            None => ((self.grid.t_end * 200.0).ceil() as usize).max(1),
        }
    }

    pub fn parsed_methods(&self) -> Vec<(String, MethodName)> {
        self.methods
            .iter()
            .map(|m| (m.clone(), MethodName::parse(m).expect("validated method")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_RABI: &str = r#"{
        "model": {"rabi": {"omega0": 0.6, "g": 0.5}},
        "methods": ["exact", "w1"],
        "grid": {"t_end": 20},
        "initial": "g,0",
        "targets": ["g,0"]
    }"#;

    #[test]
    fn minimal_rabi_defaults() {
        let cfg = parse_config(MINIMAL_RABI).unwrap();
        match &cfg.model {
            ModelConfig::Rabi(r) => {
                assert_eq!(r.fock_dim, 20);
                assert_eq!(r.omega, 1.0);
            }
            _ => panic!("wrong model"),
        }
        assert_eq!(cfg.n_steps(), 4000);
        assert_eq!(cfg.grid.substeps, DEFAULT_SUBSTEPS);
        assert_eq!(cfg.lambda, 1.0);
    }

    #[test]
    fn empty_document_lists_required_keys() {
        let msg = parse_config("").unwrap_err().to_string();
        for key in ["model", "methods", "grid", "initial", "targets"] {
            assert!(msg.contains(key), "{msg}");
        }
        let msg = parse_config("{}").unwrap_err().to_string();
        assert!(msg.contains("initial") && msg.contains("targets"), "{msg}");
        assert!(parse_config("[1, 2").is_err());
    }

    #[test]
    fn negative_steps_name_the_key() {
        let text = MINIMAL_RABI.replace(r#""t_end": 20"#, r#""t_end": 20, "n_steps": -5"#);
        let msg = parse_config(&text).unwrap_err().to_string();
        assert!(msg.contains("grid.n_steps"), "{msg}");
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let text = MINIMAL_RABI.replace(r#""g": 0.5"#, r#""g": 0.5, "gamma": 1"#);
        let msg = parse_config(&text).unwrap_err().to_string();
        assert!(msg.contains("model.rabi") && msg.contains("gamma"), "{msg}");
    }

    #[test]
    fn bad_methods_and_labels() {
        let text = MINIMAL_RABI.replace(r#""w1""#, r#""product_9""#);
        assert!(parse_config(&text).unwrap_err().to_string().contains("methods[1]"));
        let text = MINIMAL_RABI.replace(r#""w1""#, r#""cnumber""#);
        assert!(parse_config(&text).is_err());
        let text = MINIMAL_RABI.replace(r#""targets": ["g,0"]"#, r#""targets": ["x,0"]"#);
        assert!(parse_config(&text).unwrap_err().to_string().contains("targets[0]"));
        let text = MINIMAL_RABI.replace(r#""targets": ["g,0"]"#, r#""targets": ["g,25"]"#);
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn method_names() {
        assert_eq!(MethodName::parse("w1w2"), Some(MethodName::Product(3)));
        assert_eq!(MethodName::parse("product_6"), Some(MethodName::Product(6)));
        assert_eq!(MethodName::parse("product_1"), None);
        assert_eq!(MethodName::parse("born3"), None);
    }
}
