//! Run configuration: a single JSON document selecting a scenario and
//! carrying every numerical setting.

use optosync_core::dynamics::AttractorConfig;
use optosync_core::measures::MeasureConfig;
use optosync_core::{GridSpec, IntegratorConfig, LyapunovConfig, SpBarConfig, SystemParams};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Time evolution of one or more switch settings.
    Simulate,
    /// Lyapunov-exponent field over the (mu, lambda) grid.
    SweepLyapunov,
    /// Time-averaged S_p' field over the (mu, lambda) grid.
    SweepSpbar,
    /// Four-corner switch truth table and logic-region search.
    Logic,
    /// Attractor classification over a list of drive amplitudes.
    CalibrateDrive,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Simulate => "simulate",
            Scenario::SweepLyapunov => "sweep-lyapunov",
            Scenario::SweepSpbar => "sweep-spbar",
            Scenario::Logic => "logic",
            Scenario::CalibrateDrive => "calibrate-drive",
        }
    }
}

/// One switch setting of the `simulate` scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Panel {
    /// File-name friendly label.
    pub label: String,
    pub mu: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Switch settings to run; empty means a single run at the couplings in
    /// `params`.
    pub panels: Vec<Panel>,
    /// Initial phase error `arg B1(0) - arg B2(0)`.
    pub theta0: f64,
    /// Initial mechanical amplitude `|B_j(0)|`.
    pub beta: f64,
    /// Propagate the covariance from vacuum alongside the mean field.
    pub covariance: bool,
    /// Also estimate the largest Lyapunov exponent of each panel.
    pub lyapunov: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            panels: Vec::new(),
            theta0: PI / 2.0,
            beta: 1.0,
            covariance: true,
            lyapunov: true,
        }
    }
}

/// Rectangle in the (mu, lambda) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub mu_min: f64,
    pub mu_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl Region {
    pub fn contains(&self, mu: f64, lambda: f64) -> bool {
        let eps = 1e-12;
        mu >= self.mu_min - eps
            && mu <= self.mu_max + eps
            && lambda >= self.lambda_min - eps
            && lambda <= self.lambda_max + eps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogicConfig {
    /// Coupling of the closed phonon-tunnel switch.
    pub mu_on: f64,
    /// Coupling of the closed fiber switch.
    pub lambda_on: f64,
    /// Also sweep the grid and search AND/OR/XOR regions.
    pub search_regions: bool,
    /// Window the AND region is expected to reach.
    pub target: Region,
}

impl Default for LogicConfig {
    fn default() -> Self {
        LogicConfig {
            mu_on: 0.004,
            lambda_on: 0.16,
            search_regions: true,
            target: Region {
                mu_min: 0.004,
                mu_max: 0.007,
                lambda_min: 0.14,
                lambda_max: 0.2,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateConfig {
    /// Drive amplitudes to classify.
    pub drives: Vec<f64>,
    pub attractor: AttractorConfig,
    pub theta0: f64,
    pub beta: f64,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        CalibrateConfig {
            drives: vec![1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0],
            attractor: AttractorConfig::default(),
            theta0: PI / 2.0,
            beta: 1.0,
        }
    }
}

/// Complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Scenario to run; may be supplied on the command line instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    /// Free-form note carried into every output.
    #[serde(default)]
    pub description: String,
    pub params: SystemParams,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub lyapunov: LyapunovConfig,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub sp_bar: SpBarConfig,
    #[serde(default)]
    pub measure: MeasureConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub logic: LogicConfig,
    #[serde(default)]
    pub calibrate: CalibrateConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub render: bool,
    /// Worker threads for sweeps; absent means all available cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A configuration problem, located in the source document when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted path of the offending field, when known.
    pub path: Option<String>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: Some(path.into()),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let Some(p) = &self.path {
            write!(f, " in `{p}`")?;
        }
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " at line {l}, column {c}")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    /// Parse and validate a JSON document.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            // serde_json appends its own position; report it separately
            let msg = inner.to_string();
            let msg = match msg.rfind(" at line ") {
                Some(k) => msg[..k].to_string(),
                None => msg,
            };
            ConfigError {
                path: (path != ".").then_some(path),
                line: Some(inner.line()),
                column: Some(inner.column()),
                message: msg,
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: None,
            line: None,
            column: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_json(&text)
    }

    /// Pretty JSON of the effective configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let wrap = |section: &str, e: optosync_core::Error| ConfigError::field(section, e.to_string());
        self.params.validate().map_err(|e| wrap("params", e))?;
        self.integrator.validate().map_err(|e| wrap("integrator", e))?;
        self.lyapunov.validate().map_err(|e| wrap("lyapunov", e))?;
        self.grid.validate().map_err(|e| wrap("grid", e))?;
        self.sp_bar.validate().map_err(|e| wrap("sp_bar", e))?;
        self.measure.validate().map_err(|e| wrap("measure", e))?;
        self.calibrate
            .attractor
            .validate()
            .map_err(|e| wrap("calibrate.attractor", e))?;
        if !(self.simulate.beta > 0.0) {
            return Err(ConfigError::field("simulate.beta", "must be > 0"));
        }
        if !self.simulate.theta0.is_finite() {
            return Err(ConfigError::field("simulate.theta0", "must be finite"));
        }
        for (k, p) in self.simulate.panels.iter().enumerate() {
            let ok_label = !p.label.is_empty()
                && p.label
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
            if !ok_label {
                return Err(ConfigError::field(
                    format!("simulate.panels[{k}].label"),
                    "must be non-empty and contain only letters, digits, '-' or '_'",
                ));
            }
            if !(p.mu >= 0.0 && p.lambda >= 0.0) {
                return Err(ConfigError::field(
                    format!("simulate.panels[{k}]"),
                    "mu and lambda must be >= 0",
                ));
            }
        }
        if !(self.logic.mu_on >= 0.0 && self.logic.lambda_on >= 0.0) {
            return Err(ConfigError::field("logic", "mu_on and lambda_on must be >= 0"));
        }
        if self.calibrate.drives.is_empty() || self.calibrate.drives.iter().any(|e| !(*e >= 0.0)) {
            return Err(ConfigError::field(
                "calibrate.drives",
                "must be a non-empty list of drives >= 0",
            ));
        }
        if !(self.calibrate.beta > 0.0) {
            return Err(ConfigError::field("calibrate.beta", "must be > 0"));
        }
        if self.workers == Some(0) {
            return Err(ConfigError::field("workers", "must be >= 1"));
        }
        Ok(())
    }

    /// The scenario to run: the command-line choice wins over the document.
    pub fn resolve_scenario(&self, cli: Option<Scenario>) -> Result<Scenario, ConfigError> {
        cli.or(self.scenario).ok_or_else(|| {
            ConfigError::field("scenario", "missing field `scenario` (set it in the config or pass a scenario command)")
        })
    }

    /// Panels of the `simulate` scenario, defaulting to the configured
    /// couplings.
    pub fn panels(&self) -> Vec<Panel> {
        if self.simulate.panels.is_empty() {
            vec![Panel {
                label: "run".to_string(),
                mu: self.params.mu,
                lambda: self.params.lambda,
            }]
        } else {
            self.simulate.panels.clone()
        }
    }
}
