//! Experiment configuration files.
//!
//! Configs are TOML. A `.json` file is also accepted, either a bare config
//! or a metadata sidecar whose `config` member is replayed.

use std::fmt;
use std::path::{Path, PathBuf};

use forkfluid_core::dist::LawName;
use forkfluid_core::initcond::{DependentOffset, InitFamily, InitialConditionSpec, ScalingRule};
use forkfluid_core::model::SystemParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Fluid,
    Compare,
    Extremal,
    Bounds,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fluid => "fluid",
            Command::Compare => "compare",
            Command::Extremal => "extremal",
            Command::Bounds => "bounds",
            Command::Validate => "validate",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("`{field}`: {reason}")]
    Field { field: String, reason: String },
}

fn field(name: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: name.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub params: ParamsBlock,
    #[serde(default)]
    pub init: InitBlock,
    #[serde(default)]
    pub time: TimeGrid,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub overlay: OverlayBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extremal: Option<ExtremalBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<ValidateBlock>,
}

fn default_seed() -> u64 {
    1
}

fn default_reps() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub alpha: f64,
    pub beta: f64,
    /// Ladder of system sizes; every command loops over it.
    pub n_servers: Vec<usize>,
    #[serde(default = "default_regime")]
    pub regime_exponent: f64,
}

fn default_regime() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    #[default]
    Zero,
    Degenerate,
    HalfNormal,
    Lognormal,
    ExpOfExp,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitBlock {
    #[serde(default)]
    pub family: FamilyName,
    #[serde(default)]
    pub q0: f64,
    /// Right endpoint of the degenerate family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<f64>,
    /// Coefficient of the common offset `floor(kappa N sqrt(ln N))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub scaling: ScalingRule,
}

/// Either an explicit list of points or `start..=stop` in steps of `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    #[serde(default)]
    pub start: f64,
    #[serde(default = "default_stop")]
    pub stop: f64,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_stop() -> f64 {
    1.0
}

fn default_step() -> f64 {
    0.05
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            points: None,
            start: 0.0,
            stop: default_stop(),
            step: default_step(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlayBlock {
    /// Adds the `sqrt(2 alpha t)` column of the `N^3 ln N` clock.
    #[serde(default)]
    pub n3_clock: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremalBlock {
    pub components: Vec<LawName>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsBlock {
    #[serde(default = "default_m")]
    pub m: f64,
}

fn default_m() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateBlock {
    #[serde(default = "default_stop")]
    pub t: f64,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parse_err = |message: String| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        };
        if path.extension().is_some_and(|e| e == "json") {
            let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
            serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))
        }
    }

    /// Applies overrides, fixes the command and validates the result.
    pub fn resolve(mut self, command: Command, overrides: &Overrides) -> Result<Self, ConfigError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(field("command", format!("config is for `{c}` but `{command}` was requested")));
            }
        }
        self.command = Some(command);
        if let Some(s) = overrides.seed {
            self.seed = s;
        }
        if let Some(r) = overrides.reps {
            self.reps = r;
        }
        if let Some(o) = &overrides.out {
            self.output.path = Some(o.clone());
        }
        self.validate()?;
        Ok(self)
    }

    pub fn command(&self) -> Command {
        self.command.unwrap_or(Command::Compare)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        if !(p.alpha > 0.0 && p.alpha.is_finite()) {
            return Err(field("params.alpha", format!("must be positive and finite, got {}", p.alpha)));
        }
        if !(p.beta > 0.0 && p.beta.is_finite()) {
            return Err(field("params.beta", format!("must be positive and finite, got {}", p.beta)));
        }
        if !(p.regime_exponent > 0.0 && p.regime_exponent.is_finite()) {
            return Err(field(
                "params.regime_exponent",
                format!("must be positive, got {}", p.regime_exponent),
            ));
        }
        if p.n_servers.is_empty() {
            return Err(field("params.n_servers", "needs at least one system size"));
        }
        for (k, &n) in p.n_servers.iter().enumerate() {
            if let Err(e) = SystemParams::with_regime(p.alpha, p.beta, n, p.regime_exponent) {
                return Err(field(&format!("params.n_servers[{k}]"), e.to_string()));
            }
        }
        let cmd = self.command();
        if cmd != Command::Fluid && self.reps == 0 {
            return Err(field("reps", "must be at least 1"));
        }
        self.validate_init()?;
        self.validate_time()?;
        match cmd {
            Command::Extremal => {
                let b = self.extremal.as_ref().ok_or_else(|| field("extremal", "section is required"))?;
                if b.components.is_empty() || b.components.len() > forkfluid_core::extremal::MAX_COMPONENTS {
                    return Err(field(
                        "extremal.components",
                        format!("needs 1 to {} laws", forkfluid_core::extremal::MAX_COMPONENTS),
                    ));
                }
                if let Some(k) = p.n_servers.iter().position(|&n| n < 2) {
                    return Err(field(&format!("params.n_servers[{k}]"), "extremal scalings need N >= 2"));
                }
            }
            Command::Bounds => {
                let m = self.bounds.as_ref().map_or(default_m(), |b| b.m);
                if !(m > 0.0 && m < p.beta) {
                    return Err(field("bounds.m", format!("must lie in (0, beta = {}), got {m}", p.beta)));
                }
                if let Some(k) = p.n_servers.iter().position(|&n| n < 2) {
                    return Err(field(&format!("params.n_servers[{k}]"), "Chernoff roots need N >= 2"));
                }
            }
            Command::Validate => {
                let t = self.validate.as_ref().map_or(1.0, |b| b.t);
                if !(t > 0.0 && t.is_finite()) {
                    return Err(field("validate.t", format!("must be positive, got {t}")));
                }
                if let Some(k) = p.n_servers.iter().position(|&n| n < 2) {
                    return Err(field(&format!("params.n_servers[{k}]"), "needs N >= 2"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn validate_init(&self) -> Result<(), ConfigError> {
        let i = &self.init;
        if !(i.q0 >= 0.0 && i.q0.is_finite()) {
            return Err(field("init.q0", format!("must be nonnegative, got {}", i.q0)));
        }
        match (i.family, i.endpoint) {
            (FamilyName::Degenerate, None) => return Err(field("init.endpoint", "required by the degenerate family")),
            (FamilyName::Degenerate, Some(e)) if !(e > 0.0 && e.is_finite()) => {
                return Err(field("init.endpoint", format!("must be positive, got {e}")))
            }
            (FamilyName::Degenerate, _) => {}
            (_, Some(_)) => return Err(field("init.endpoint", "only used by the degenerate family")),
            _ => {}
        }
        if let Some(k) = i.kappa {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(field("init.kappa", format!("must be nonnegative, got {k}")));
            }
        }
        Ok(())
    }

    fn validate_time(&self) -> Result<(), ConfigError> {
        let g = &self.time;
        if let Some(pts) = &g.points {
            if pts.is_empty() {
                return Err(field("time.points", "must not be empty"));
            }
            if let Some(k) = pts.iter().position(|t| !(*t >= 0.0 && t.is_finite())) {
                return Err(field(&format!("time.points[{k}]"), "must be nonnegative and finite"));
            }
            if pts.windows(2).any(|w| w[0] > w[1]) {
                return Err(field("time.points", "must be sorted"));
            }
        } else {
            if !(g.start >= 0.0 && g.start.is_finite()) {
                return Err(field("time.start", format!("must be nonnegative, got {}", g.start)));
            }
            if !(g.stop >= g.start && g.stop.is_finite()) {
                return Err(field("time.stop", format!("must be at least time.start, got {}", g.stop)));
            }
            if !(g.step > 0.0 && g.step.is_finite()) {
                return Err(field("time.step", format!("must be positive, got {}", g.step)));
            }
            if (g.stop - g.start) / g.step > 1e6 {
                return Err(field("time.step", "grid would exceed 10^6 points"));
            }
        }
        Ok(())
    }

    /// Grid points `start + k step`; `stop` is included up to rounding.
    pub fn time_points(&self) -> Vec<f64> {
        let g = &self.time;
        if let Some(p) = &g.points {
            return p.clone();
        }
        let count = ((g.stop - g.start) / g.step + 1e-9).floor() as usize;
        (0..=count).map(|k| g.start + k as f64 * g.step).collect()
    }

    pub fn system(&self, n: usize) -> SystemParams {
        SystemParams::with_regime(self.params.alpha, self.params.beta, n, self.params.regime_exponent)
            .expect("validated params")
    }

    pub fn init_spec(&self) -> InitialConditionSpec {
        let i = &self.init;
        let family = match i.family {
            FamilyName::Zero => InitFamily::Zero,
            FamilyName::Degenerate => InitFamily::Degenerate {
                endpoint: i.endpoint.unwrap_or(1.0),
            },
            FamilyName::HalfNormal => InitFamily::HalfNormal,
            FamilyName::Lognormal => InitFamily::Lognormal,
            FamilyName::ExpOfExp => InitFamily::ExpOfExp,
            FamilyName::Exponential => InitFamily::Exponential,
        };
        let mut spec = InitialConditionSpec::new(family, i.q0);
        spec.scaling = i.scaling;
        spec.dependent_offset = i.kappa.map(|kappa| DependentOffset { kappa });
        spec
    }

    pub fn bounds_m(&self) -> f64 {
        self.bounds.as_ref().map_or(default_m(), |b| b.m)
    }

    pub fn validate_t(&self) -> f64 {
        self.validate.as_ref().map_or(1.0, |b| b.t)
    }
}
