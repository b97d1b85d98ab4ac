//! Run configuration: a TOML file with `[grid]`, `[flow]`, `[checks]` and
//! `[output]` sections. Every key has a default, so an empty file is valid.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::flow::{Scheme, StepperConfig};
use crate::grid::{BoundaryCondition, BoundaryKind, GridSpec};

/// Environment variable naming the root directory for run outputs.
pub const OUTPUT_ROOT_ENV: &str = "RICCI_LAB_OUT";

/// Output root used when the environment variable is unset.
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub flow: FlowConfig,
    pub checks: ChecksConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// Centre of the domain; with even node counts it is a grid node.
    pub center: [f64; 2],
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: 128, ny: 128, h: 0.125, center: [0.0, 0.0] }
    }
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        let x0 = self.center[0] - 0.5 * self.nx as f64 * self.h;
        let y0 = self.center[1] - 0.5 * self.ny as f64 * self.h;
        GridSpec::new(self.nx, self.ny, self.h, x0, y0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcChoice {
    /// Boundary ring frozen at the initial values.
    Dirichlet,
    /// Boundary ring driven by the preset's exact solution (cigar, flat).
    Exact,
    Periodic,
    Extrapolate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Initial data preset: `flat[:c]`, `cigar[:rate]`, `hsu:β:k`, `bump:A:σ`, `hsu-blend:β:k_in:k_out`.
    pub initial: String,
    pub bc: BcChoice,
    pub scheme: Scheme,
    pub cfl_safety: f64,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub diagnostic_interval: f64,
    /// Fixed time step; omit for the adaptive stable step.
    pub dt: Option<f64>,
    pub max_steps: u64,
    /// Evolve a heat-equation companion with random bounded initial data.
    pub heat_companion: bool,
    pub companion_amplitude: f64,
    pub seed: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            initial: "bump:0.5:1".into(),
            bc: BcChoice::Dirichlet,
            scheme: Scheme::Heun,
            cfl_safety: 0.9,
            t_end: 1.0,
            snapshots: Vec::new(),
            diagnostic_interval: 0.1,
            dt: None,
            max_steps: 50_000_000,
            heat_companion: false,
            companion_amplitude: 1.0,
            seed: 0,
        }
    }
}

impl FlowConfig {
    pub fn preset(&self) -> Result<ExactSolution> {
        self.initial.parse()
    }

    pub fn boundary_kind(&self) -> BoundaryKind {
        match self.bc {
            BcChoice::Dirichlet | BcChoice::Exact => BoundaryKind::DirichletFrozen,
            BcChoice::Periodic => BoundaryKind::Periodic,
            BcChoice::Extrapolate => BoundaryKind::LinearExtrapolate,
        }
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            scheme: self.scheme,
            cfl_safety: self.cfl_safety,
            t_end: self.t_end,
            snapshot_times: self.snapshots.clone(),
            diagnostic_interval: self.diagnostic_interval,
            max_steps: self.max_steps,
            dt_override: self.dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksConfig {
    /// Nodes excluded at each edge when taking sups and infs.
    pub margin: usize,
    /// `λ` in `J = t⁴|∇R|² + λ t³ R²`.
    pub lambda: f64,
    pub lower_bound_tol: f64,
    /// Relative slack on `sup|w(t)| ≤ sup|w(0)|`.
    pub mp1_tol: f64,
    pub barrier: bool,
    pub barrier_tol: f64,
    /// `ε = barrier_factor · e^{-2M} / 4`.
    pub barrier_factor: f64,
    /// Flat-convergence checks, run only for presets satisfying their hypotheses
    /// on a non-periodic domain.
    pub flat_convergence: bool,
    /// `(column, p)` pairs for `sup Q · (1 + t)^p`.
    pub decay_exponents: Vec<(String, f64)>,
    pub tail_fraction: f64,
    /// Upper bound on the fitted log-log slope of `sup H`.
    pub max_h_slope: f64,
    /// Required `sup|R|(t_end) / sup|R|(0)` bound.
    pub curvature_ratio: f64,
    pub flatness_tol: f64,
    /// `∂t v ≤ v/t` over the snapshots (needs three with `t > 0`).
    pub aronson_benilan: bool,
    pub aronson_benilan_tol: f64,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            margin: 4,
            lambda: 4.0,
            lower_bound_tol: 1e-3,
            mp1_tol: 1e-6,
            barrier: true,
            barrier_tol: 1e-2,
            barrier_factor: 0.999,
            flat_convergence: true,
            decay_exponents: default_decay_exponents(),
            tail_fraction: 0.5,
            max_h_slope: -0.8,
            curvature_ratio: 0.05,
            flatness_tol: 1e-2,
            aronson_benilan: false,
            aronson_benilan_tol: 1e-6,
        }
    }
}

pub fn default_decay_exponents() -> Vec<(String, f64)> {
    [("sup_gradf2", 1.0), ("sup_H", 1.0), ("sup_gradR2", 3.0), ("sup_hess2R", 4.0)]
        .into_iter()
        .map(|(c, p)| (c.to_string(), p))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Run directory name under the output root.
    pub name: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { name: "run".into() }
    }
}

impl RunConfig {
    /// Parses a config, then applies `section.key=value` overrides. Values are
    /// read as TOML literals, falling back to bare strings.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let config: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Self::parse_with_overrides(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.grid.spec()?;
        let preset = self.flow.preset()?;
        preset.validate()?;
        self.flow.stepper().validate()?;
        if self.flow.bc == BcChoice::Exact && !preset.is_time_parametrized() {
            return Err(Error::InvalidArgument(format!(
                "bc = \"exact\" needs a time-parametrized preset, got {preset}"
            )));
        }
        if self.flow.bc == BcChoice::Periodic {
            BoundaryCondition::Periodic.validate(&spec)?;
        }
        if spec.window_is_empty(self.checks.margin) {
            return Err(Error::EmptyWindow { margin: self.checks.margin });
        }
        if self.flow.boundary_kind() == BoundaryKind::DirichletFrozen && self.checks.margin < 2 {
            return Err(Error::InvalidArgument("Dirichlet runs need checks.margin >= 2".into()));
        }
        for (name, p) in &self.checks.decay_exponents {
            name.parse::<crate::analysis::Column>()?;
            if !p.is_finite() {
                return Err(Error::InvalidArgument(format!("decay exponent for {name} must be finite")));
            }
        }
        if !(self.checks.lambda > 0.0) {
            return Err(Error::InvalidArgument("checks.lambda must be > 0".into()));
        }
        if self.output.name.is_empty() || self.output.name.contains(['/', '\\']) {
            return Err(Error::InvalidArgument(format!("invalid run name {:?}", self.output.name)));
        }
        Ok(())
    }

    /// TOML rendering of the effective config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

fn apply_override(table: &mut toml::Table, ov: &str) -> Result<()> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override {ov:?} is not of the form section.key=value")))?;
    let (section, field) = key
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::Parse(format!("override key {key:?} needs a section, e.g. flow.t_end")))?;
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let entry = table.entry(section.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(field.to_string(), value);
            Ok(())
        }
        _ => Err(Error::Parse(format!("{section} is not a section"))),
    }
}

/// Output root: the environment variable if set, else [`DEFAULT_OUTPUT_ROOT`].
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}
