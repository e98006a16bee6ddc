//! Declarative run configuration, read from TOML.

use serde::{Deserialize, Serialize};
use spinmi_core::{ModelKind, VerticalBc};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Boundary-state contraction on a semi-infinite strip.
    Tensornet,
    /// Pfaffian engine, nested geometry.
    Fkt,
    /// Gaussian fermionic circuit, half-cut geometry.
    Matchgate,
    /// Swendsen-Wang cluster statistics on a cylinder.
    Clusters,
    /// Thermodynamics, mean field and ground state of collective models.
    Collective,
    /// Collective mutual information via recoupled reduced densities.
    Cgmi,
    /// Field-free Ising-type limit of the collective model.
    Classical,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Tensornet => "tensornet",
            Engine::Fkt => "fkt",
            Engine::Matchgate => "matchgate",
            Engine::Clusters => "clusters",
            Engine::Collective => "collective",
            Engine::Cgmi => "cgmi",
            Engine::Classical => "classical",
        }
    }

    fn parameters(self) -> &'static [Parameter] {
        use Parameter::*;
        match self {
            Engine::Tensornet => &[Coupling, Rows, BondDimension],
            Engine::Fkt | Engine::Matchgate | Engine::Clusters => &[Coupling, Rows],
            Engine::Collective => &[Field, Anisotropy, Angle, Beta, Temperature, Spins],
            Engine::Cgmi => &[Field, Anisotropy, Angle, Beta, Temperature, Spins, Tau],
            Engine::Classical => &[Beta, Temperature, Spins, Tau],
        }
    }

    fn observables(self) -> &'static [Observable] {
        use Observable::*;
        match self {
            Engine::Tensornet => &[Mi, HeatCapacity],
            Engine::Fkt => &[Mi],
            Engine::Matchgate => &[Mi, LogZ],
            Engine::Clusters => &[ClustersCut],
            Engine::Collective => &[Thermal, MeanField, GroundState],
            Engine::Cgmi => &[Mi, GroundState],
            Engine::Classical => &[Mi],
        }
    }

    pub fn default_observable(self) -> Observable {
        self.observables()[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Coupling,
    Rows,
    BondDimension,
    Field,
    Anisotropy,
    Angle,
    Beta,
    Temperature,
    Spins,
    Tau,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::Coupling => "coupling",
            Parameter::Rows => "rows",
            Parameter::BondDimension => "bond_dimension",
            Parameter::Field => "field",
            Parameter::Anisotropy => "anisotropy",
            Parameter::Angle => "angle",
            Parameter::Beta => "beta",
            Parameter::Temperature => "temperature",
            Parameter::Spins => "spins",
            Parameter::Tau => "tau",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Parameter::Rows | Parameter::BondDimension | Parameter::Spins)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Lin,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub parameter: Parameter,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    /// Grid values; integer parameters are rounded.
    pub fn values(&self) -> Vec<f64> {
        let raw: Vec<f64> = if self.points == 1 {
            vec![self.start]
        } else {
            let last = (self.points - 1) as f64;
            (0..self.points)
                .map(|i| {
                    let t = i as f64 / last;
                    match self.scale {
                        Scale::Lin => self.start + t * (self.stop - self.start),
                        Scale::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                    }
                })
                .collect()
        };
        if self.parameter.is_integer() {
            raw.into_iter().map(f64::round).collect()
        } else {
            raw
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Mi,
    HeatCapacity,
    LogZ,
    ClustersCut,
    Thermal,
    MeanField,
    GroundState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Lmg,
    Mn,
}

/// Model parameters shared by all engines; each engine reads the ones it
/// needs and sweep axes override them point by point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub q: usize,
    pub coupling: f64,
    pub rows: usize,
    /// Finite lattices: column count. Cylinders: `None` means 16 x rows.
    pub cols: Option<usize>,
    /// Defaults to periodic for strips and cylinders, open for finite lattices.
    pub vertical_bc: Option<VerticalBc>,
    pub bond_dimension: usize,
    /// Nested geometry `[top, left, inner_rows, inner_cols]`.
    pub inner: Option<[usize; 4]>,
    /// Half-cut geometry: A holds columns `0..cut`; defaults to `cols / 2`.
    pub cut: Option<usize>,
    pub family: FamilyKind,
    pub spins: usize,
    /// Classical engine: evaluate the `N -> infinity` limit instead.
    pub infinite: bool,
    pub anisotropy: f64,
    pub field: f64,
    pub x_order: u32,
    pub z_order: u32,
    pub angle: f64,
    pub beta: f64,
    /// Overrides `beta` when set.
    pub temperature: Option<f64>,
    pub tau: f64,
    pub observable: Option<Observable>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            kind: ModelKind::Ising,
            q: 2,
            coupling: 0.44,
            rows: 8,
            cols: None,
            vertical_bc: None,
            bond_dimension: 16,
            inner: None,
            cut: None,
            family: FamilyKind::Lmg,
            spins: 32,
            infinite: false,
            anisotropy: 0.0,
            field: 0.0,
            x_order: 2,
            z_order: 1,
            angle: 0.0,
            beta: 1.0,
            temperature: None,
            tau: 0.5,
            observable: None,
        }
    }
}

impl ModelParams {
    pub fn set(&mut self, parameter: Parameter, value: f64) {
        match parameter {
            Parameter::Coupling => self.coupling = value,
            Parameter::Rows => self.rows = value as usize,
            Parameter::BondDimension => self.bond_dimension = value as usize,
            Parameter::Field => self.field = value,
            Parameter::Anisotropy => self.anisotropy = value,
            Parameter::Angle => self.angle = value,
            Parameter::Beta => {
                self.beta = value;
                self.temperature = None;
            }
            Parameter::Temperature => self.temperature = Some(value),
            Parameter::Spins => self.spins = value as usize,
            Parameter::Tau => self.tau = value,
        }
    }

    pub fn inverse_temperature(&self) -> f64 {
        self.temperature.map_or(self.beta, |t| 1.0 / t)
    }
}

/// Sampler budget; mirrors the core schedule with TOML-friendly defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleParams {
    pub sweeps: usize,
    pub equilibration: Option<usize>,
    pub chains: usize,
    pub plateau_tolerance: f64,
    pub exact_bound: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        let core = spinmi_core::sampler::Schedule::default();
        ScheduleParams {
            sweeps: core.sweeps,
            equilibration: core.equilibration,
            chains: core.chains,
            plateau_tolerance: core.plateau_tolerance,
            exact_bound: core.exact_bound,
        }
    }
}

impl ScheduleParams {
    pub fn to_core(&self, seed: u64) -> spinmi_core::sampler::Schedule {
        spinmi_core::sampler::Schedule {
            sweeps: self.sweeps,
            equilibration: self.equilibration,
            chains: self.chains,
            seed,
            plateau_tolerance: self.plateau_tolerance,
            exact_bound: self.exact_bound,
            ..spinmi_core::sampler::Schedule::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputParams {
    /// File stem for artifacts; defaults to the config file stem.
    pub stem: Option<String>,
    /// Column drawn in the SVG; defaults to the observable's main column.
    pub plot: Option<String>,
    /// Also write the reduced-density spectrum of A (cgmi only).
    pub spectrum: bool,
    /// Also write the mean-field phase boundary over the first axis
    /// (collective engine, mean-field observable).
    pub phase_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub engine: Engine,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default)]
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub schedule: ScheduleParams,
    #[serde(default)]
    pub output: OutputParams,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse { path: path.to_owned(), source })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        let mut config = Self::from_toml(&text, path)?;
        if config.output.stem.is_none() {
            config.output.stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(config)
    }

    pub fn observable(&self) -> Observable {
        self.model.observable.unwrap_or_else(|| self.engine.default_observable())
    }

    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.engine.name().to_owned())
    }

    /// Structural checks; model checks per point happen in
    /// [`crate::run::plan`].
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.axes.is_empty() {
            return Err(invalid("at least one sweep axis is required"));
        }
        if self.axes.len() > 2 {
            return Err(invalid("at most two sweep axes (line or heat map)"));
        }
        for axis in &self.axes {
            let name = axis.parameter.name();
            if axis.points == 0 {
                return Err(invalid(format!("axis {name} has no points")));
            }
            if !axis.start.is_finite() || !axis.stop.is_finite() {
                return Err(invalid(format!("axis {name} has a non-finite end point")));
            }
            if axis.scale == Scale::Log && (axis.start <= 0.0 || axis.stop <= 0.0) {
                return Err(invalid(format!("log axis {name} needs positive end points")));
            }
            if !self.engine.parameters().contains(&axis.parameter) {
                return Err(invalid(format!("engine {} cannot sweep {name}", self.engine.name())));
            }
        }
        if self.axes.len() == 2 && self.axes[0].parameter == self.axes[1].parameter {
            return Err(invalid("the two axes sweep the same parameter"));
        }
        let observable = self.observable();
        if !self.engine.observables().contains(&observable) {
            return Err(invalid(format!("engine {} does not compute {observable:?}", self.engine.name())));
        }
        if self.output.spectrum && self.engine != Engine::Cgmi {
            return Err(invalid("spectrum output needs the cgmi engine"));
        }
        if self.output.phase_boundary && !(self.engine == Engine::Collective && observable == Observable::MeanField) {
            return Err(invalid("phase-boundary output needs the collective engine with the mean_field observable"));
        }
        if self.schedule.sweeps == 0 || self.schedule.chains == 0 {
            return Err(invalid("schedule needs positive sweeps and chains"));
        }
        Ok(())
    }
}
