//! Run configuration: a sectioned TOML file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chemohapto_core::condition::{CheckOptions, ScheduleKind};
use chemohapto_core::kinetics::MuOptions;
use chemohapto_core::{Error as CoreError, Grid, KineticSpec, ModelParams, SolverConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    #[serde(default)]
    pub initial: InitialSection,
    pub time: TimeSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub chi: f64,
    pub xi: f64,
    pub tau: f64,
    pub kinetics: KineticSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    /// Defaults to `nx`.
    #[serde(default)]
    pub ny: Option<usize>,
    #[serde(default = "one")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
}

impl GridSection {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny.unwrap_or(self.nx), self.lx, self.ly).map_err(|e| field_error("grid", e))
    }
}

/// One Gaussian bump `amplitude · exp(−|x − c|² / (2 width²))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

/// Initial-field presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    Homogeneous {
        value: f64,
    },
    /// `mean + amplitude · cos(kx π x / Lx) cos(ky π y / Ly)`
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one_u32")]
        kx: u32,
        #[serde(default)]
        ky: u32,
    },
    /// Sum of bumps on top of `background`; if `mass` is given the field is
    /// rescaled to that integral.
    Gaussian {
        bumps: Vec<Bump>,
        #[serde(default)]
        background: f64,
        #[serde(default)]
        mass: Option<f64>,
    },
    /// `mean + amplitude · U(−1, 1)` per cell, seeded by the run seed.
    Random {
        mean: f64,
        amplitude: f64,
    },
    /// Field dump; relative paths resolve against the config file.
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default = "default_u")]
    pub u: Preset,
    #[serde(default = "default_v")]
    pub v: Preset,
    #[serde(default = "default_w")]
    pub w: Preset,
    /// Constant in `|∇w₀|² ≤ A w₀`; the smallest admissible value if absent.
    #[serde(default)]
    pub a: Option<f64>,
    /// Multiplies `u₀` after the preset is built.
    #[serde(default = "one")]
    pub mass_scale: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            u: default_u(),
            v: default_v(),
            w: default_w(),
            a: None,
            mass_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    /// Interval between recorded rows.
    pub cadence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsSection {
    pub elliptic_tol: f64,
    /// `0` selects `10 (nx + ny)`.
    pub max_iterations: usize,
    pub overflow_guard: f64,
    pub collapse_fraction: f64,
    pub safety: f64,
    pub reaction_safety: f64,
    pub clip_tolerance: f64,
    /// Order `m` of the monitored `g_m` functional.
    pub g_order: u32,
    pub threads: usize,
    pub seed: u64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let c = SolverConfig::default();
        Self {
            elliptic_tol: c.elliptic_tol,
            max_iterations: c.max_iterations,
            overflow_guard: c.overflow_guard,
            collapse_fraction: c.collapse_fraction,
            safety: c.safety,
            reaction_safety: c.reaction_safety,
            clip_tolerance: c.clip_tolerance,
            g_order: c.g_order,
            threads: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub r_max: u32,
    pub mu_tol: f64,
    pub schedule: ScheduleKind,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        let o = CheckOptions::default();
        Self {
            r_max: o.r_max,
            mu_tol: o.mu_tol,
            schedule: o.schedule,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Write binary dumps of the final `u`, `v`, `w`.
    pub fields: bool,
    /// Write SVG heatmaps of the final `u`, `v`, `w`.
    pub svg: bool,
    /// Heatmap resolution cap per axis.
    pub svg_max: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            fields: true,
            svg: true,
            svg_max: 64,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn one_u32() -> u32 {
    1
}
fn default_dt_max() -> f64 {
    SolverConfig::default().dt_max
}
fn default_u() -> Preset {
    Preset::Homogeneous { value: 1.0 }
}
fn default_v() -> Preset {
    Preset::Homogeneous { value: 0.0 }
}
fn default_w() -> Preset {
    Preset::Homogeneous { value: 0.5 }
}

/// Prefixes the field name of a core validation error with its section.
fn field_error(section: &str, e: CoreError) -> anyhow::Error {
    match e {
        CoreError::InvalidParameter {
            name,
            value,
            expected,
        } => anyhow::anyhow!("{section}.{name} = {value} is out of range: expected {expected}"),
        other => anyhow::anyhow!("{section}: {other}"),
    }
}

impl RunConfig {
    /// Parses TOML; syntax errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let params = ModelParams {
            chi: self.model.chi,
            xi: self.model.xi,
            tau: self.model.tau,
            kinetics: self.model.kinetics,
            grid: self.grid.build()?,
        };
        params
            .kinetics
            .validate()
            .map_err(|e| field_error("model.kinetics", e))?;
        params.validate().map_err(|e| field_error("model", e))?;
        Ok(params)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let n = &self.numerics;
        let c = SolverConfig {
            elliptic_tol: n.elliptic_tol,
            max_iterations: n.max_iterations,
            overflow_guard: n.overflow_guard,
            collapse_fraction: n.collapse_fraction,
            safety: n.safety,
            reaction_safety: n.reaction_safety,
            dt_max: self.time.dt_max,
            clip_tolerance: n.clip_tolerance,
            g_order: n.g_order,
        };
        c.validate().map_err(|e| {
            if matches!(&e, CoreError::InvalidParameter { name: "dt_max", .. }) {
                field_error("time", e)
            } else {
                field_error("numerics", e)
            }
        })?;
        Ok(c)
    }

    pub fn check_options(&self) -> CheckOptions {
        CheckOptions {
            r_max: self.diagnostics.r_max,
            mu_tol: self.diagnostics.mu_tol,
            schedule: self.diagnostics.schedule,
            mu: MuOptions::default(),
        }
    }

    /// Checks every range before any computation starts.
    pub fn validate(&self) -> Result<()> {
        self.model_params()?;
        self.solver_config()?;
        let t = &self.time;
        if !(t.t_end >= 0.0 && t.t_end.is_finite()) {
            bail!(
                "time.t_end = {} is out of range: expected >= 0 and finite",
                t.t_end
            );
        }
        if !(t.cadence > 0.0 && t.cadence.is_finite()) {
            bail!("time.cadence = {} is out of range: expected > 0", t.cadence);
        }
        if self.numerics.threads == 0 {
            bail!("numerics.threads = 0 is out of range: expected >= 1");
        }
        let d = &self.diagnostics;
        if !(1..=3).contains(&d.r_max) {
            bail!(
                "diagnostics.r_max = {} is out of range: expected an integer in 1..=3",
                d.r_max
            );
        }
        if d.mu_tol.is_nan() || d.mu_tol < 0.0 {
            bail!("diagnostics.mu_tol = {} is out of range: expected >= 0", d.mu_tol);
        }
        let s = self.initial.mass_scale;
        if !(s > 0.0 && s.is_finite()) {
            bail!("initial.mass_scale = {s} is out of range: expected > 0");
        }
        if let Some(a) = self.initial.a {
            if !(a >= 0.0 && a.is_finite()) {
                bail!("initial.a = {a} is out of range: expected >= 0");
            }
        }
        for (name, p) in [
            ("u", &self.initial.u),
            ("v", &self.initial.v),
            ("w", &self.initial.w),
        ] {
            validate_preset(name, p)?;
        }
        if self.output.svg_max < 2 {
            bail!(
                "output.svg_max = {} is out of range: expected >= 2",
                self.output.svg_max
            );
        }
        Ok(())
    }
}

fn validate_preset(field: &str, p: &Preset) -> Result<()> {
    let finite = |name: &str, v: f64| -> Result<()> {
        if v.is_finite() {
            Ok(())
        } else {
            bail!("initial.{field}.{name} = {v} is out of range: expected a finite number")
        }
    };
    match p {
        Preset::Homogeneous { value } => finite("value", *value),
        Preset::Cosine { mean, amplitude, .. } => {
            finite("mean", *mean)?;
            finite("amplitude", *amplitude)
        }
        Preset::Gaussian {
            bumps,
            background,
            mass,
        } => {
            finite("background", *background)?;
            if bumps.is_empty() {
                bail!("initial.{field}.bumps is empty: expected at least one bump");
            }
            for b in bumps {
                finite("bumps.x", b.x)?;
                finite("bumps.y", b.y)?;
                finite("bumps.amplitude", b.amplitude)?;
                if !(b.width > 0.0 && b.width.is_finite()) {
                    bail!(
                        "initial.{field}.bumps.width = {} is out of range: expected > 0",
                        b.width
                    );
                }
            }
            if let Some(m) = mass {
                if !(*m > 0.0 && m.is_finite()) {
                    bail!("initial.{field}.mass = {m} is out of range: expected > 0");
                }
            }
            Ok(())
        }
        Preset::Random { mean, amplitude } => {
            finite("mean", *mean)?;
            finite("amplitude", *amplitude)
        }
        Preset::File { .. } => Ok(()),
    }
}
