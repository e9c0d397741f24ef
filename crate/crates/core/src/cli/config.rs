//! Scenario files.
//!
//! A scenario is a TOML document: line-oriented `[section]` headers with
//! `key = value` pairs, strings in double quotes.
//!
//! ```toml
//! [scenario]
//! name = "madelung-xcheck"
//! solver = "both"
//! t_final = 0.5
//!
//! [grid]
//! x_lo = 0.0
//! x_hi = 6.283185307179586
//! n = 256
//!
//! [physics]
//! eps2 = 2.0
//! law = { kind = "power_law", gamma = 2.0 }
//!
//! [boundary]
//! kind = "periodic"
//!
//! [initial]
//! rho = { recipe = "cosine", mean = 1.0, amplitude = 0.1 }
//! u = { recipe = "constant", value = 0.0 }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Theorem4Params;
use crate::error::{Error, Result};
use crate::numerics::{BoundaryKind, Grid1D, ScalarField, MIN_POINTS};
use crate::physics::{FluidState, Model, PressureLaw, VACUUM_FLOOR};
use crate::stationary::StationaryParams;
use crate::weights::DEFAULT_SEED;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Qhd,
    Nls,
    Both,
}

impl SolverChoice {
    pub fn runs_qhd(self) -> bool {
        matches!(self, SolverChoice::Qhd | SolverChoice::Both)
    }

    pub fn runs_nls(self) -> bool {
        matches!(self, SolverChoice::Nls | SolverChoice::Both)
    }
}

fn one() -> f64 {
    1.0
}

/// Closed-form initial density. `k` is the angular `wavenumber`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityRecipe {
    Constant { value: f64 },
    /// `mean + amplitude · cos(k (x − x_lo))`
    Cosine {
        #[serde(default = "one")]
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
    },
    /// `(mean − amplitude · cos(k (x − x_lo)))²`
    SquaredCosine {
        #[serde(default = "one")]
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
    },
}

/// Closed-form initial velocity. `k` is the angular `wavenumber`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityRecipe {
    Constant { value: f64 },
    /// `slope · (x − center)`
    Linear {
        #[serde(default = "one")]
        slope: f64,
        center: f64,
    },
    /// `amplitude · sin(k (x − x_lo))`
    Sine {
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
    },
}

impl DensityRecipe {
    pub fn eval(&self, grid: &Grid1D, x: f64) -> f64 {
        match *self {
            DensityRecipe::Constant { value } => value,
            DensityRecipe::Cosine { mean, amplitude, wavenumber } => mean + amplitude * (wavenumber * offset(grid, x)).cos(),
            DensityRecipe::SquaredCosine { mean, amplitude, wavenumber } => {
                let s = mean - amplitude * (wavenumber * offset(grid, x)).cos();
                s * s
            }
        }
    }
}

impl VelocityRecipe {
    pub fn eval(&self, grid: &Grid1D, x: f64) -> f64 {
        match *self {
            VelocityRecipe::Constant { value } => value,
            VelocityRecipe::Linear { slope, center } => slope * (x - center),
            VelocityRecipe::Sine { amplitude, wavenumber } => amplitude * (wavenumber * offset(grid, x)).sin(),
        }
    }
}

fn offset(grid: &Grid1D, x: f64) -> f64 {
    x - grid.x_lo()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default = "default_solver")]
    pub solver: SolverChoice,
    pub t_final: f64,
    /// Snapshot cadence in steps.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Seed of the sampling checks.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_solver() -> SolverChoice {
    SolverChoice::Qhd
}

fn default_record_every() -> usize {
    100
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    #[serde(default = "default_eps2")]
    pub eps2: f64,
    pub law: PressureLaw,
}

fn default_eps2() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub rho: DensityRecipe,
    pub u: VelocityRecipe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// QHD step `sigma · dx²` unless `qhd_dt` is set.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub qhd_dt: Option<f64>,
    #[serde(default = "default_nls_dt")]
    pub nls_dt: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
    /// Repeat a two-solver run on the refined grid and report the ratio.
    #[serde(default)]
    pub refine: bool,
}

fn default_sigma() -> f64 {
    0.1
}

fn default_nls_dt() -> f64 {
    1e-4
}

fn default_floor() -> f64 {
    VACUUM_FLOOR
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            sigma: default_sigma(),
            qhd_dt: None,
            nls_dt: default_nls_dt(),
            floor: default_floor(),
            refine: false,
        }
    }
}

/// Constants of the Dirichlet-velocity envelope monitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletMonitor {
    pub alpha: f64,
    pub m: f64,
    #[serde(default = "one")]
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    /// Observable envelope on bounded grids.
    #[serde(default = "yes")]
    pub observable: bool,
    #[serde(default)]
    pub dirichlet: Option<DirichletMonitor>,
}

fn yes() -> bool {
    true
}

impl Default for MonitorSection {
    fn default() -> Self {
        Self {
            observable: true,
            dirichlet: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// File stem; the scenario name when absent.
    #[serde(default)]
    pub prefix: Option<String>,
}

fn default_dir() -> String {
    ".".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            prefix: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub boundary: BoundaryKind,
    pub initial: InitialSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub monitors: MonitorSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySection {
    pub j: f64,
    pub k: f64,
    pub w0: f64,
    #[serde(default)]
    pub dw0: f64,
    pub span: f64,
    pub dx: f64,
}

/// Input of the `stationary` verb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    pub scenario: NameSection,
    pub physics: PhysicsSection,
    pub stationary: StationarySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NameSection {
    pub name: String,
}

/// A failed semantic check, located by section and key.
struct Invalid {
    section: &'static str,
    key: &'static str,
    msg: String,
}

fn invalid(section: &'static str, key: &'static str, msg: impl Into<String>) -> Invalid {
    Invalid {
        section,
        key,
        msg: msg.into(),
    }
}

/// Line of `key` inside `[section]`, or of the section header, or 0.
fn locate(src: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    let mut header = 0;
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header = i + 1;
            }
            continue;
        }
        if current == section {
            if let Some(rest) = t.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return i + 1;
                }
            }
        }
    }
    header
}

fn parse_toml<T: for<'de> Deserialize<'de>>(src: &str) -> Result<T> {
    toml::from_str(src).map_err(|e| {
        let line = e
            .span()
            .map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::Config {
            line,
            msg: e.message().to_string(),
        }
    })
}

fn located(src: &str, bad: Invalid) -> Error {
    Error::Config {
        line: locate(src, bad.section, bad.key),
        msg: format!("{}.{}: {}", bad.section, bad.key, bad.msg),
    }
}

fn check_name(name: &str) -> std::result::Result<(), Invalid> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(invalid("scenario", "name", format!("{name:?} must be non-empty [A-Za-z0-9._-]")))
    }
}

fn check_physics(p: &PhysicsSection) -> std::result::Result<(), Invalid> {
    if !(p.eps2 > 0.0 && p.eps2.is_finite()) {
        return Err(invalid("physics", "eps2", format!("must be positive, got {}", p.eps2)));
    }
    p.law.validate().map_err(|e| invalid("physics", "law", e.to_string()))
}

impl ScenarioConfig {
    /// Parses and validates a scenario document.
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let cfg: Self = parse_toml(src)?;
        cfg.check().map_err(|bad| located(src, bad))?;
        Ok(cfg)
    }

    /// Reads a scenario file, or the `config` section of a run summary.
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            let doc: serde_json::Value = serde_json::from_str(&src).map_err(|e| Error::Config {
                line: e.line(),
                msg: e.to_string(),
            })?;
            let cfg: Self = serde_json::from_value(doc.get("config").cloned().unwrap_or(doc))
                .map_err(|e| Error::Config { line: 0, msg: e.to_string() })?;
            cfg.check().map_err(|bad| located("", bad))?;
            return Ok(cfg);
        }
        Self::from_toml_str(&src)
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|bad| located("", bad))
    }

    fn check(&self) -> std::result::Result<(), Invalid> {
        let s = &self.scenario;
        check_name(&s.name)?;
        if !(s.t_final > 0.0 && s.t_final.is_finite()) {
            return Err(invalid("scenario", "t_final", format!("must be positive, got {}", s.t_final)));
        }
        if s.record_every == 0 {
            return Err(invalid("scenario", "record_every", "must be at least 1"));
        }
        if let Some(p) = &self.output.prefix {
            check_name(p).map_err(|b| invalid("output", "prefix", b.msg))?;
        }
        let g = &self.grid;
        if !(g.x_lo.is_finite() && g.x_hi.is_finite() && g.x_lo < g.x_hi) {
            return Err(invalid("grid", "x_hi", "need finite x_lo < x_hi"));
        }
        if g.n < MIN_POINTS {
            return Err(invalid("grid", "n", format!("need at least {MIN_POINTS} points, got {}", g.n)));
        }
        check_physics(&self.physics)?;
        self.boundary
            .validate()
            .map_err(|e| invalid("boundary", "kind", e.to_string()))?;

        let sv = &self.solver;
        if !(sv.sigma > 0.0 && sv.sigma <= 1.0) {
            return Err(invalid("solver", "sigma", format!("must lie in (0, 1], got {}", sv.sigma)));
        }
        if let Some(dt) = sv.qhd_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("solver", "qhd_dt", format!("must be positive, got {dt}")));
            }
        }
        if !(sv.nls_dt > 0.0 && sv.nls_dt.is_finite()) {
            return Err(invalid("solver", "nls_dt", format!("must be positive, got {}", sv.nls_dt)));
        }
        if !(sv.floor >= 0.0 && sv.floor.is_finite()) {
            return Err(invalid("solver", "floor", "must be non-negative"));
        }
        if s.solver.runs_nls() {
            let ok = match self.boundary {
                BoundaryKind::Periodic | BoundaryKind::Monitored { .. } => true,
                BoundaryKind::NeumannDensityDirichletVelocity { u0, u1 } => u0 == 0.0 && u1 == 0.0,
            };
            if !ok {
                return Err(invalid(
                    "scenario",
                    "solver",
                    "the wave solver supports periodic or zero-velocity walls only",
                ));
            }
        }
        if let Some(d) = &self.monitors.dirichlet {
            self.dirichlet_params(d)
                .validate()
                .map_err(|e| invalid("monitors", "dirichlet", e.to_string()))?;
            if !matches!(self.boundary, BoundaryKind::NeumannDensityDirichletVelocity { .. }) {
                return Err(invalid(
                    "monitors",
                    "dirichlet",
                    "needs boundary kind neumann_density_dirichlet_velocity",
                ));
            }
            if !s.solver.runs_qhd() {
                return Err(invalid("monitors", "dirichlet", "runs on the hydrodynamic solver only"));
            }
        }
        let grid = self.grid().map_err(|e| invalid("grid", "n", e.to_string()))?;
        let rho = ScalarField::from_fn(grid, |x| self.initial.rho.eval(&grid, x))
            .map_err(|e| invalid("initial", "rho", e.to_string()))?;
        if rho.min() <= sv.floor {
            return Err(invalid(
                "initial",
                "rho",
                format!("density {} is at or below the floor {}", rho.min(), sv.floor),
            ));
        }
        ScalarField::from_fn(grid, |x| self.initial.u.eval(&grid, x))
            .map_err(|e| invalid("initial", "u", e.to_string()))?;
        Ok(())
    }

    /// Output file stem.
    pub fn prefix(&self) -> &str {
        self.output.prefix.as_deref().unwrap_or(&self.scenario.name)
    }

    /// Periodic grids go with periodic boundaries.
    pub fn grid(&self) -> Result<Grid1D> {
        let g = &self.grid;
        if self.boundary.is_periodic() {
            Grid1D::periodic(g.x_lo, g.x_hi, g.n)
        } else {
            Grid1D::bounded(g.x_lo, g.x_hi, g.n)
        }
    }

    pub fn model(&self) -> Result<Model> {
        Model::new(self.physics.law.clone(), self.physics.eps2)
    }

    /// Initial state sampled on `grid`.
    pub fn initial_state(&self, grid: Grid1D) -> Result<FluidState> {
        let rho = ScalarField::from_fn(grid, |x| self.initial.rho.eval(&grid, x))?;
        let u = ScalarField::from_fn(grid, |x| self.initial.u.eval(&grid, x))?;
        FluidState::new(0.0, rho, u)
    }

    pub fn dirichlet_params(&self, d: &DirichletMonitor) -> Theorem4Params {
        let (u0, u1) = match self.boundary {
            BoundaryKind::NeumannDensityDirichletVelocity { u0, u1 } => (u0, u1),
            _ => (0.0, 0.0),
        };
        Theorem4Params {
            alpha: d.alpha,
            m: d.m,
            u0,
            u1,
            lambda: d.lambda,
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Io(e.to_string()))
    }
}

impl StationaryConfig {
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let cfg: Self = parse_toml(src)?;
        check_name(&cfg.scenario.name).map_err(|bad| located(src, bad))?;
        check_physics(&cfg.physics).map_err(|bad| located(src, bad))?;
        let st = &cfg.stationary;
        if !(st.dx > 0.0 && st.dx.is_finite()) {
            return Err(located(src, invalid("stationary", "dx", "must be positive")));
        }
        cfg.params()
            .validate()
            .map_err(|e| located(src, invalid("stationary", "w0", e.to_string())))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn params(&self) -> StationaryParams {
        let st = &self.stationary;
        StationaryParams {
            j: st.j,
            k: st.k,
            law: self.physics.law.clone(),
            w0: st.w0,
            dw0: st.dw0,
            span: st.span,
        }
    }

    pub fn prefix(&self) -> &str {
        self.output.prefix.as_deref().unwrap_or(&self.scenario.name)
    }
}
