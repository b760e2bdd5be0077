use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec};
use crate::observable::Observable;
use crate::oracle::{sector_dimension, BASIS_CAP, STATISTICS_CAP};
use crate::potential::{Potential, PotentialKind};

/// Largest grid (total points) the runners accept; observables are dense.
pub const GRID_CAP: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub potential: PotentialKind,
    pub initial: InitialState,
    pub observable: ObservableSpec,
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub ldp: LdpConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub dim: usize,
    pub points: usize,
    pub length: f64,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    /// Normalized Gaussian; `center` has one entry per axis.
    Gaussian { center: Vec<f64>, width: f64 },
    /// Normalized superposition of plane waves along the first axis.
    ModeMixture { coefficients: Vec<ModeCoefficient> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCoefficient {
    pub mode: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservableSpec {
    Identity,
    /// Multiplication by `amplitude·cos(2π mode x/L)`.
    Cosine { amplitude: f64, mode: i64 },
    /// `weight·|e_k⟩⟨e_k|` for the plane wave of the given mode.
    Projector { mode: i64, weight: f64 },
    /// Fourier multiplier `1/(1 + scale·k²)`.
    Smoothing { scale: f64 },
    /// Hermitian matrix read from a CSV of `re,im` rows (row-major).
    Matrix { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    /// Observation times, increasing.
    pub times: Vec<f64>,
    /// Hartree step; must divide every time.
    pub tau: f64,
    /// Fluctuation RK4 step in units of `tau`.
    #[serde(default = "one")]
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_particles")]
    pub particles: Vec<usize>,
    /// Krylov step.
    #[serde(default = "default_oracle_tau")]
    pub tau: f64,
    #[serde(default = "default_subspace")]
    pub subspace: usize,
    #[serde(default = "default_krylov_tolerance")]
    pub tolerance: f64,
    /// Degree of the polynomial in `1/N` used for extrapolation.
    #[serde(default = "default_degree")]
    pub extrapolation_degree: usize,
}

fn default_particles() -> Vec<usize> {
    (2..=6).collect()
}
fn default_oracle_tau() -> f64 {
    0.02
}
fn default_subspace() -> usize {
    20
}
fn default_krylov_tolerance() -> f64 {
    1e-10
}
fn default_degree() -> usize {
    3
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            particles: default_particles(),
            tau: default_oracle_tau(),
            subspace: default_subspace(),
            tolerance: default_krylov_tolerance(),
            extrapolation_degree: default_degree(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridRange {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                let s = k as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + s * (self.stop - self.start),
                    Spacing::Geometric => self.start * (self.stop / self.start).powf(s),
                }
            })
            .collect()
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = self.count >= 1
            && self.start.is_finite()
            && self.stop.is_finite()
            && self.start >= 0.0
            && (self.count == 1 || self.stop > self.start)
            && (self.spacing == Spacing::Linear || self.start > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{what}: need 0 ≤ start < stop, count ≥ 1, and start > 0 for geometric spacing"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpConfig {
    /// λ grid for log-MGF tables; `0` is prepended.
    #[serde(default = "default_lambdas")]
    pub lambdas: GridRange,
    /// Deviations `x > 0` for tail and rate tables.
    #[serde(default = "default_xs")]
    pub xs: GridRange,
    #[serde(default = "default_constant")]
    pub c1: f64,
    #[serde(default = "default_constant")]
    pub c2: f64,
    /// Points in the one-decade residual fit below the λ window.
    #[serde(default = "default_fit_points")]
    pub fit_points: usize,
}

fn default_lambdas() -> GridRange {
    GridRange {
        start: 0.01,
        stop: 1.0,
        count: 13,
        spacing: Spacing::Geometric,
    }
}
fn default_xs() -> GridRange {
    GridRange {
        start: 0.02,
        stop: 0.4,
        count: 20,
        spacing: Spacing::Linear,
    }
}
fn default_constant() -> f64 {
    1.0
}
fn default_fit_points() -> usize {
    8
}

impl Default for LdpConfig {
    fn default() -> Self {
        Self {
            lambdas: default_lambdas(),
            xs: default_xs(),
            c1: 1.0,
            c2: 1.0,
            fit_points: default_fit_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    /// Seed for randomized checks only; the runs themselves are deterministic.
    #[serde(default)]
    pub seed: u64,
}

fn default_directory() -> String {
    "out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            seed: 0,
        }
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks that do not depend on which run is requested.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid_spec()?;
        if grid.len() > GRID_CAP {
            return Err(Error::Config(format!("grid has {} points, above the cap {GRID_CAP}", grid.len())));
        }
        let d = &self.dynamics;
        if d.times.is_empty() {
            return Err(Error::Config("dynamics.times is empty".into()));
        }
        if !(d.tau > 0.0 && d.tau.is_finite()) {
            return Err(Error::Config(format!("dynamics.tau must be positive, got {}", d.tau)));
        }
        if d.stride == 0 {
            return Err(Error::Config("dynamics.stride must be positive".into()));
        }
        let mut prev = f64::NEG_INFINITY;
        for &t in &d.times {
            if !(t >= 0.0 && t.is_finite()) || t <= prev {
                return Err(Error::Config("dynamics.times must be non-negative and increasing".into()));
            }
            prev = t;
            let steps = crate::hartree::step_count(t, d.tau).map_err(config_err)?;
            if steps % d.stride != 0 {
                return Err(Error::Config(format!(
                    "stride {} does not divide the {steps} steps up to t = {t}",
                    d.stride
                )));
            }
        }
        self.ldp.lambdas.validate("ldp.lambdas")?;
        self.ldp.xs.validate("ldp.xs")?;
        if !(self.ldp.c1 > 0.0 && self.ldp.c2 > 0.0) {
            return Err(Error::Config("ldp.c1 and ldp.c2 must be positive".into()));
        }
        if self.ldp.fit_points < 3 {
            return Err(Error::Config("ldp.fit_points must be at least 3".into()));
        }
        if let InitialState::Gaussian { center, .. } = &self.initial {
            if center.len() != grid.dim() {
                return Err(Error::Config(format!(
                    "initial.center needs {} entries, got {}",
                    grid.dim(),
                    center.len()
                )));
            }
        }
        // builds and validates the remaining pieces
        self.potential()?;
        self.initial_state()?;
        if !matches!(self.observable, ObservableSpec::Matrix { .. }) {
            self.observable()?;
        }
        Ok(())
    }

    /// Extra checks for runs that touch the many-body oracle.
    pub fn validate_oracle(&self) -> Result<()> {
        let grid = self.grid_spec()?;
        let o = &self.oracle;
        if grid.dim() != 1 {
            return Err(Error::Config("the oracle needs a one-dimensional grid".into()));
        }
        if o.particles.is_empty() || o.particles.windows(2).any(|w| w[0] >= w[1]) || o.particles[0] == 0 {
            return Err(Error::Config("oracle.particles must be positive and increasing".into()));
        }
        let cap = BASIS_CAP.min(STATISTICS_CAP) as u128;
        for &n in &o.particles {
            let dim = sector_dimension(grid.points(), n);
            if dim > cap {
                return Err(Error::Config(format!(
                    "N = {n} on {} modes has sector dimension {dim}, above the cap {cap}",
                    grid.points()
                )));
            }
        }
        if !(o.tau > 0.0) || o.subspace < 2 || !(o.tolerance > 0.0) {
            return Err(Error::Config("oracle.tau and oracle.tolerance must be positive, subspace ≥ 2".into()));
        }
        if o.extrapolation_degree >= o.particles.len() {
            return Err(Error::Config(format!(
                "extrapolation degree {} needs more than {} particle numbers",
                o.extrapolation_degree,
                o.particles.len()
            )));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.dim, self.grid.points, self.grid.length).map_err(config_err)
    }

    pub fn potential(&self) -> Result<Potential> {
        Potential::new(self.potential.clone(), self.grid_spec()?).map_err(config_err)
    }

    pub fn initial_state(&self) -> Result<ComplexField> {
        let grid = self.grid_spec()?;
        match &self.initial {
            InitialState::Gaussian { center, width } => {
                let c = [center[0], center.get(1).copied().unwrap_or(0.0)];
                ComplexField::gaussian(grid, c, *width).map_err(config_err)
            }
            InitialState::ModeMixture { coefficients } => {
                let mut f = ComplexField::zeros(grid);
                for c in coefficients {
                    f.axpy(Complex64::new(c.re, c.im), &ComplexField::plane_wave(grid, [c.mode, 0]));
                }
                f.normalize()
                    .map_err(|_| Error::Config("initial mode mixture has zero norm".into()))?;
                Ok(f)
            }
        }
    }

    /// Relative paths in the observable spec resolve against `base`.
    pub fn observable_in(&self, base: &Path) -> Result<Observable> {
        let grid = self.grid_spec()?;
        let built = match &self.observable {
            ObservableSpec::Identity => Ok(Observable::identity(grid)),
            ObservableSpec::Cosine { amplitude, mode } => Observable::cosine(grid, *amplitude, *mode),
            ObservableSpec::Projector { mode, weight } => {
                Observable::projector(&ComplexField::plane_wave(grid, [*mode, 0]), *weight)
            }
            ObservableSpec::Smoothing { scale } => {
                if !(*scale >= 0.0) {
                    return Err(Error::Config(format!("smoothing scale must be non-negative, got {scale}")));
                }
                let s = *scale;
                Ok(Observable::fourier_multiplier(grid, move |k2| 1.0 / (1.0 + s * k2)))
            }
            ObservableSpec::Matrix { path } => Observable::from_csv(grid, base.join(path)),
        };
        built.map_err(config_err)
    }

    pub fn observable(&self) -> Result<Observable> {
        self.observable_in(Path::new("."))
    }

    pub fn max_time(&self) -> f64 {
        self.dynamics.times.last().copied().unwrap_or(0.0)
    }
}
