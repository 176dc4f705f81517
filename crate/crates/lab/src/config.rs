//! Experiment configuration. One JSON file describes one reproducible run;
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use carleman_core::geometry::{build_annulus, build_disk, BoundaryId, BoundaryRole, BoundaryTags, GridDomain};
use carleman_core::solvers::{exterior_domain, DEFAULT_TOLERANCE, DEFAULT_TRUNCATION_TOL};
use carleman_core::weights::DEFAULT_DELTA_MIN;
use carleman_core::{MetricPreset, PotentialPreset, TrigSeries};
use serde::{Deserialize, Serialize};

use crate::error::LabError;
use crate::Command;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub geometry: Option<GeometryConfig>,
    #[serde(default)]
    pub metric: MetricPreset,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub weight: Option<WeightConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub admissible: Option<AdmissibleConfig>,
    #[serde(default)]
    pub study: Option<StudyConfig>,
    #[serde(default)]
    pub data: Option<DataConfig>,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    Annulus {
        r_inner: f64,
        r_outer: f64,
        n_r: usize,
        n_theta: usize,
        inner: BoundaryRole,
        outer: BoundaryRole,
    },
    /// Interior problems: `S` is the boundary circle, `Gamma` an inner circle.
    Disk {
        radius: f64,
        n_r: usize,
        n_theta: usize,
        gamma_radius: f64,
    },
    /// Exterior problems truncated at `solver.r_inf`.
    Exterior {
        r_s: f64,
        n_r: usize,
        n_theta: usize,
        gamma_radius: f64,
    },
}

impl GeometryConfig {
    pub fn gamma_radius(&self) -> Option<f64> {
        match *self {
            GeometryConfig::Annulus { .. } => None,
            GeometryConfig::Disk { gamma_radius, .. } | GeometryConfig::Exterior { gamma_radius, .. } => {
                Some(gamma_radius)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub p: PotentialPreset,
    /// Lower bound `p >= eta`; must be positive for exterior problems.
    #[serde(default)]
    pub eta: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            p: PotentialPreset::default(),
            eta: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    /// Boundary where the weight vanishes.
    pub upsilon: BoundaryId,
    pub gammas: Vec<f64>,
    pub s_values: Vec<f64>,
    #[serde(default = "default_delta_min")]
    pub delta_min: f64,
    /// Repeat the sweep on a grid refined by two in every direction.
    #[serde(default = "yes")]
    pub refine: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_truncation_tol")]
    pub truncation_tol: f64,
    /// Outer radius of the truncated exterior domain.
    #[serde(default)]
    pub r_inf: Option<f64>,
    #[serde(default = "one")]
    pub t_final: f64,
    /// Time steps; `dt = t_final / n_t`.
    #[serde(default = "default_n_t")]
    pub n_t: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            truncation_tol: DEFAULT_TRUNCATION_TOL,
            r_inf: None,
            t_final: 1.0,
            n_t: default_n_t(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibleConfig {
    pub alpha: f64,
    pub beta: f64,
    pub fourier_degree: usize,
    #[serde(default)]
    pub time_degree: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub count: usize,
    /// Window cut-off for the parabolic numerator; defaults to `T / 4`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "yes")]
    pub refine: bool,
}

/// Boundary data for `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    Elliptic {
        trace: TrigSeries,
    },
    /// `g(t, theta) = (1 + sum_m time[m-1] (1 - cos(m pi t / T))) space(theta)`
    Parabolic {
        #[serde(default)]
        time: Vec<f64>,
        space: TrigSeries,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Worker pool width; `CARLEMAN_LAB_THREADS` overrides it.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_delta_min() -> f64 {
    DEFAULT_DELTA_MIN
}
fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}
fn default_truncation_tol() -> f64 {
    DEFAULT_TRUNCATION_TOL
}
fn default_n_t() -> usize {
    128
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), LabError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite (got {v})")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn geometry(&self) -> Result<&GeometryConfig, LabError> {
        self.geometry.as_ref().ok_or_else(|| invalid("missing geometry block"))
    }

    pub fn weight(&self) -> Result<&WeightConfig, LabError> {
        self.weight.as_ref().ok_or_else(|| invalid("missing weight block"))
    }

    pub fn admissible(&self) -> Result<&AdmissibleConfig, LabError> {
        self.admissible.as_ref().ok_or_else(|| invalid("missing admissible block"))
    }

    pub fn study(&self) -> Result<&StudyConfig, LabError> {
        self.study.as_ref().ok_or_else(|| invalid("missing study block"))
    }

    pub fn epsilon(&self) -> f64 {
        self.study
            .and_then(|s| s.epsilon)
            .unwrap_or(0.25 * self.solver.t_final)
    }

    /// Builds the grid described by the geometry block.
    pub fn domain(&self) -> Result<GridDomain, LabError> {
        let dom = match *self.geometry()? {
            GeometryConfig::Annulus {
                r_inner,
                r_outer,
                n_r,
                n_theta,
                inner,
                outer,
            } => build_annulus(r_inner, r_outer, n_r, n_theta, BoundaryTags::annulus(inner, outer)),
            GeometryConfig::Disk {
                radius, n_r, n_theta, ..
            } => build_disk(radius, n_r, n_theta, BoundaryRole::S),
            GeometryConfig::Exterior { r_s, n_r, n_theta, .. } => {
                let r_inf = self
                    .solver
                    .r_inf
                    .ok_or_else(|| invalid("exterior geometry needs solver.r_inf"))?;
                exterior_domain(r_s, r_inf, n_r, n_theta)
            }
        };
        dom.map_err(|e| invalid(format!("geometry: {e}")))
    }

    /// Checks everything `cmd` needs before any numerical work starts.
    pub fn validate(&self, cmd: Command) -> Result<(), LabError> {
        self.metric
            .validate()
            .map_err(|e| invalid(format!("metric: {e}")))?;
        positive("solver.tolerance", self.solver.tolerance)?;
        positive("solver.truncation_tol", self.solver.truncation_tol)?;
        positive("solver.t_final", self.solver.t_final)?;
        if !(self.potential.eta >= 0.0 && self.potential.eta.is_finite()) {
            return Err(invalid("potential.eta must be finite and nonnegative"));
        }
        if cmd == Command::OracleCheck {
            return Ok(());
        }
        let geometry = self.geometry()?;
        let dom = self.domain()?;
        match cmd {
            Command::VerifyCarleman | Command::VerifyParabolic => {
                if !matches!(geometry, GeometryConfig::Annulus { .. }) {
                    return Err(invalid("Carleman sweeps run on an annulus geometry"));
                }
                let w = self.weight()?;
                if w.gammas.is_empty() || w.s_values.is_empty() {
                    return Err(invalid("weight.gammas and weight.s_values must be nonempty"));
                }
                for &v in w.gammas.iter().chain(&w.s_values) {
                    positive("weight grid values", v)?;
                }
                positive("weight.delta_min", w.delta_min)?;
                if cmd == Command::VerifyParabolic && self.solver.n_t < 16 {
                    return Err(invalid("solver.n_t must be at least 16 for parabolic weights"));
                }
            }
            Command::Solve => {
                let data = self.data.as_ref().ok_or_else(|| invalid("missing data block"))?;
                self.check_gamma(&dom)?;
                if matches!(data, DataConfig::Parabolic { .. }) {
                    self.check_parabolic(geometry)?;
                }
            }
            Command::Stability => {
                if matches!(geometry, GeometryConfig::Annulus { .. }) {
                    return Err(invalid("stability studies use a disk or exterior geometry"));
                }
                self.check_gamma(&dom)?;
                self.check_admissible()?;
                self.study()?;
            }
            Command::ParabolicStability => {
                self.check_parabolic(geometry)?;
                self.check_gamma(&dom)?;
                self.check_admissible()?;
                self.study()?;
                let eps = self.epsilon();
                if !(eps > 0.0 && eps < 0.5 * self.solver.t_final) {
                    return Err(invalid("study.epsilon must lie in (0, T/2)"));
                }
            }
            Command::OracleCheck => {}
        }
        Ok(())
    }

    fn check_gamma(&self, dom: &GridDomain) -> Result<(), LabError> {
        let r = self
            .geometry()?
            .gamma_radius()
            .ok_or_else(|| invalid("geometry needs gamma_radius"))?;
        match dom.ring_at_radius(r) {
            Some(ring) if !dom.is_boundary_ring(ring) => Ok(()),
            _ => Err(invalid(format!("gamma_radius = {r} is not an interior grid ring"))),
        }
    }

    fn check_parabolic(&self, geometry: &GeometryConfig) -> Result<(), LabError> {
        if !matches!(geometry, GeometryConfig::Disk { .. }) {
            return Err(invalid("parabolic problems use a disk geometry"));
        }
        if self.solver.n_t < 64 {
            return Err(invalid("solver.n_t must be at least 64"));
        }
        Ok(())
    }

    fn check_admissible(&self) -> Result<(), LabError> {
        let a = self.admissible()?;
        positive("admissible.alpha", a.alpha)?;
        if !(a.beta >= 0.0 && a.beta.is_finite()) {
            return Err(invalid("admissible.beta must be finite and nonnegative"));
        }
        Ok(())
    }
}
