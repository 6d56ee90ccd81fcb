//! Run configuration, read from a TOML file with strict keys.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{KForm, ModelSpec};
use crate::verify::{EnsembleSettings, Numerics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub name: String,
    pub omega: f64,
    pub delta: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            name: "two_level".into(),
            omega: 1.0,
            delta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    /// White-noise intensity.
    #[serde(rename = "D")]
    pub intensity: f64,
    pub k_form: KForm,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            intensity: 0.25,
            k_form: KForm::CosHalf,
            seed: 20_240_601,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    /// Duration of the control schedule.
    pub t_end: f64,
    pub steps: usize,
    /// Number of turns of the control around its loop.
    pub loops: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            t_end: 400.0,
            steps: 4000,
            loops: 1.0,
        }
    }
}

impl ScheduleSection {
    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    /// Eigenvalue branch, by ascending eigenvalue.
    pub branch: usize,
    pub gap_min: f64,
    pub degeneracy_tol: f64,
    pub include_aty: bool,
    /// Sub-steps per grid interval of the exact propagator.
    pub substeps: usize,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let n = Numerics::default();
        Self {
            branch: n.branch,
            gap_min: n.gap_min,
            degeneracy_tol: n.degeneracy_tol,
            include_aty: n.include_aty,
            substeps: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    #[serde(rename = "N")]
    pub n: usize,
    pub record_every: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            n: 10_000,
            record_every: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdeCheckSection {
    #[serde(rename = "N")]
    pub n: usize,
    pub alphas: Vec<f64>,
}

impl Default for SdeCheckSection {
    fn default() -> Self {
        Self {
            n: 100_000,
            alphas: vec![0.5, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdiabaticSection {
    pub durations: Vec<f64>,
    pub steps_per_time: f64,
}

impl Default for AdiabaticSection {
    fn default() -> Self {
        Self {
            durations: vec![25.0, 50.0, 100.0, 200.0, 400.0],
            steps_per_time: 10.0,
        }
    }
}

/// Sphere fixture: the latitude used by `holonomy` and the grid used by
/// `curvature`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SphereSection {
    pub latitude: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for SphereSection {
    fn default() -> Self {
        Self {
            latitude: PI / 3.0,
            theta_min: 0.2,
            theta_max: PI - 0.2,
            n_theta: 41,
            n_phi: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub noise: NoiseSection,
    pub schedule: ScheduleSection,
    pub numerics: NumericsSection,
    pub ensemble: EnsembleSection,
    pub sde_check: SdeCheckSection,
    pub adiabatic: AdiabaticSection,
    pub sphere: SphereSection,
    pub output: OutputSection,
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Configuration(msg()))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Configuration(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        require(["two_level", "sphere"].contains(&m.name.as_str()), || {
            format!("unknown model '{}'", m.name)
        })?;
        require(m.omega.is_finite() && m.omega > 0.0, || {
            format!("model.omega must be > 0, got {}", m.omega)
        })?;
        require(m.delta.is_finite(), || "model.delta must be finite".into())?;
        let n = &self.noise;
        require(n.intensity.is_finite() && n.intensity >= 0.0, || {
            format!("noise.D must be >= 0, got {}", n.intensity)
        })?;
        let s = &self.schedule;
        require(s.t_end.is_finite() && s.t_end > 0.0, || {
            format!("schedule.t_end must be > 0, got {}", s.t_end)
        })?;
        require(s.steps >= 1, || "schedule.steps must be >= 1".into())?;
        require(s.loops.is_finite() && s.loops >= 0.0, || {
            "schedule.loops must be >= 0".into()
        })?;
        let x = &self.numerics;
        require(x.gap_min.is_finite() && x.gap_min > 0.0, || {
            "numerics.gap_min must be > 0".into()
        })?;
        require(x.degeneracy_tol.is_finite() && x.degeneracy_tol > 0.0, || {
            "numerics.degeneracy_tol must be > 0".into()
        })?;
        require(x.branch < 2, || {
            "numerics.branch must be 0 or 1 for the built-in two-dimensional models".into()
        })?;
        require(x.substeps >= 1, || "numerics.substeps must be >= 1".into())?;
        require(self.ensemble.n >= 100, || {
            format!("ensemble.N must be >= 100, got {}", self.ensemble.n)
        })?;
        require(self.ensemble.record_every >= 1, || {
            "ensemble.record_every must be >= 1".into()
        })?;
        require(self.sde_check.n >= 2, || "sde_check.N must be >= 2".into())?;
        require(self.sde_check.alphas.iter().all(|a| a.is_finite()), || {
            "sde_check.alphas must be finite".into()
        })?;
        let a = &self.adiabatic;
        require(
            !a.durations.is_empty() && a.durations.iter().all(|d| d.is_finite() && *d > 0.0),
            || "adiabatic.durations must be a non-empty list of positive numbers".into(),
        )?;
        require(a.steps_per_time.is_finite() && a.steps_per_time > 0.0, || {
            "adiabatic.steps_per_time must be > 0".into()
        })?;
        let p = &self.sphere;
        let inside = |t: f64| t > 0.0 && t < PI;
        require(inside(p.latitude), || "sphere.latitude must lie in (0, pi)".into())?;
        require(
            inside(p.theta_min) && inside(p.theta_max) && p.theta_min < p.theta_max,
            || "sphere.theta_min < sphere.theta_max must lie in (0, pi)".into(),
        )?;
        require(p.n_theta >= 2 && p.n_phi >= 2, || {
            "sphere grid needs at least 2 points per axis".into()
        })?;
        Ok(())
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        ModelSpec::by_name(&self.model.name, self.model.omega, self.model.delta)
    }

    pub fn numerics(&self) -> Numerics {
        Numerics {
            branch: self.numerics.branch,
            degeneracy_tol: self.numerics.degeneracy_tol,
            gap_min: self.numerics.gap_min,
            include_aty: self.numerics.include_aty,
        }
    }

    pub fn ensemble_settings(&self) -> EnsembleSettings {
        EnsembleSettings {
            k_form: self.noise.k_form,
            intensity: self.noise.intensity,
            t_end: self.schedule.t_end,
            steps: self.schedule.steps,
            turns: self.schedule.loops,
            record_every: self.ensemble.record_every,
            numerics: self.numerics(),
        }
    }
}
