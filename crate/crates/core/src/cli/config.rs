//! Experiment configuration: a TOML file of flat sections, overridable from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{AlphaVariant, BoundOptions, DEFAULT_K_FLOOR};
use crate::error::{Error, Result};
use crate::geometry::GeometryModel;
use crate::pathwise::BoundaryScheme;
use crate::spectra::BoundaryCondition;

/// Which model to build and its shape parameters. Unset parameters take the catalog values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySpec {
    /// interval, square, box, disk, ball, cap, hemisphere or hemisphere3.
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec { name: "interval".into(), length: None, edges: None, radius: None, dim: None, theta: None }
    }
}

impl GeometrySpec {
    pub fn named(name: &str) -> Self {
        GeometrySpec { name: name.into(), ..Default::default() }
    }

    fn reject(&self, allowed: &[&str]) -> Result<()> {
        let set = [
            ("length", self.length.is_some()),
            ("edges", self.edges.is_some()),
            ("radius", self.radius.is_some()),
            ("dim", self.dim.is_some()),
            ("theta", self.theta.is_some()),
        ];
        for (key, present) in set {
            if present && !allowed.contains(&key) {
                return Err(Error::Config(format!("`{key}` does not apply to geometry `{}`", self.name)));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<GeometryModel> {
        let pi = std::f64::consts::PI;
        match self.name.as_str() {
            "interval" => {
                self.reject(&["length"])?;
                GeometryModel::interval(self.length.unwrap_or(pi))
            }
            "square" => {
                self.reject(&["length"])?;
                let l = self.length.unwrap_or(pi);
                GeometryModel::boxed(&[l, l])
            }
            "box" => {
                self.reject(&["edges"])?;
                GeometryModel::boxed(self.edges.as_deref().unwrap_or(&[pi, pi]))
            }
            "disk" => {
                self.reject(&["radius"])?;
                GeometryModel::disk(self.radius.unwrap_or(1.0))
            }
            "ball" => {
                self.reject(&["radius"])?;
                GeometryModel::ball(self.radius.unwrap_or(1.0))
            }
            "cap" => {
                self.reject(&["dim", "theta"])?;
                GeometryModel::spherical_cap(self.dim.unwrap_or(2), self.theta.unwrap_or(pi / 2.0))
            }
            "hemisphere" => {
                self.reject(&["dim"])?;
                GeometryModel::hemisphere(self.dim.unwrap_or(2))
            }
            "hemisphere3" => {
                self.reject(&[])?;
                GeometryModel::hemisphere(3)
            }
            other => Err(Error::Config(format!(
                "unknown geometry `{other}` (expected interval, square, box, disk, ball, cap, hemisphere or hemisphere3)"
            ))),
        }
    }
}

/// Options of the analytic constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSpec {
    pub alpha_variant: AlphaVariant,
    pub k_floor: f64,
    /// Eigenvalues at which the λ-normalised constant is tabulated.
    pub lambdas: Vec<f64>,
}

impl Default for BoundsSpec {
    fn default() -> Self {
        BoundsSpec {
            alpha_variant: AlphaVariant::Printed,
            k_floor: DEFAULT_K_FLOOR,
            lambdas: vec![1.0, 10.0, 100.0, 1e3, 1e4],
        }
    }
}

impl BoundsSpec {
    pub fn options(&self) -> BoundOptions {
        BoundOptions { alpha_variant: self.alpha_variant, k_floor: self.k_floor }
    }
}

/// Monte Carlo parameters and the target of the pathwise checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSpec {
    pub dt: f64,
    pub t: f64,
    pub paths: usize,
    pub seed: u64,
    /// Reflecting scheme for the reflecting checks; killed checks always kill at the boundary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<BoundaryScheme>,
    pub bridge_kill: bool,
    /// Chart coordinates of the start point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    /// Direction in the frame at the start point; normalised before use.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            dt: 1e-3,
            t: 0.3,
            paths: 20_000,
            seed: 1,
            scheme: None,
            bridge_kill: false,
            point: None,
            direction: None,
        }
    }
}

/// Pathwise checks run by `verify`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Martingale,
    BismutDirichlet,
    BismutNeumann,
    LocalTime,
    QNorm,
    WMoment,
}

impl CheckKind {
    pub fn id(self) -> &'static str {
        match self {
            CheckKind::Martingale => "martingale",
            CheckKind::BismutDirichlet => "bismut-dirichlet",
            CheckKind::BismutNeumann => "bismut-neumann",
            CheckKind::LocalTime => "local-time",
            CheckKind::QNorm => "q-norm",
            CheckKind::WMoment => "w-moment",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub checks: Vec<CheckKind>,
    /// Exponents of the local-time moment; defaults to `{1, 2σ}` without zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { checks: vec![CheckKind::Martingale], alphas: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Stamp SVG figures with the generation time.
    pub timestamp: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("out"), timestamp: true }
    }
}

/// Everything a run depends on. Echoed verbatim into every manifest and report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub bc: BoundaryCondition,
    /// Number of eigenpairs; each command has its own default when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    /// Mode indices of the eigenpair used by `verify`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Vec<i64>>,
    pub geometry: GeometrySpec,
    pub bounds: BoundsSpec,
    pub sim: SimSpec,
    pub verify: VerifySpec,
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            bc: BoundaryCondition::Dirichlet,
            modes: None,
            mode: None,
            geometry: GeometrySpec::default(),
            bounds: BoundsSpec::default(),
            sim: SimSpec::default(),
            verify: VerifySpec::default(),
            output: OutputSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sim;
        if !(s.dt.is_finite() && s.dt > 0.0) {
            return Err(Error::Config(format!("sim.dt = {} must be positive", s.dt)));
        }
        if !(s.t.is_finite() && s.t >= s.dt) {
            return Err(Error::Config(format!("sim.t = {} must be at least sim.dt", s.t)));
        }
        if s.paths < 100 {
            return Err(Error::Config(format!("sim.paths = {} is below the minimum of 100", s.paths)));
        }
        if !(self.bounds.k_floor.is_finite() && self.bounds.k_floor >= 0.0) {
            return Err(Error::Config(format!("bounds.k_floor = {} must be nonnegative", self.bounds.k_floor)));
        }
        if self.bounds.lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::Config("bounds.lambdas must be positive".into()));
        }
        if self.modes == Some(0) {
            return Err(Error::Config("modes must be positive".into()));
        }
        if matches!(s.scheme, Some(BoundaryScheme::CrossingKill)) {
            return Err(Error::Config("sim.scheme selects a reflecting scheme: reflect-project or reflect-exact".into()));
        }
        Ok(())
    }
}
