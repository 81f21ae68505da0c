//! Monte Carlo checks of the martingale, the derivative formulas, and the
//! local-time and transport bounds, with their manifest records.

use serde::{Deserialize, Serialize};

use super::{estimate, run_paths, simulate_path, simulate_path_with, BoundaryScheme, McEstimate, PathState, SimConfig};
use crate::bounds::{local_time_moment_bound, HData};
use crate::error::{Error, Result};
use crate::geometry::{GeometryModel, Mat4, Vec4, BOUNDARY_TOL};
use crate::spectra::{BoundaryCondition, EigenPair};

/// Coefficient `c` of the discretisation allowance `c·√dt·|M₀|` in the drift gate.
pub const DRIFT_ALLOWANCE: f64 = 10.0;
/// Fixed part of the pathwise slack in `|Q_t| ≤ e^{K₀t/2}`; `10·dt` is added per run.
pub const Q_NORM_SLACK: f64 = 1e-6;

fn unit_tangent(g: &GeometryModel, x: &Vec4, v: &Vec4) -> Result<Vec4> {
    if !g.contains(x) {
        return Err(Error::Domain(format!("{:?} is not in the {}", x.as_slice(), g.name)));
    }
    let p = g.tangent_projector(x);
    if (p * v - v).norm() > 1e-9 || (v.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Argument("direction must be a unit tangent vector".into()));
    }
    Ok(p * v)
}

fn require_bc(e: &EigenPair, bc: BoundaryCondition) -> Result<()> {
    if e.bc != bc {
        return Err(Error::Argument(format!("a {bc} eigenpair is required")));
    }
    Ok(())
}

fn require_k0(cfg: &SimConfig) -> Result<()> {
    let k0 = cfg.k_schedule.eval(0.0, cfg.horizon).0;
    if (k0 - 1.0).abs() > 1e-12 {
        return Err(Error::Argument(format!("the control must satisfy k(0) = 1, got {k0}")));
    }
    Ok(())
}

/// `e^{λT/2}[Hess φ(Q(k(T)v), Qv) + dφ(W) − dφ(Qv)·Z]` at the stopping time `T` of the state.
pub fn martingale_value(e: &EigenPair, s: &PathState, cfg: &SimConfig) -> f64 {
    let (_, grad, hess) = e.eval_all(&s.position);
    let u = s.transported();
    let (k, _) = cfg.k_schedule.eval(s.time, cfg.horizon);
    let bracket = k * u.dot(&(hess * u)) + grad.dot(&s.w) - grad.dot(&u) * s.stoch_int;
    (0.5 * e.lambda * s.time).exp() * bracket
}

/// One named gate in a run manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub geometry: String,
    pub passed: bool,
    pub mean: f64,
    pub stderr: f64,
    pub reference: f64,
    /// Largest admissible `|mean − reference|`, or the admissible excess for one-sided gates.
    pub tolerance: f64,
    pub paths: usize,
    pub detail: String,
}

/// Effective configuration and outcomes of a verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub all_passed: bool,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64, checks: Vec<CheckRecord>) -> Self {
        let all_passed = checks.iter().all(|c| c.passed);
        RunManifest { command: command.into(), config, seed, checks, all_passed }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }

    /// Names of the failing checks.
    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| format!("{} ({})", c.name, c.geometry)).collect()
    }
}

/// Outcome of the martingale drift test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleCheck {
    /// `k(0) Hess φ(v, v)`.
    pub m0: f64,
    pub e_mt: McEstimate,
    /// `3 SE + c√dt|M₀|`.
    pub allowance: f64,
    pub passed: bool,
    pub warning: Option<String>,
}

impl MartingaleCheck {
    pub fn record(&self, name: &str, geometry: &str) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            geometry: geometry.into(),
            passed: self.passed,
            mean: self.e_mt.mean,
            stderr: self.e_mt.stderr,
            reference: self.m0,
            tolerance: self.allowance,
            paths: self.e_mt.paths,
            detail: self.warning.clone().unwrap_or_default(),
        }
    }
}

/// Simulates the martingale of the Dirichlet Hessian formula up to `t ∧ τ`.
pub fn martingale_check_dirichlet(g: &GeometryModel, e: &EigenPair, x: &Vec4, v: &Vec4, cfg: &SimConfig) -> Result<MartingaleCheck> {
    require_bc(e, BoundaryCondition::Dirichlet)?;
    if cfg.boundary_scheme.is_reflecting() {
        return Err(Error::Argument("the Dirichlet martingale needs the killing scheme".into()));
    }
    let v = unit_tangent(g, x, v)?;
    let warning = (g.rho(x) <= BOUNDARY_TOL)
        .then(|| "starting point is on the boundary; the identity is tautological since τ = 0".to_string());
    let k0 = cfg.k_schedule.eval(0.0, cfg.horizon).0;
    let m0 = k0 * v.dot(&(e.hessian(x) * v));
    let e_mt = estimate(g, x, &v, cfg, |s| martingale_value(e, s, cfg))?;
    let allowance = 3.0 * e_mt.stderr + DRIFT_ALLOWANCE * cfg.dt.sqrt() * m0.abs();
    let passed = (e_mt.mean - m0).abs() <= allowance;
    Ok(MartingaleCheck { m0, e_mt, allowance, passed, warning })
}

/// Monte Carlo Hessian against the closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BismutComparison {
    pub estimate: McEstimate,
    pub truth: f64,
    /// Relative part of the gate `max(3 SE, rel_tol·|truth|)`.
    pub rel_tol: f64,
    pub passed: bool,
}

impl BismutComparison {
    fn new(estimate: McEstimate, truth: f64, rel_tol: f64) -> Self {
        let tol = (3.0 * estimate.stderr).max(rel_tol * truth.abs());
        let passed = (estimate.mean - truth).abs() <= tol;
        BismutComparison { estimate, truth, rel_tol, passed }
    }

    pub fn tolerance(&self) -> f64 {
        (3.0 * self.estimate.stderr).max(self.rel_tol * self.truth.abs())
    }

    pub fn relative_error(&self) -> f64 {
        (self.estimate.mean - self.truth).abs() / self.truth.abs()
    }

    pub fn record(&self, name: &str, geometry: &str) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            geometry: geometry.into(),
            passed: self.passed,
            mean: self.estimate.mean,
            stderr: self.estimate.stderr,
            reference: self.truth,
            tolerance: self.tolerance(),
            paths: self.estimate.paths,
            detail: format!("relative error {:.3e}", self.relative_error()),
        }
    }
}

/// Relative tolerance of the Hessian-formula gates: 2% on boxes and intervals, 5% otherwise.
pub fn bismut_rel_tol(g: &GeometryModel) -> f64 {
    use crate::geometry::Shape;
    match g.shape {
        Shape::Interval { .. } | Shape::Box { .. } => 0.02,
        _ => 0.05,
    }
}

/// Expectation form of the Dirichlet Hessian formula at `(x, v)`.
pub fn hessian_via_bismut_dirichlet(g: &GeometryModel, e: &EigenPair, x: &Vec4, v: &Vec4, cfg: &SimConfig) -> Result<BismutComparison> {
    require_k0(cfg)?;
    let m = martingale_check_dirichlet(g, e, x, v, cfg)?;
    Ok(BismutComparison::new(m.e_mt, m.m0, bismut_rel_tol(g)))
}

/// `e^{λt/2} E[Hess φ(Q̃(k(t)v), Q̃v) + dφ(W̃) − dφ(Q̃v)·Z]` for a Neumann pair, using `P_tφ = e^{−λt/2}φ`.
pub fn hessian_via_bismut_neumann(g: &GeometryModel, e: &EigenPair, x: &Vec4, v: &Vec4, cfg: &SimConfig) -> Result<BismutComparison> {
    require_bc(e, BoundaryCondition::Neumann)?;
    if !cfg.boundary_scheme.is_reflecting() {
        return Err(Error::Argument("the Neumann formula needs a reflecting scheme".into()));
    }
    if g.is_curved() {
        return Err(Error::Capability("reflecting motion is only implemented for flat models".into()));
    }
    let v = unit_tangent(g, x, v)?;
    let truth = v.dot(&(e.hessian(x) * v));
    let est = estimate(g, x, &v, cfg, |s| martingale_value(e, s, cfg))?;
    Ok(BismutComparison::new(est, truth, bismut_rel_tol(g)))
}

/// MC mean of `e^{αl_t/2}` against its certified bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeCheck {
    pub alpha: f64,
    pub mc: McEstimate,
    pub bound: f64,
    pub passed: bool,
}

impl LocalTimeCheck {
    pub fn record(&self, name: &str, geometry: &str) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            geometry: geometry.into(),
            passed: self.passed,
            mean: self.mc.mean,
            stderr: self.mc.stderr,
            reference: self.bound,
            tolerance: 3.0 * self.mc.stderr,
            paths: self.mc.paths,
            detail: format!("alpha = {}", self.alpha),
        }
    }
}

/// Exponential local-time moment at the horizon; passes if the mean is within 3 SE of the bound or below.
pub fn local_time_moment_check(g: &GeometryModel, x: &Vec4, alpha: f64, cfg: &SimConfig, h: HData) -> Result<LocalTimeCheck> {
    if !cfg.boundary_scheme.is_reflecting() {
        return Err(Error::Argument("the local-time check needs a reflecting scheme".into()));
    }
    if !(alpha >= 0.0) {
        return Err(Error::Argument(format!("alpha = {alpha} must be nonnegative")));
    }
    let v = g.frame(x).column(0).into_owned();
    let mc = estimate(g, x, &v, cfg, |s| (0.5 * alpha * s.local_time).exp())?;
    let bound = local_time_moment_bound(h, alpha, cfg.horizon);
    let passed = mc.mean <= bound + 3.0 * mc.stderr;
    Ok(LocalTimeCheck { alpha, mc, bound, passed })
}

fn op_norm(q: &Mat4) -> f64 {
    (q.transpose() * q).symmetric_eigenvalues().max().max(0.0).sqrt()
}

/// Pathwise check of `|Q_t| ≤ e^{K₀t/2}` at every step of every path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QNormCheck {
    /// Largest `|Q_t| e^{−K₀t/2} − 1` seen.
    pub max_excess: f64,
    /// `Q_NORM_SLACK + 10·dt`.
    pub slack: f64,
    /// Largest relative deviation from `e^{−κ(n−1)t/2}` on constant-curvature models.
    pub decay_rel_error: f64,
    pub paths: usize,
    pub passed: bool,
}

impl QNormCheck {
    pub fn record(&self, name: &str, geometry: &str) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            geometry: geometry.into(),
            passed: self.passed,
            mean: self.max_excess,
            stderr: 0.0,
            reference: 0.0,
            tolerance: self.slack,
            paths: self.paths,
            detail: format!("decay relative error {:.3e}", self.decay_rel_error),
        }
    }
}

/// Runs killed paths from `x` and tracks `|Q_t|` pathwise.
pub fn q_norm_check(g: &GeometryModel, x: &Vec4, cfg: &SimConfig) -> Result<QNormCheck> {
    cfg.validate()?;
    let plan = cfg.plan();
    let k0 = g.curvature_bounds.k0;
    let t = g.tensors();
    let decay = 0.5 * t.kappa * (g.dimension as f64 - 1.0);
    let v = g.frame(x).column(0).into_owned();
    let kill = SimConfig { boundary_scheme: BoundaryScheme::CrossingKill, ..cfg.clone() };
    let per_path = run_paths(cfg.paths, |i| {
        let mut excess = f64::NEG_INFINITY;
        let mut dev: f64 = 0.0;
        simulate_path_with(g, x, &v, &kill, &plan, i, |s| {
            let nq = op_norm(&s.q);
            excess = excess.max(nq * (-0.5 * k0 * s.time).exp() - 1.0);
            let expect = (-decay * s.time).exp();
            dev = dev.max((nq - expect).abs() / expect);
        })?;
        Ok((excess, dev))
    })?;
    let max_excess = per_path.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let decay_rel_error = per_path.iter().map(|p| p.1).fold(0.0, f64::max);
    let slack = Q_NORM_SLACK + 10.0 * cfg.dt;
    Ok(QNormCheck { max_excess, slack, decay_rel_error, paths: cfg.paths, passed: max_excess <= slack })
}

/// Pathwise check of `|Q̃_t| ≤ e^{K₀t/2 + σ₁l_t/2}` for reflecting paths; returns the largest excess ratio minus one.
pub fn q_tilde_norm_check(g: &GeometryModel, x: &Vec4, cfg: &SimConfig) -> Result<f64> {
    cfg.validate()?;
    if !cfg.boundary_scheme.is_reflecting() {
        return Err(Error::Argument("the reflected transport check needs a reflecting scheme".into()));
    }
    let plan = cfg.plan();
    let b = g.curvature_bounds;
    let v = g.frame(x).column(0).into_owned();
    let per_path = run_paths(cfg.paths, |i| {
        let mut excess = f64::NEG_INFINITY;
        simulate_path_with(g, x, &v, cfg, &plan, i, |s| {
            let bound = (0.5 * b.k0 * s.time + 0.5 * b.sigma1 * s.local_time).exp();
            excess = excess.max(op_norm(&s.q) / bound - 1.0);
        })?;
        Ok(excess)
    })?;
    Ok(per_path.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// `E[|W_t^k(v, v)| 1{t ≤ τ}]` against `(K₁(∫k²)^{1/2} + (K₂/2)∫|k|) e^{K₀t}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WMomentCheck {
    pub mc: McEstimate,
    pub bound: f64,
    pub passed: bool,
}

impl WMomentCheck {
    pub fn record(&self, name: &str, geometry: &str) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            geometry: geometry.into(),
            passed: self.passed,
            mean: self.mc.mean,
            stderr: self.mc.stderr,
            reference: self.bound,
            tolerance: 3.0 * self.mc.stderr,
            paths: self.mc.paths,
            detail: String::new(),
        }
    }
}

/// Moment check of the Hessian transport on killed paths.
pub fn w_moment_check(g: &GeometryModel, x: &Vec4, v: &Vec4, cfg: &SimConfig) -> Result<WMomentCheck> {
    let v = unit_tangent(g, x, v)?;
    let kill = SimConfig { boundary_scheme: BoundaryScheme::CrossingKill, ..cfg.clone() };
    let mc = estimate(g, x, &v, &kill, |s| if s.alive { s.w.norm() } else { 0.0 })?;
    let b = g.curvature_bounds;
    let (k2_int, k_abs) = cfg.k_schedule.integrals(cfg.horizon);
    let bound = (b.k1 * k2_int.sqrt() + 0.5 * b.k2 * k_abs) * (b.k0 * cfg.horizon).exp();
    let passed = mc.mean <= bound + 3.0 * mc.stderr;
    Ok(WMomentCheck { mc, bound, passed })
}

/// Mean of `τ ∧ t` for the killed motion.
pub fn exit_time_mean(g: &GeometryModel, x: &Vec4, cfg: &SimConfig) -> Result<McEstimate> {
    let v = g.frame(x).column(0).into_owned();
    let kill = SimConfig { boundary_scheme: BoundaryScheme::CrossingKill, ..cfg.clone() };
    estimate(g, x, &v, &kill, |s| s.tau.unwrap_or(s.time))
}

/// Terminal positions of reflecting paths, in path order.
pub fn terminal_positions(g: &GeometryModel, x: &Vec4, cfg: &SimConfig) -> Result<Vec<Vec4>> {
    cfg.validate()?;
    let plan = cfg.plan();
    let v = g.frame(x).column(0).into_owned();
    run_paths(cfg.paths, |i| simulate_path(g, x, &v, cfg, &plan, i).map(|s| s.position))
}

/// Collar-weight data of a model, flooring the curvature bound `k` at `k_floor`.
pub fn h_data_for(g: &GeometryModel, alpha: f64, k_floor: f64) -> Result<HData> {
    let b = g.curvature_bounds;
    crate::bounds::neumann_h_data(g.dimension, b.sigma, b.k_sect.max(k_floor), g.tubular_radius, alpha)
}
