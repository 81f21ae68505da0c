//! Explicit scalar constants for Hessian bounds of Laplacian eigenfunctions.
//!
//! Everything here is a pure function of a handful of curvature and collar
//! parameters. Reports carry every intermediate so that a constant can be
//! audited term by term.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryModel;
use crate::numeric::{adaptive_simpson, bisect};

/// Below this |k| the comparison function switches to its Taylor series.
const K_SERIES: f64 = 1e-8;

/// Default floor applied to the sectional-curvature bound before collar constructions.
pub const DEFAULT_K_FLOOR: f64 = 1e-3;

/// Comparison function of the collar: cos/cosh branch for k of either sign, 1 - σt at k = 0.
pub fn ell(t: f64, sigma: f64, k: f64) -> f64 {
    if k.abs() < K_SERIES {
        let t2 = t * t;
        let s = t - k * t2 * t / 6.0 + k * k * t2 * t2 * t / 120.0;
        let c = 1.0 - k * t2 / 2.0 + k * k * t2 * t2 / 24.0;
        c - sigma * s
    } else if k > 0.0 {
        let r = k.sqrt();
        (r * t).cos() - sigma / r * (r * t).sin()
    } else {
        let r = (-k).sqrt();
        (r * t).cosh() - sigma / r * (r * t).sinh()
    }
}

/// Derivative of [`ell`] in `t`.
pub fn ell_prime(t: f64, sigma: f64, k: f64) -> f64 {
    if k.abs() < K_SERIES {
        let t2 = t * t;
        let ds = 1.0 - k * t2 / 2.0 + k * k * t2 * t2 / 24.0;
        let dc = -k * t + k * k * t2 * t / 6.0;
        dc - sigma * ds
    } else if k > 0.0 {
        let r = k.sqrt();
        -r * (r * t).sin() - sigma * (r * t).cos()
    } else {
        let r = (-k).sqrt();
        r * (r * t).sinh() - sigma * (r * t).cosh()
    }
}

/// First zero of `ell` for nonnegative σ and k; infinite when σ = k = 0.
fn ell_first_zero(sigma: f64, k: f64) -> f64 {
    if k <= 0.0 {
        if sigma > 0.0 {
            1.0 / sigma
        } else {
            f64::INFINITY
        }
    } else {
        let r = k.sqrt();
        if sigma > 0.0 {
            (r / sigma).atan() / r
        } else {
            PI / (2.0 * r)
        }
    }
}

/// Smallest `t >= 0` with `ell(t) = y`, for `y` in `[0, 1]` and σ, k ≥ 0.
///
/// Returns `+inf` when `ell` never descends to `y`.
pub fn ell_inverse(y: f64, sigma: f64, k: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) || y.is_nan() {
        return Err(Error::Argument(format!("level {y} is outside [0, 1]")));
    }
    if sigma < 0.0 || k < 0.0 || !sigma.is_finite() || !k.is_finite() {
        return Err(Error::Argument(format!(
            "sigma = {sigma} and k = {k} must be finite and nonnegative"
        )));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    let z = ell_first_zero(sigma, k);
    if !z.is_finite() {
        return Ok(f64::INFINITY);
    }
    if y == 0.0 {
        return Ok(z);
    }
    // ell is strictly decreasing on [0, z].
    let root = bisect(|t| ell(t, sigma, k) - y, 0.0, z, 1e-13 * z.max(1.0));
    Ok(root)
}

/// Log of the collar weight together with its normalising constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HProfile {
    pub log_h: f64,
    pub lambda0: f64,
}

/// Collar weight `log h(rho)` built from `ell` on `[0, r0]`, constant beyond `r0`.
pub fn h_profile(rho: f64, n: usize, sigma: f64, k: f64, r0: f64) -> Result<HProfile> {
    if sigma + k <= 0.0 {
        return Err(Error::Degenerate(
            "sigma + k = 0 makes the collar weight undefined; apply a positive k-floor".into(),
        ));
    }
    if !(rho >= 0.0) || !(r0 > 0.0) || n == 0 {
        return Err(Error::Argument(format!(
            "need rho >= 0, r0 > 0, n >= 1 (got rho = {rho}, r0 = {r0}, n = {n})"
        )));
    }
    if sigma < 0.0 || k < 0.0 {
        return Err(Error::Argument("sigma and k must be nonnegative".into()));
    }
    let zero = ell_first_zero(sigma, k);
    if r0 > zero * (1.0 + 1e-12) {
        return Err(Error::Argument(format!(
            "r0 = {r0} exceeds the first zero {zero} of the comparison function"
        )));
    }
    let l0 = ell(r0, sigma, k);
    let p = (n - 1) as i32;
    let gap = |s: f64| (ell(s, sigma, k) - l0).max(0.0);
    let inner = |s: f64| adaptive_simpson(&|u: f64| gap(u).powi(p), s.min(r0), r0, 1e-14 * r0);
    let total = inner(0.0);
    let lambda0 = (1.0 - l0).powi(-p) * total;
    let outer = |s: f64| {
        if s >= r0 {
            return 0.0;
        }
        let g = gap(s);
        if g <= 0.0 {
            return 0.0;
        }
        g.powi(-p) * inner(s)
    };
    let upper = rho.min(r0);
    let integral = adaptive_simpson(&outer, 0.0, upper, 1e-12 * r0 * r0);
    let log_h = integral / lambda0;
    Ok(HProfile {
        log_h: crate::error::finite("h_profile", log_h)?,
        lambda0: crate::error::finite("h_profile", lambda0)?,
    })
}

/// Exponential rate `n / r0 + alpha` of the local-time moment bound.
pub fn k_alpha(n: usize, r0: f64, alpha: f64) -> f64 {
    n as f64 / r0 + alpha
}

/// Upper bound `e^{n r0 / 2}` on the collar weight.
pub fn h_sup(n: usize, r0: f64) -> f64 {
    (0.5 * n as f64 * r0).exp()
}

/// Cutoff value with its first two derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Psi {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Cubic cutoff `((r0 - r) / r0)^3` on `[0, r0]`, zero beyond.
pub fn psi_cutoff(r: f64, r0: f64) -> Psi {
    if r >= r0 {
        return Psi { value: 0.0, first: 0.0, second: 0.0 };
    }
    let d = (r0 - r) / r0;
    Psi {
        value: d * d * d,
        first: -3.0 * d * d / r0,
        second: 6.0 * d / (r0 * r0),
    }
}

/// Scalar inputs of the Dirichlet constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletBoundInputs {
    pub n: usize,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub sigma: f64,
    pub k_sect: f64,
    pub r1: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
}

/// Scalar inputs of the Neumann constants.
///
/// `sigma` is the upper bound on the second fundamental form; it fixes the collar radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannBoundInputs {
    pub n: usize,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub sigma: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub k_sect: f64,
    pub r1: f64,
    pub lambda: f64,
}

/// Which bound on the Hessian of the distance function feeds the Dirichlet constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AlphaVariant {
    /// `2(n-1) max{σ, k}`.
    #[default]
    Printed,
    /// `2(n-1) max{σ, √k}`.
    Sqrt,
}

impl AlphaVariant {
    pub fn alpha(self, n: usize, sigma: f64, k: f64) -> f64 {
        let m = match self {
            AlphaVariant::Printed => sigma.max(k),
            AlphaVariant::Sqrt => sigma.max(k.sqrt()),
        };
        2.0 * (n as f64 - 1.0) * m
    }

    pub fn id(self) -> &'static str {
        match self {
            AlphaVariant::Printed => "printed",
            AlphaVariant::Sqrt => "sqrt",
        }
    }
}

impl fmt::Display for AlphaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for AlphaVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(AlphaVariant::Printed),
            "sqrt" => Ok(AlphaVariant::Sqrt),
            other => Err(Error::Argument(format!(
                "unknown alpha variant `{other}` (expected printed or sqrt)"
            ))),
        }
    }
}

/// Evaluation options shared by every bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    pub alpha_variant: AlphaVariant,
    pub k_floor: f64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions { alpha_variant: AlphaVariant::Printed, k_floor: DEFAULT_K_FLOOR }
    }
}

/// Collar weight data: sup bound and exponential rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HData {
    pub h_sup: f64,
    pub k_h: f64,
}

/// Evaluated constant with every intermediate quantity.
///
/// `constant` multiplies λ; `ratio_bound` bounds `‖Hess φ‖∞ / ‖φ‖∞` directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub formula: String,
    pub variant: String,
    pub constant: f64,
    pub ratio_bound: f64,
    pub inputs: BTreeMap<String, f64>,
    pub intermediates: BTreeMap<String, f64>,
    pub floors: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl BoundReport {
    fn new(formula: &str, variant: &str) -> Self {
        BoundReport {
            formula: formula.to_string(),
            variant: variant.to_string(),
            constant: 0.0,
            ratio_bound: 0.0,
            inputs: BTreeMap::new(),
            intermediates: BTreeMap::new(),
            floors: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Records an intermediate; infinite values go to the notes since JSON cannot hold them.
    fn put(&mut self, key: &str, v: f64) -> Result<()> {
        if v.is_finite() {
            self.intermediates.insert(key.to_string(), v);
            Ok(())
        } else if v == f64::INFINITY {
            self.notes.push(format!("{key} = inf"));
            Ok(())
        } else {
            Err(Error::NonFinite(key.to_string()))
        }
    }

    fn finish(mut self, constant: f64, ratio_bound: f64) -> Result<Self> {
        self.constant = crate::error::finite(&self.formula, constant)?;
        self.ratio_bound = crate::error::finite(&self.formula, ratio_bound)?;
        if !(self.constant > 0.0) {
            return Err(Error::Degenerate(format!("{} evaluated to {constant}", self.formula)));
        }
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields are plain data")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} = {v} must be finite and nonnegative")))
    }
}

impl DirichletBoundInputs {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Argument("dimension must be positive".into()));
        }
        for (name, v) in [
            ("K0", self.k0),
            ("K1", self.k1),
            ("K2", self.k2),
            ("sigma", self.sigma),
            ("k_sect", self.k_sect),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            check_nonneg(name, v)?;
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Argument(format!("lambda = {} must be positive", self.lambda)));
        }
        if !(self.r1 > 0.0) || !self.r1.is_finite() {
            return Err(Error::Degenerate(format!("tubular radius r1 = {} is not positive", self.r1)));
        }
        Ok(())
    }

    fn echo(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("n".to_string(), self.n as f64),
            ("K0".to_string(), self.k0),
            ("K1".to_string(), self.k1),
            ("K2".to_string(), self.k2),
            ("sigma".to_string(), self.sigma),
            ("k_sect".to_string(), self.k_sect),
            ("r1".to_string(), self.r1),
            ("beta".to_string(), self.beta),
            ("gamma".to_string(), self.gamma),
            ("lambda".to_string(), self.lambda),
        ])
    }
}

impl DirichletBoundInputs {
    /// Inputs read off a model's certified bounds; β and γ use the floored sectional bound.
    pub fn from_model(g: &GeometryModel, lambda: f64, k_floor: f64) -> Self {
        let c = g.curvature_bounds;
        let (beta, gamma) = default_beta_gamma(g.dimension, c.k_sect.max(k_floor), c.sigma);
        DirichletBoundInputs {
            n: g.dimension,
            k0: c.k0,
            k1: c.k1,
            k2: c.k2,
            sigma: c.sigma,
            k_sect: c.k_sect,
            r1: g.tubular_radius,
            beta,
            gamma,
            lambda,
        }
    }
}

impl NeumannBoundInputs {
    /// Inputs read off a model's certified bounds.
    pub fn from_model(g: &GeometryModel, lambda: f64) -> Self {
        let c = g.curvature_bounds;
        NeumannBoundInputs {
            n: g.dimension,
            k0: c.k0,
            k1: c.k1,
            k2: c.k2,
            sigma: c.sigma,
            sigma1: c.sigma1,
            sigma2: c.sigma2,
            k_sect: c.k_sect,
            r1: g.tubular_radius,
            lambda,
        }
    }
}

impl NeumannBoundInputs {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Argument("dimension must be positive".into()));
        }
        for (name, v) in [
            ("K0", self.k0),
            ("K1", self.k1),
            ("K2", self.k2),
            ("sigma", self.sigma),
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("k_sect", self.k_sect),
        ] {
            check_nonneg(name, v)?;
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Argument(format!("lambda = {} must be positive", self.lambda)));
        }
        if !(self.r1 > 0.0) || !self.r1.is_finite() {
            return Err(Error::Degenerate(format!("tubular radius r1 = {} is not positive", self.r1)));
        }
        Ok(())
    }

    fn echo(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("n".to_string(), self.n as f64),
            ("K0".to_string(), self.k0),
            ("K1".to_string(), self.k1),
            ("K2".to_string(), self.k2),
            ("sigma".to_string(), self.sigma),
            ("sigma1".to_string(), self.sigma1),
            ("sigma2".to_string(), self.sigma2),
            ("k_sect".to_string(), self.k_sect),
            ("r1".to_string(), self.r1),
            ("lambda".to_string(), self.lambda),
        ])
    }
}

/// The four constants of the boundary Hessian estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryHessianConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

/// C1..C4 for a collar of radius `r0` and distance-Hessian bound `alpha`.
pub fn boundary_hessian_constants(
    inputs: &DirichletBoundInputs,
    r0: f64,
    alpha: f64,
) -> BoundaryHessianConstants {
    let (b, g, l) = (inputs.beta, inputs.gamma, inputs.lambda);
    let d1 = 3.0 / r0;
    let d2 = 6.0 / (r0 * r0);
    BoundaryHessianConstants {
        c1: alpha,
        c2: d1 * (alpha * alpha + 2.0 * b) + d2 * alpha + l * alpha + g,
        c3: 3.0 * d1 * alpha + d2 + 3.0 * b + l,
        c4: 2.0 * d1 + 2.0 * alpha,
    }
}

/// Boundary gradient bound `e^{1/2}(α0⁺ + √(2λ/π))`, relative to `‖φ‖∞`.
pub fn boundary_gradient_bound(alpha0: f64, lambda: f64) -> f64 {
    0.5f64.exp() * (alpha0.max(0.0) + (2.0 * lambda / PI).sqrt())
}

fn gradient_coefficient() -> f64 {
    (2.0 / PI).sqrt() + 0.25 * (PI / 2.0).sqrt()
}

/// Global gradient bound `√e(α + c√(λ + K0))`, relative to `‖φ‖∞`.
pub fn global_gradient_bound(alpha: f64, k0: f64, lambda: f64) -> f64 {
    E.sqrt() * (alpha + gradient_coefficient() * (lambda + k0).sqrt())
}

/// Default β and γ for a constant-curvature collar.
pub fn default_beta_gamma(n: usize, k: f64, sigma: f64) -> (f64, f64) {
    let m = (n as f64 - 1.0) * k;
    let beta = 4.0 * (m + sigma * sigma);
    let gamma = 8.0 * sigma.max(m.sqrt()) * (m + sigma * sigma);
    (beta, gamma)
}

/// Hessian-to-sup ratio bound on a closed manifold.
pub fn closed_manifold_hessian_bound(k0: f64, k1: f64, k2: f64, lambda: f64) -> f64 {
    let s = 2.0 * k0 + lambda;
    (k1 * (2.0 / s).sqrt() + k2 / s) * E + s * E
}

/// Dirichlet collar radius `r1 ∧ ℓ⁻¹(1/2)` after flooring k.
fn dirichlet_collar(inputs: &DirichletBoundInputs, k: f64) -> Result<(f64, f64)> {
    let inv_half = ell_inverse(0.5, inputs.sigma, k)?;
    let r0 = inputs.r1.min(inv_half);
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::Degenerate(format!("collar radius r0 = {r0} is undefined")));
    }
    Ok((r0, inv_half))
}

fn floored(k: f64, opts: &BoundOptions) -> Result<f64> {
    check_nonneg("k_floor", opts.k_floor)?;
    Ok(k.max(opts.k_floor))
}

/// Ratio bound `‖Hess φ‖∞/‖φ‖∞` as a sum of five terms, with collar-weight data from `e^{n r0/2}` and `n/r0 + 2σ`.
pub fn dirichlet_ratio_constant(
    inputs: &DirichletBoundInputs,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    inputs.validate()?;
    let k = floored(inputs.k_sect, opts)?;
    let (r0, _) = dirichlet_collar(inputs, k)?;
    let h = HData { h_sup: h_sup(inputs.n, r0), k_h: k_alpha(inputs.n, r0, 2.0 * inputs.sigma) };
    dirichlet_ratio_constant_with_weight(inputs, opts, h)
}

/// As [`dirichlet_ratio_constant`] with caller-supplied collar-weight data.
pub fn dirichlet_ratio_constant_with_weight(
    inputs: &DirichletBoundInputs,
    opts: &BoundOptions,
    h: HData,
) -> Result<BoundReport> {
    inputs.validate()?;
    check_nonneg("h_sup", h.h_sup)?;
    check_nonneg("k_h", h.k_h)?;
    let k = floored(inputs.k_sect, opts)?;
    let (r0, inv_half) = dirichlet_collar(inputs, k)?;
    let n = inputs.n as f64;
    let (s, l, k0) = (inputs.sigma, inputs.lambda, inputs.k0);
    let alpha = opts.alpha_variant.alpha(inputs.n, s, k);
    let c = boundary_hessian_constants(inputs, r0, alpha);
    let (b, g) = (inputs.beta, inputs.gamma);
    let hs = h.h_sup.powf(s);
    let re = E.sqrt();
    let grad_b = boundary_gradient_bound(alpha, l);
    let grad_g = global_gradient_bound(alpha, k0, l);

    let m = (l + 2.0 * k0 + s * h.k_h).sqrt().max(2.0 * re * hs * c.c4);
    let t1 = 2.0 * (n - 1.0) * s * re * grad_b;
    let t2 = 2.0 * c.c1 * hs * re * m;
    let t3 = (3.0 / r0 * (alpha * alpha + 2.0 * b) + 6.0 / (r0 * r0) * alpha + 2.0 * l * alpha + g)
        / c.c4;
    let t4 = ((c.c3 + inputs.k1) / c.c4 + inputs.k2 / (4.0 * re * c.c4 * c.c4)) * grad_g;
    let t5 = 4.0 * E * hs * m * grad_g / re;
    let t0 = 1.0 / (l + 2.0 * k0 + s * h.k_h).max(4.0 * E * hs * hs * c.c4 * c.c4);
    let ratio = t1 + t2 + t3 + t4 + t5;

    let mut rep = BoundReport::new("dirichlet_ratio_five_term", opts.alpha_variant.id());
    rep.inputs = inputs.echo();
    rep.floors.insert("k_floor".into(), opts.k_floor);
    rep.floors.insert("k_effective".into(), k);
    for (key, v) in [
        ("r0", r0),
        ("ell_inverse_half", inv_half),
        ("alpha", alpha),
        ("h_sup", h.h_sup),
        ("k_h_2sigma", h.k_h),
        ("c1", c.c1),
        ("c2", c.c2),
        ("c3", c.c3),
        ("c4", c.c4),
        ("boundary_gradient_bound", grad_b),
        ("global_gradient_bound", grad_g),
        ("t0", t0),
        ("max_term", m),
        ("term1", t1),
        ("term2", t2),
        ("term3", t3),
        ("term4", t4),
        ("term5", t5),
    ] {
        rep.put(key, v)?;
    }
    rep.notes.push(
        "collar weight rate uses the doubled boundary parameter (K_h at 2 sigma), as in the Bismut step".into(),
    );
    rep.finish(ratio / l, ratio)
}

/// The λ-normalised constant with `‖h‖∞ = e^{n r0/2}`, `K = n/r0 + 2σ`; headline multiplies λ.
///
/// The headline equals the five-term ratio bound divided by λ. The value obtained by
/// reading the closed-form display literally is reported as the intermediate `printed_form`.
pub fn dirichlet_normalised_constant(
    inputs: &DirichletBoundInputs,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    inputs.validate()?;
    let k = floored(inputs.k_sect, opts)?;
    let (r0, inv_half) = dirichlet_collar(inputs, k)?;
    let n = inputs.n as f64;
    let (s, l, k0, k1, k2) = (inputs.sigma, inputs.lambda, inputs.k0, inputs.k1, inputs.k2);
    let (b, g) = (inputs.beta, inputs.gamma);
    let alpha = opts.alpha_variant.alpha(inputs.n, s, k);
    let kk = n / r0 + 2.0 * s;
    let c4 = 6.0 / r0 + 2.0 * alpha;
    let cc = gradient_coefficient();
    let grow = 0.5 * n * s * r0;

    let a1 = 2.0 * (n - 1.0) * E * s * (alpha / l + (2.0 / (PI * l)).sqrt());
    let inner_max = (1.0 / l + 2.0 * k0 / (l * l) + s / (l * l) * kk)
        .sqrt()
        .max(2.0 * (0.5 + grow).exp() / l * c4);
    let a2 = 2.0 * alpha * (grow + 0.5).exp() * inner_max;
    let a3_base = (3.0 / r0 * (alpha * alpha + 2.0 * b) + 6.0 / (r0 * r0) * alpha + g) / (c4 * l);
    let a4 = E.sqrt()
        * ((9.0 * alpha / r0 + 6.0 / (r0 * r0) + 3.0 * b + l + k1) / c4
            + k2 / (4.0 * E.sqrt() * c4 * c4))
        * (alpha / l + cc * (1.0 / l + k0 / (l * l)).sqrt());
    let outer_max = (1.0 + 2.0 * k0 / l + s / l * kk)
        .sqrt()
        .max(2.0 * (0.5 + grow).exp() / l.sqrt() * c4);
    let grad_scaled = alpha / l.sqrt() + cc * (1.0 + k0 / l).sqrt();
    let a5_core = outer_max * grad_scaled;

    let a3 = a3_base + 2.0 * alpha / c4;
    let a5 = 4.0 * (grow + 1.0).exp() * a5_core;
    let headline = a1 + a2 + a3 + a4 + a5;

    let printed3 = a3_base + alpha / c4;
    let printed5 = 4.0 * (grow + 0.5).exp() * a5_core;
    let printed = a1 + a2 + printed3 + a4 + printed5;

    let mut rep = BoundReport::new("dirichlet_lambda_normalised", opts.alpha_variant.id());
    rep.inputs = inputs.echo();
    rep.floors.insert("k_floor".into(), opts.k_floor);
    rep.floors.insert("k_effective".into(), k);
    for (key, v) in [
        ("r0", r0),
        ("ell_inverse_half", inv_half),
        ("alpha", alpha),
        ("k_h_2sigma", kk),
        ("h_sup", h_sup(inputs.n, r0)),
        ("c4", c4),
        ("global_gradient_bound", global_gradient_bound(alpha, k0, l)),
        ("boundary_gradient_bound", boundary_gradient_bound(alpha, l)),
        ("term1", a1),
        ("term2", a2),
        ("term3", a3),
        ("term4", a4),
        ("term5", a5),
        ("printed_form", printed),
    ] {
        rep.put(key, v)?;
    }
    rep.notes.push(
        "printed_form reads the closed-form display literally: alpha/C4 in the third term and exponent 1/2 in the fifth".into(),
    );
    rep.finish(headline, headline * l)
}

/// Neumann collar radius `r1 ∧ ℓ⁻¹(0)` after flooring k.
fn neumann_collar(inputs: &NeumannBoundInputs, k: f64) -> Result<(f64, f64)> {
    if inputs.sigma + k <= 0.0 {
        return Err(Error::Degenerate(
            "sigma + k = 0 leaves the collar weight undefined; apply a positive k-floor".into(),
        ));
    }
    let zero = ell_inverse(0.0, inputs.sigma, k)?;
    let r0 = inputs.r1.min(zero);
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::Degenerate(format!("collar radius r0 = {r0} is undefined")));
    }
    Ok((r0, zero))
}

/// Neumann constant with the explicit collar substitutions; headline multiplies λ.
pub fn neumann_collar_constant(
    inputs: &NeumannBoundInputs,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    inputs.validate()?;
    let k = floored(inputs.k_sect, opts)?;
    let (r0, zero) = neumann_collar(inputs, k)?;
    let n = inputs.n as f64;
    let (l, k0, k1, k2, s1, s2) =
        (inputs.lambda, inputs.k0, inputs.k1, inputs.k2, inputs.sigma1, inputs.sigma2);
    let kk = n / r0 + 2.0 * s1;
    let root = (2.0 * l + 4.0 * k0 + 4.0 * s1 * kk).sqrt();
    let first = (1.0 + (k1 + 2.0 * k0 + 2.0 * s1 * kk) / l + (k2 + 2.0 * s2 * kk) / (l * root))
        * (1.5 * s1 * n * inputs.r1 + 1.0).exp();
    let second = s2 * n * r0 / (2.0 * l) * root * (1.5 * s1 * n * r0 + 1.0).exp();
    let c = first + second;

    let mut rep = BoundReport::new("neumann_explicit_collar", "none");
    rep.inputs = inputs.echo();
    rep.floors.insert("k_floor".into(), opts.k_floor);
    rep.floors.insert("k_effective".into(), k);
    for (key, v) in [
        ("r0", r0),
        ("ell_inverse_zero", zero),
        ("k_h_2sigma1", kk),
        ("h_sup", h_sup(inputs.n, r0)),
        ("sqrt_term", root),
        ("term1", first),
        ("term2", second),
    ] {
        rep.put(key, v)?;
    }
    rep.finish(c, c * l)
}

/// Neumann constant for a general collar weight with sup `h_sup` and rate `k_h`.
pub fn neumann_constant_general_h(
    inputs: &NeumannBoundInputs,
    h_sup: f64,
    k_h: f64,
) -> Result<BoundReport> {
    inputs.validate()?;
    if !(h_sup >= 1.0) || !h_sup.is_finite() {
        return Err(Error::Argument(format!("h_sup = {h_sup} must be at least 1")));
    }
    check_nonneg("k_h", k_h)?;
    let (l, k0, k1, k2, s1, s2) =
        (inputs.lambda, inputs.k0, inputs.k1, inputs.k2, inputs.sigma1, inputs.sigma2);
    let root = (2.0 * l + 4.0 * k0 + 4.0 * s1 * k_h).sqrt();
    let hp = h_sup.powf(3.0 * s1);
    let first = E * (1.0 + (k1 + 2.0 * k0 + 2.0 * s1 * k_h) / l + (k2 + 2.0 * s2 * k_h) / (l * root)) * hp;
    let second = s2 * E / l * root * hp * h_sup.ln();
    let c = first + second;

    let mut rep = BoundReport::new("neumann_general_weight", "none");
    rep.inputs = inputs.echo();
    rep.inputs.insert("h_sup".into(), h_sup);
    rep.inputs.insert("k_h_2sigma1".into(), k_h);
    for (key, v) in [("sqrt_term", root), ("term1", first), ("term2", second)] {
        rep.put(key, v)?;
    }
    rep.finish(c, c * l)
}

/// Pointwise bound on `‖Hess P_t φ‖ / ‖dφ‖∞` from the local-time expectations.
///
/// `e_exp` is `E[e^{σ1 l_t}]` and `e_mixed` is `E[e^{σ1 l_t/2} ∫ e^{σ1 l_s/2} dl_s]`.
#[allow(clippy::too_many_arguments)]
pub fn neumann_pointwise_hessian_bound(
    k0: f64,
    k1: f64,
    k2: f64,
    sigma1: f64,
    sigma2: f64,
    lambda: f64,
    t: f64,
    e_exp: f64,
    e_mixed: f64,
) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Argument(format!("time t = {t} must be positive")));
    }
    for (name, v) in [
        ("K0", k0),
        ("K1", k1),
        ("K2", k2),
        ("sigma1", sigma1),
        ("sigma2", sigma2),
        ("E_exp", e_exp),
        ("E_mixed", e_mixed),
    ] {
        check_nonneg(name, v)?;
    }
    let grow = ((0.5 * lambda + k0) * t).exp();
    let v = grow * e_exp * (1.0 / t.sqrt() + k1 * t.sqrt() + 0.5 * k2 * t)
        + 0.5 * sigma2 * grow * e_mixed;
    crate::error::finite("neumann_pointwise_hessian_bound", v)
}

/// Certified bound `‖h‖∞^α e^{α K t / 2}` on `E[e^{α l_t / 2}]`.
pub fn local_time_moment_bound(h: HData, alpha: f64, t: f64) -> f64 {
    h.h_sup.powf(alpha) * (0.5 * alpha * h.k_h * t).exp()
}

/// Collar-weight data `(e^{n r0/2}, n/r0 + alpha)` with `r0 = r1 ∧ ℓ⁻¹(0)`.
pub fn neumann_h_data(n: usize, sigma: f64, k: f64, r1: f64, alpha: f64) -> Result<HData> {
    if sigma + k <= 0.0 {
        return Err(Error::Degenerate(
            "sigma + k = 0 leaves the collar weight undefined; apply a positive k-floor".into(),
        ));
    }
    let r0 = r1.min(ell_inverse(0.0, sigma, k)?);
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::Degenerate(format!("collar radius r0 = {r0} is undefined")));
    }
    Ok(HData { h_sup: h_sup(n, r0), k_h: k_alpha(n, r0, alpha) })
}
