//! Closed-form Laplacian eigenpairs of the catalog models and their sup norms.

pub mod bessel;
pub mod poly;
mod supnorm;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GeometryModel, Mat4, Shape, Vec4};
use crate::numeric::ls_slope;
use bessel::{g_triple, radial_roots, Family};
use poly::{complex_power, harmonic3, harmonic4, Poly};

pub use supnorm::{sup_norms, sup_norms_with, SupNormOptions, SupNormResult, SupNorms};

/// Boundary condition of an eigenpair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        })
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "neumann" => Ok(BoundaryCondition::Neumann),
            other => Err(Error::Argument(format!("unknown boundary condition `{other}`"))),
        }
    }
}

/// One-dimensional trigonometric factor `sin(κx)` or `cos(κx)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct Trig {
    kappa: f64,
    cosine: bool,
}

impl Trig {
    fn eval(&self, x: f64) -> [f64; 3] {
        let (s, c) = (self.kappa * x).sin_cos();
        let k = self.kappa;
        if self.cosine {
            [c, -k * s, -k * k * c]
        } else {
            [s, k * c, -k * k * s]
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Kind {
    /// Product of trigonometric factors, one per coordinate.
    Product(Vec<Trig>),
    /// `G_m(κ|x|) P(x)` with `P` harmonic and homogeneous of degree `m`.
    Radial { family: Family, order: usize, kappa: f64, dim: usize, poly: Poly },
    /// Restriction of a homogeneous harmonic polynomial of degree `degree` to the unit sphere.
    Spherical { degree: usize, ambient: usize, poly: Poly },
}

/// A closed-form eigenfunction of `−Δ` with its eigenvalue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda: f64,
    pub bc: BoundaryCondition,
    pub mode_indices: Vec<i64>,
    pub l2_normalized: bool,
    /// Azimuthal order used to reduce sup-norm searches; zero when not applicable.
    pub azimuthal: usize,
    scale: f64,
    kind: Kind,
}

impl EigenPair {
    /// Value, gradient and Hessian at `x`; tangent-projected on the sphere.
    pub fn eval_all(&self, x: &Vec4) -> (f64, Vec4, Mat4) {
        let c = self.scale;
        match &self.kind {
            Kind::Product(fs) => {
                let vals: Vec<[f64; 3]> = fs.iter().enumerate().map(|(i, f)| f.eval(x[i])).collect();
                let n = vals.len();
                let prod_except = |skip: &[usize]| -> f64 {
                    (0..n).filter(|i| !skip.contains(i)).map(|i| vals[i][0]).product()
                };
                let v = c * prod_except(&[]);
                let mut g = Vec4::zeros();
                let mut h = Mat4::zeros();
                for i in 0..n {
                    g[i] = c * vals[i][1] * prod_except(&[i]);
                    h[(i, i)] = c * vals[i][2] * prod_except(&[i]);
                    for j in (i + 1)..n {
                        let hij = c * vals[i][1] * vals[j][1] * prod_except(&[i, j]);
                        h[(i, j)] = hij;
                        h[(j, i)] = hij;
                    }
                }
                (v, g, h)
            }
            Kind::Radial { family, order, kappa, dim, poly } => {
                let r = x.norm();
                let k2 = kappa * kappa;
                let [g0, g1, g2] = g_triple(*family, *order, kappa * r);
                let (p, dp, d2p) = poly.eval_all(x);
                let dg = -k2 * g1 * x;
                let mut d2g = -k2 * g1 * Mat4::identity() + k2 * k2 * g2 * (x * x.transpose());
                for i in *dim..4 {
                    d2g[(i, i)] = 0.0;
                }
                let v = c * g0 * p;
                let grad = c * (p * dg + g0 * dp);
                let hess = c * (p * d2g + dg * dp.transpose() + dp * dg.transpose() + g0 * d2p);
                (v, grad, hess)
            }
            Kind::Spherical { degree, ambient, poly } => {
                let (p, dp, d2p) = poly.eval_all(x);
                let mut proj = Mat4::identity() - x * x.transpose();
                let amb = *ambient;
                for i in amb..4 {
                    proj[(i, i)] = 0.0;
                }
                let grad = c * (proj * dp);
                let mut inner = d2p;
                for i in 0..amb {
                    inner[(i, i)] -= *degree as f64 * p;
                }
                let hess = c * (proj * inner * proj);
                (c * p, grad, hess)
            }
        }
    }

    pub fn value(&self, x: &Vec4) -> f64 {
        self.eval_all(x).0
    }

    pub fn gradient(&self, x: &Vec4) -> Vec4 {
        self.eval_all(x).1
    }

    pub fn hessian(&self, x: &Vec4) -> Mat4 {
        self.eval_all(x).2
    }
}

fn product_pair(kappas: &[(f64, bool)], lengths: &[f64], bc: BoundaryCondition, idx: Vec<i64>) -> EigenPair {
    let mut scale = 1.0;
    for ((k, cosine), l) in kappas.iter().zip(lengths) {
        scale *= if *cosine && *k == 0.0 { (1.0 / l).sqrt() } else { (2.0 / l).sqrt() };
    }
    let factors: Vec<Trig> = kappas.iter().map(|&(kappa, cosine)| Trig { kappa, cosine }).collect();
    EigenPair {
        lambda: kappas.iter().map(|(k, _)| k * k).sum(),
        bc,
        mode_indices: idx,
        l2_normalized: true,
        azimuthal: 0,
        scale,
        kind: Kind::Product(factors),
    }
}

fn box_modes(edges: &[f64], bc: BoundaryCondition, count: usize) -> Vec<EigenPair> {
    let n = edges.len();
    let lo: i64 = if bc == BoundaryCondition::Dirichlet { 1 } else { 0 };
    let mut kmax = 4i64;
    loop {
        let mut cand: Vec<(f64, Vec<i64>)> = Vec::new();
        let mut idx = vec![lo; n];
        loop {
            if idx.iter().any(|&k| k != 0) {
                let lam: f64 = idx.iter().zip(edges).map(|(&k, e)| (k as f64 * PI / e).powi(2)).sum();
                cand.push((lam, idx.clone()));
            }
            let mut d = 0;
            while d < n {
                idx[d] += 1;
                if idx[d] <= kmax {
                    break;
                }
                idx[d] = lo;
                d += 1;
            }
            if d == n {
                break;
            }
        }
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        // a candidate is safe once every index at kmax + 1 would exceed it
        let emax = edges.iter().cloned().fold(0.0, f64::max);
        let safe = ((kmax + 1) as f64 * PI / emax).powi(2);
        if cand.len() >= count && cand[count - 1].0 < safe {
            return cand
                .into_iter()
                .take(count)
                .map(|(_, idx)| {
                    let ks: Vec<(f64, bool)> = idx
                        .iter()
                        .zip(edges)
                        .map(|(&k, e)| (k as f64 * PI / e, bc == BoundaryCondition::Neumann))
                        .collect();
                    product_pair(&ks, edges, bc, idx)
                })
                .collect();
        }
        kmax *= 2;
    }
}

/// Radial roots of every order with value below `zmax`: (root, order, root index).
fn radial_catalog(family: Family, bc: BoundaryCondition, zmax: f64) -> Vec<(f64, usize, usize)> {
    let mut out = Vec::new();
    let deriv = bc == BoundaryCondition::Neumann;
    for m in 0.. {
        let roots = radial_roots(family, m, deriv, zmax);
        if roots.is_empty() && m > 0 {
            break;
        }
        for (k, r) in roots.into_iter().enumerate() {
            out.push((r, m, k + 1));
        }
        if m > 400 {
            break;
        }
    }
    out
}

fn disk_modes(a: f64, bc: BoundaryCondition, count: usize) -> Vec<EigenPair> {
    let mut zmax = 8.0;
    loop {
        let mut cand = Vec::new();
        for (z, m, k) in radial_catalog(Family::Cylindrical, bc, zmax) {
            for sine in [false, true] {
                if sine && m == 0 {
                    continue;
                }
                cand.push((z, m, k, sine));
            }
        }
        cand.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2, x.3).cmp(&(y.1, y.2, y.3))));
        if cand.len() >= count {
            return cand.into_iter().take(count).map(|(z, m, k, sine)| disk_pair(a, bc, z, m, k, sine)).collect();
        }
        zmax *= 1.5;
    }
}

fn disk_pair(a: f64, bc: BoundaryCondition, z: f64, m: usize, k: usize, sine: bool) -> EigenPair {
    let kappa = z / a;
    let (re, im) = complex_power(m);
    let poly = if sine { im } else { re };
    let jm = bessel::bessel_j(m, z);
    let radial = match bc {
        BoundaryCondition::Dirichlet => 0.5 * a * a * bessel::bessel_j(m + 1, z).powi(2),
        BoundaryCondition::Neumann => 0.5 * a * a * (1.0 - (m * m) as f64 / (z * z)) * jm * jm,
    };
    let angular = if m == 0 { 2.0 * PI } else { PI };
    let norm = 1.0 / (radial * angular).sqrt();
    EigenPair {
        lambda: kappa * kappa,
        bc,
        mode_indices: vec![m as i64, k as i64, sine as i64],
        l2_normalized: true,
        azimuthal: m,
        scale: norm * kappa.powi(m as i32),
        kind: Kind::Radial { family: Family::Cylindrical, order: m, kappa, dim: 2, poly },
    }
}

fn ball_modes(a: f64, bc: BoundaryCondition, count: usize) -> Vec<EigenPair> {
    let mut zmax = 8.0;
    loop {
        let mut cand = Vec::new();
        for (z, l, k) in radial_catalog(Family::Spherical, bc, zmax) {
            for m in 0..=l {
                for sine in [false, true] {
                    if sine && m == 0 {
                        continue;
                    }
                    cand.push((z, l, k, m, sine));
                }
            }
        }
        cand.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2, x.3, x.4).cmp(&(y.1, y.2, y.3, y.4))));
        if cand.len() >= count {
            return cand
                .into_iter()
                .take(count)
                .map(|(z, l, k, m, sine)| {
                    let kappa = z / a;
                    let poly = harmonic3(l, m, sine);
                    let ang = poly.mul(&poly).sphere_integral(3);
                    let jl = bessel::spherical_j(l, z);
                    let radial = match bc {
                        BoundaryCondition::Dirichlet => 0.5 * a.powi(3) * bessel::spherical_j(l + 1, z).powi(2),
                        BoundaryCondition::Neumann => {
                            0.5 * a.powi(3) * (1.0 - (l * (l + 1)) as f64 / (z * z)) * jl * jl
                        }
                    };
                    let norm = 1.0 / (radial * ang).sqrt();
                    EigenPair {
                        lambda: kappa * kappa,
                        bc,
                        mode_indices: vec![l as i64, k as i64, m as i64, sine as i64],
                        l2_normalized: true,
                        azimuthal: m,
                        scale: norm * kappa.powi(l as i32),
                        kind: Kind::Radial { family: Family::Spherical, order: l, kappa, dim: 3, poly },
                    }
                })
                .collect();
        }
        zmax *= 1.5;
    }
}

/// Hemisphere harmonics; Dirichlet keeps polynomials odd in the pole coordinate, Neumann even.
fn hemisphere_modes(n: usize, bc: BoundaryCondition, count: usize) -> Vec<EigenPair> {
    let want_odd = bc == BoundaryCondition::Dirichlet;
    let mut out = Vec::new();
    for l in 1usize..=25 {
        let lam = (l * (l + n - 1)) as f64;
        if n == 2 {
            for m in 0..=l {
                if ((l - m) % 2 == 1) != want_odd {
                    continue;
                }
                for sine in [false, true] {
                    if sine && m == 0 {
                        continue;
                    }
                    let p = harmonic3(l, m, sine);
                    out.push(sphere_pair(p, l, lam, bc, vec![l as i64, m as i64, sine as i64], m, 3));
                }
            }
        } else {
            for j in 0..=l {
                if ((l - j) % 2 == 1) != want_odd {
                    continue;
                }
                for m in 0..=j {
                    for sine in [false, true] {
                        if sine && m == 0 {
                            continue;
                        }
                        let p = harmonic4(l, j, m, sine);
                        out.push(sphere_pair(p, l, lam, bc, vec![l as i64, j as i64, m as i64, sine as i64], m, 4));
                    }
                }
            }
        }
        if out.len() >= count {
            break;
        }
    }
    out.truncate(count);
    out
}

fn sphere_pair(p: Poly, l: usize, lam: f64, bc: BoundaryCondition, idx: Vec<i64>, m: usize, amb: usize) -> EigenPair {
    let half = 0.5 * p.mul(&p).sphere_integral(amb);
    EigenPair {
        lambda: lam,
        bc,
        mode_indices: idx,
        l2_normalized: true,
        azimuthal: m,
        scale: 1.0 / half.sqrt(),
        kind: Kind::Spherical { degree: l, ambient: amb, poly: p },
    }
}

/// The first `count` eigenpairs with positive eigenvalue, sorted by eigenvalue.
pub fn enumerate_eigenpairs(g: &GeometryModel, bc: BoundaryCondition, count: usize) -> Result<Vec<EigenPair>> {
    if count == 0 {
        return Err(Error::Argument("count must be at least 1".into()));
    }
    match &g.shape {
        Shape::Interval { length } => Ok(box_modes(&[*length], bc, count)),
        Shape::Box { edges } => Ok(box_modes(edges, bc, count)),
        Shape::Disk { radius } => Ok(disk_modes(*radius, bc, count)),
        Shape::Ball { radius } => Ok(ball_modes(*radius, bc, count)),
        Shape::SphericalCap { n, theta } => {
            if (theta - PI / 2.0).abs() > 1e-12 {
                return Err(Error::Capability(
                    "closed-form spectra are only available for the hemisphere".into(),
                ));
            }
            let modes = hemisphere_modes(*n, bc, count);
            if modes.len() < count {
                return Err(Error::Capability(format!(
                    "only {} hemisphere modes up to degree 25",
                    modes.len()
                )));
            }
            Ok(modes)
        }
    }
}

/// Measured Hessian ratio and the trivial lower-bound check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub ratio: f64,
    pub lower_ok: bool,
}

/// `‖Hess φ‖∞ / (λ ‖φ‖∞)` and whether it is at least `1/n`.
pub fn ratio_report(e: &EigenPair, g: &GeometryModel, sups: &SupNorms) -> RatioReport {
    let ratio = sups.hess_sup.value / (e.lambda * sups.phi_sup.value);
    RatioReport { ratio, lower_ok: ratio >= 1.0 / g.dimension as f64 - 1e-9 }
}

/// Deterministic sample of boundary points with at least `count` entries.
pub fn boundary_samples(g: &GeometryModel, count: usize) -> Vec<Vec4> {
    let mut pts = Vec::new();
    match &g.shape {
        Shape::Interval { length } => {
            pts.push(Vec4::zeros());
            pts.push(Vec4::new(*length, 0.0, 0.0, 0.0));
        }
        Shape::Box { edges } => {
            let n = edges.len();
            let per = (count / (2 * n)).max(1);
            for face in 0..2 * n {
                let axis = face / 2;
                for s in 0..per {
                    let mut x = Vec4::zeros();
                    for (i, e) in edges.iter().enumerate() {
                        // stay away from edges so that the nearest face is unique
                        let u = 0.1 + 0.8 * frac((s as f64 + 0.5) * (0.618_033_988_75 + 0.1 * i as f64));
                        x[i] = u * e;
                    }
                    x[axis] = if face % 2 == 0 { 0.0 } else { edges[axis] };
                    pts.push(x);
                }
            }
        }
        _ => {
            let k = count.max(1);
            for s in 0..k {
                let u = [0.5, (s as f64 + 0.5) / k as f64, frac(s as f64 * 0.618_033_988_75)];
                pts.push(g.project_to_boundary(&g.from_unit_cube(&u)));
            }
        }
    }
    pts
}

fn frac(v: f64) -> f64 {
    v - v.floor()
}

/// Max over boundary samples of `|Hess φ(N, N) + H ⟨∇φ, N⟩|` for a Dirichlet pair.
pub fn neumann_second_derivative_check(e: &EigenPair, g: &GeometryModel) -> Result<f64> {
    if e.bc != BoundaryCondition::Dirichlet {
        return Err(Error::Argument("the boundary identity applies to Dirichlet pairs".into()));
    }
    let mut worst: f64 = 0.0;
    for x in boundary_samples(g, 400) {
        let n = g.normal_unchecked(&x);
        let (_, grad, hess) = e.eval_all(&x);
        let defect = (n.dot(&(hess * n)) + g.mean_curvature(&x) * grad.dot(&n)).abs();
        worst = worst.max(defect);
    }
    Ok(worst)
}

/// One row of a scaling table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub mode_indices: Vec<i64>,
    pub lambda: f64,
    pub phi_sup: f64,
    pub grad_sup: f64,
    pub hess_sup: f64,
}

/// Sup norms against eigenvalue with fitted log-log slopes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub geometry: String,
    pub bc: BoundaryCondition,
    pub rows: Vec<ScalingRow>,
    pub slope_phi: f64,
    pub slope_grad: f64,
    pub slope_hess: f64,
}

impl ScalingTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mode_indices,lambda,phi_sup,grad_sup,hess_sup\n");
        for r in &self.rows {
            let idx: Vec<String> = r.mode_indices.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                idx.join(" "),
                r.lambda,
                r.phi_sup,
                r.grad_sup,
                r.hess_sup
            ));
        }
        s
    }
}

fn slopes(rows: &[ScalingRow]) -> (f64, f64, f64) {
    let x: Vec<f64> = rows.iter().map(|r| r.lambda.ln()).collect();
    let f = |sel: fn(&ScalingRow) -> f64| -> f64 {
        let y: Vec<f64> = rows.iter().map(|r| sel(r).ln()).collect();
        ls_slope(&x, &y)
    };
    (f(|r| r.phi_sup), f(|r| r.grad_sup), f(|r| r.hess_sup))
}

/// Scaling table over the given eigenpairs.
pub fn scaling_from_pairs(g: &GeometryModel, bc: BoundaryCondition, pairs: &[EigenPair]) -> ScalingTable {
    let rows: Vec<ScalingRow> = pairs
        .iter()
        .map(|e| {
            let s = sup_norms(e, g);
            ScalingRow {
                mode_indices: e.mode_indices.clone(),
                lambda: e.lambda,
                phi_sup: s.phi_sup.value,
                grad_sup: s.grad_sup.value,
                hess_sup: s.hess_sup.value,
            }
        })
        .collect();
    let (a, b, c) = slopes(&rows);
    ScalingTable { geometry: g.name.clone(), bc, rows, slope_phi: a, slope_grad: b, slope_hess: c }
}

/// Scaling study over the first `count` L²-normalised eigenpairs.
pub fn scaling_study(g: &GeometryModel, bc: BoundaryCondition, count: usize) -> Result<ScalingTable> {
    if count < 20 {
        return Err(Error::Argument(format!("scaling study needs at least 20 modes, got {count}")));
    }
    let pairs = enumerate_eigenpairs(g, bc, count)?;
    Ok(scaling_from_pairs(g, bc, &pairs))
}

/// The disk family with one radial node and increasing angular order.
pub fn whispering_gallery(g: &GeometryModel, bc: BoundaryCondition, orders: std::ops::RangeInclusive<usize>) -> Result<Vec<EigenPair>> {
    let Shape::Disk { radius } = g.shape else {
        return Err(Error::Capability("the whispering-gallery family is defined for the disk".into()));
    };
    let deriv = bc == BoundaryCondition::Neumann;
    let mut out = Vec::new();
    for m in orders {
        let mut zmax = m as f64 + 10.0;
        let roots = loop {
            let r = radial_roots(Family::Cylindrical, m, deriv, zmax);
            if !r.is_empty() {
                break r;
            }
            zmax *= 1.5;
        };
        out.push(disk_pair(radius, bc, roots[0], m, 1, false));
    }
    Ok(out)
}
