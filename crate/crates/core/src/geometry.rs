//! Model manifolds with boundary.
//!
//! Points and tangent vectors are stored in ambient coordinates, zero-padded to
//! four components. Flat models live in `R^n`; the spherical cap lives on the
//! unit sphere in `R^{n+1}` with its pole at coordinate `n`.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec4 = Vector4<f64>;
pub type Mat4 = Matrix4<f64>;

/// Tolerance for treating a point as lying on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Membership slack for the curved models.
const MEMBERSHIP_TOL: f64 = 1e-12;

/// Shape parameters of a catalog model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Shape {
    /// `[0, length]`.
    Interval { length: f64 },
    /// `[0, e_1] x ... x [0, e_n]`.
    Box { edges: Vec<f64> },
    /// Disk of the given radius centred at the origin.
    Disk { radius: f64 },
    /// Ball in `R^3` of the given radius centred at the origin.
    Ball { radius: f64 },
    /// Points of the unit `n`-sphere within polar angle `theta` of the pole.
    SphericalCap { n: usize, theta: f64 },
}

/// Certified curvature and boundary bounds; every field is nonnegative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBounds {
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub sigma: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub k_sect: f64,
}

/// Coordinates in the model chart: Cartesian for flat models, geodesic normal about the pole for the cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub coordinates: Vec<f64>,
}

/// A model manifold with boundary and its certified data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryModel {
    pub name: String,
    pub dimension: usize,
    pub shape: Shape,
    pub curvature_bounds: CurvatureBounds,
    pub tubular_radius: f64,
}

/// Curvature of a space form evaluated at a point.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureTensors {
    /// Constant sectional curvature (0 or 1 for the catalog).
    pub kappa: f64,
    pub dimension: usize,
}

impl CurvatureTensors {
    /// `Ric(u, v)`.
    pub fn ric(&self, u: &Vec4, v: &Vec4) -> f64 {
        if self.kappa == 0.0 {
            return 0.0;
        }
        self.kappa * (self.dimension as f64 - 1.0) * u.dot(v)
    }

    /// `Ric^♯(w)` for a tangent vector `w`.
    pub fn ric_sharp(&self, w: &Vec4) -> Vec4 {
        self.kappa * (self.dimension as f64 - 1.0) * w
    }

    /// `R(u, v) w = κ(⟨v, w⟩u − ⟨u, w⟩v)`.
    pub fn riemann(&self, u: &Vec4, v: &Vec4, w: &Vec4) -> Vec4 {
        if self.kappa == 0.0 {
            return Vec4::zeros();
        }
        self.kappa * (v.dot(w) * u - u.dot(w) * v)
    }

    /// `(d*R + ∇Ric)(u, v)`; vanishes for parallel curvature.
    pub fn divergence_term(&self, _u: &Vec4, _v: &Vec4) -> Vec4 {
        Vec4::zeros()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} = {v} must be positive and finite")))
    }
}

impl GeometryModel {
    pub fn interval(length: f64) -> Result<Self> {
        positive("length", length)?;
        Ok(Self::flat("interval", 1, Shape::Interval { length }, 0.0, 0.0, 0.5 * length))
    }

    pub fn boxed(edges: &[f64]) -> Result<Self> {
        if edges.is_empty() || edges.len() > 4 {
            return Err(Error::Argument(format!("box dimension {} is not in 1..=4", edges.len())));
        }
        for &e in edges {
            positive("edge", e)?;
        }
        let r1 = 0.5 * edges.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self::flat("box", edges.len(), Shape::Box { edges: edges.to_vec() }, 0.0, 0.0, r1))
    }

    pub fn disk(radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        let mut g = Self::flat("disk", 2, Shape::Disk { radius }, 1.0 / radius, 0.0, radius);
        g.curvature_bounds.sigma2 = g.sup_boundary_tensor();
        Ok(g)
    }

    pub fn ball(radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        let mut g = Self::flat("ball", 3, Shape::Ball { radius }, 1.0 / radius, 0.0, radius);
        g.curvature_bounds.sigma2 = g.sup_boundary_tensor();
        Ok(g)
    }

    /// Cap of polar angle `theta` on the unit `n`-sphere, `n` in {2, 3}.
    pub fn spherical_cap(n: usize, theta: f64) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::Argument(format!("cap dimension {n} is not 2 or 3")));
        }
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(Error::Argument(format!("cap angle {theta} is not in (0, pi)")));
        }
        let cot = theta.cos() / theta.sin();
        let mut g = GeometryModel {
            name: "spherical_cap".into(),
            dimension: n,
            shape: Shape::SphericalCap { n, theta },
            curvature_bounds: CurvatureBounds {
                k0: 0.0,
                k1: ((n - 1) as f64).sqrt(),
                k2: 0.0,
                sigma: cot.abs(),
                sigma1: (-cot).max(0.0),
                sigma2: 0.0,
                k_sect: 1.0,
            },
            tubular_radius: theta,
        };
        g.curvature_bounds.sigma2 = g.sup_boundary_tensor();
        Ok(g)
    }

    pub fn hemisphere(n: usize) -> Result<Self> {
        Self::spherical_cap(n, std::f64::consts::FRAC_PI_2)
    }

    /// The reference models: unit-scale interval and square of side π, unit disk and ball, hemispheres in dimensions 2 and 3.
    pub fn catalog() -> Vec<GeometryModel> {
        let pi = std::f64::consts::PI;
        vec![
            Self::interval(pi).expect("valid"),
            Self::boxed(&[pi, pi]).expect("valid"),
            Self::disk(1.0).expect("valid"),
            Self::ball(1.0).expect("valid"),
            Self::hemisphere(2).expect("valid"),
            Self::hemisphere(3).expect("valid"),
        ]
    }

    /// Catalog model by short name: interval, square, disk, ball, hemisphere, hemisphere3.
    pub fn by_name(name: &str) -> Result<Self> {
        let pi = std::f64::consts::PI;
        match name {
            "interval" => Self::interval(pi),
            "square" => Self::boxed(&[pi, pi]),
            "disk" => Self::disk(1.0),
            "ball" => Self::ball(1.0),
            "hemisphere" | "hemisphere2" => Self::hemisphere(2),
            "hemisphere3" => Self::hemisphere(3),
            other => Err(Error::Argument(format!(
                "unknown geometry `{other}` (expected interval, square, disk, ball, hemisphere or hemisphere3)"
            ))),
        }
    }

    fn flat(name: &str, n: usize, shape: Shape, sigma: f64, sigma1: f64, r1: f64) -> Self {
        GeometryModel {
            name: name.into(),
            dimension: n,
            shape,
            curvature_bounds: CurvatureBounds {
                k0: 0.0,
                k1: 0.0,
                k2: 0.0,
                sigma,
                sigma1,
                sigma2: 0.0,
                k_sect: 0.0,
            },
            tubular_radius: r1,
        }
    }

    /// True for the spherical cap.
    pub fn is_curved(&self) -> bool {
        matches!(self.shape, Shape::SphericalCap { .. })
    }

    /// Number of ambient coordinates in use.
    pub fn ambient_dim(&self) -> usize {
        if self.is_curved() {
            self.dimension + 1
        } else {
            self.dimension
        }
    }

    fn pole(&self) -> Vec4 {
        let mut p = Vec4::zeros();
        p[self.dimension] = 1.0;
        p
    }

    /// Distance to the boundary without a membership check; negative outside.
    pub fn rho(&self, x: &Vec4) -> f64 {
        match &self.shape {
            Shape::Interval { length } => x[0].min(length - x[0]),
            Shape::Box { edges } => edges
                .iter()
                .enumerate()
                .map(|(i, e)| x[i].min(e - x[i]))
                .fold(f64::INFINITY, f64::min),
            Shape::Disk { radius } | Shape::Ball { radius } => radius - x.norm(),
            Shape::SphericalCap { theta, .. } => theta - self.polar_angle(x),
        }
    }

    /// Polar angle of a sphere point measured from the pole.
    pub fn polar_angle(&self, x: &Vec4) -> f64 {
        let c = x[self.dimension];
        let s = (x.norm_squared() - c * c).max(0.0).sqrt();
        s.atan2(c)
    }

    pub fn contains(&self, x: &Vec4) -> bool {
        if x.iter().any(|c| !c.is_finite()) {
            return false;
        }
        for i in self.ambient_dim()..4 {
            if x[i] != 0.0 {
                return false;
            }
        }
        match self.shape {
            Shape::SphericalCap { .. } => {
                (x.norm() - 1.0).abs() <= 1e-9 && self.rho(x) >= -MEMBERSHIP_TOL
            }
            Shape::Disk { .. } | Shape::Ball { .. } => self.rho(x) >= -MEMBERSHIP_TOL,
            _ => self.rho(x) >= 0.0,
        }
    }

    fn check_domain(&self, x: &Vec4) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{:?} is not in the {}", x.as_slice(), self.name)))
        }
    }

    fn check_collar(&self, x: &Vec4) -> Result<f64> {
        self.check_domain(x)?;
        let r = self.rho(x);
        if r >= self.tubular_radius {
            return Err(Error::Collar(format!(
                "distance {r} is not below the tubular radius {}",
                self.tubular_radius
            )));
        }
        Ok(r.max(0.0))
    }

    /// Distance to the boundary, zero exactly on the boundary.
    pub fn distance_to_boundary(&self, x: &Vec4) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.rho(x).max(0.0))
    }

    /// Inward unit normal `∇ρ` at a collar point, without checks.
    pub fn normal_unchecked(&self, x: &Vec4) -> Vec4 {
        match &self.shape {
            Shape::Interval { length } => {
                if x[0] <= length - x[0] {
                    Vec4::new(1.0, 0.0, 0.0, 0.0)
                } else {
                    Vec4::new(-1.0, 0.0, 0.0, 0.0)
                }
            }
            Shape::Box { edges } => {
                let mut best = f64::INFINITY;
                let mut nrm = Vec4::zeros();
                for (i, e) in edges.iter().enumerate() {
                    if x[i] < best {
                        best = x[i];
                        nrm = Vec4::zeros();
                        nrm[i] = 1.0;
                    }
                    if e - x[i] < best {
                        best = e - x[i];
                        nrm = Vec4::zeros();
                        nrm[i] = -1.0;
                    }
                }
                nrm
            }
            Shape::Disk { .. } | Shape::Ball { .. } => -x / x.norm(),
            Shape::SphericalCap { .. } => {
                let p = self.pole();
                let t = p - p.dot(x) * x;
                t / t.norm()
            }
        }
    }

    /// Inward unit normal extended to the collar as the gradient of the distance.
    pub fn inward_normal_extension(&self, x: &Vec4) -> Result<Vec4> {
        self.check_collar(x)?;
        if matches!(self.shape, Shape::Disk { .. } | Shape::Ball { .. }) && x.norm() == 0.0 {
            return Err(Error::Collar("the centre has no normal direction".into()));
        }
        Ok(self.normal_unchecked(x))
    }

    /// Projector onto the tangent space at `x`.
    pub fn tangent_projector(&self, x: &Vec4) -> Mat4 {
        let mut p = Mat4::zeros();
        for i in 0..self.ambient_dim() {
            p[(i, i)] = 1.0;
        }
        if self.is_curved() {
            p -= x * x.transpose();
        }
        p
    }

    /// Orthonormal tangent frame at `x` in columns `0..n`, transported from the pole for the cap.
    pub fn frame(&self, x: &Vec4) -> Mat4 {
        let mut f = Mat4::zeros();
        for i in 0..self.dimension {
            f[(i, i)] = 1.0;
        }
        if self.is_curved() {
            let p = self.pole();
            for j in 0..self.dimension {
                let v = f.column(j).into_owned();
                f.set_column(j, &rotate_transport(&p, x, &v));
            }
        }
        f
    }

    /// Moves from `x` by the tangent displacement `dx`; the cap uses the normalising retraction.
    pub fn retract(&self, x: &Vec4, dx: &Vec4) -> Vec4 {
        if self.is_curved() {
            let y = x + dx;
            y / y.norm()
        } else {
            x + dx
        }
    }

    /// Geodesic through `x` with initial velocity `v`, evaluated at time one.
    pub fn exp_map(&self, x: &Vec4, v: &Vec4) -> Vec4 {
        if self.is_curved() {
            let s = v.norm();
            if s == 0.0 {
                return *x;
            }
            s.cos() * x + s.sin() / s * v
        } else {
            x + v
        }
    }

    /// Transports `v` from `x` to the point reached by `dx`; returns the endpoint and the image of `v`.
    pub fn parallel_transport_step(&self, x: &Vec4, dx: &Vec4, v: &Vec4) -> Result<(Vec4, Vec4)> {
        if !self.is_curved() {
            return Ok((x + dx, *v));
        }
        if !(dx.norm() < 1.0) {
            return Err(Error::Chart(format!("displacement of length {} is too long", dx.norm())));
        }
        let y = self.retract(x, dx);
        if y[self.dimension] <= -1.0 + 1e-12 {
            return Err(Error::Chart("step reaches the antipode of the pole".into()));
        }
        Ok((y, rotate_transport(x, &y, v)))
    }

    /// Curvature tensors at `x`.
    pub fn curvature_tensors(&self, x: &Vec4) -> Result<CurvatureTensors> {
        self.check_domain(x)?;
        Ok(self.tensors())
    }

    /// Curvature tensors of the model, valid at every point.
    pub fn tensors(&self) -> CurvatureTensors {
        CurvatureTensors { kappa: if self.is_curved() { 1.0 } else { 0.0 }, dimension: self.dimension }
    }

    /// Covariant derivative `∇_u N` at a collar point.
    pub fn grad_normal(&self, x: &Vec4, u: &Vec4) -> Vec4 {
        match &self.shape {
            Shape::Interval { .. } | Shape::Box { .. } => Vec4::zeros(),
            Shape::Disk { .. } | Shape::Ball { .. } => {
                let r = x.norm();
                let xh = x / r;
                -(u - xh.dot(u) * xh) / r
            }
            Shape::SphericalCap { .. } => {
                let th = self.polar_angle(x);
                let n = self.normal_unchecked(x);
                let pu = u - n.dot(u) * n - x.dot(u) * x;
                -(th.cos() / th.sin()) * pu
            }
        }
    }

    /// Second covariant derivative `∇²N(a, b)` at a collar point.
    pub fn hess_normal(&self, x: &Vec4, a: &Vec4, b: &Vec4) -> Vec4 {
        match &self.shape {
            Shape::Interval { .. } | Shape::Box { .. } => Vec4::zeros(),
            Shape::Disk { .. } | Shape::Ball { .. } => {
                let r = x.norm();
                let xh = x / r;
                let (xa, xb) = (xh.dot(a), xh.dot(b));
                (b * xa + a * xb + xh * (a.dot(b) - 3.0 * xa * xb)) / (r * r)
            }
            Shape::SphericalCap { .. } => {
                let th = self.polar_angle(x);
                let n = self.normal_unchecked(x);
                let proj = |w: &Vec4| w - n.dot(w) * n - x.dot(w) * x;
                let (pa, pb) = (proj(a), proj(b));
                let cot = th.cos() / th.sin();
                let csc2 = 1.0 / (th.sin() * th.sin());
                -csc2 * n.dot(a) * pb - cot * cot * (n.dot(b) * pa + n * pa.dot(b))
            }
        }
    }

    /// `(∇²N − R(N))(a, b)` with `R(N)(a, b) = R(N, a) b`.
    pub fn neumann_boundary_tensor(&self, x: &Vec4, a: &Vec4, b: &Vec4) -> Vec4 {
        let n = self.normal_unchecked(x);
        self.hess_normal(x, a, b) - self.tensors().riemann(&n, a, b)
    }

    /// Mean curvature `div N` at a collar point.
    pub fn mean_curvature(&self, x: &Vec4) -> f64 {
        let m = self.dimension as f64 - 1.0;
        match &self.shape {
            Shape::Interval { .. } | Shape::Box { .. } => 0.0,
            Shape::Disk { .. } | Shape::Ball { .. } => -m / x.norm(),
            Shape::SphericalCap { .. } => {
                let th = self.polar_angle(x);
                -m * th.cos() / th.sin()
            }
        }
    }

    /// Second fundamental form `−⟨∇_u N, w⟩` at a boundary point.
    pub fn second_fundamental_form(&self, x: &Vec4, u: &Vec4, w: &Vec4) -> Result<f64> {
        self.check_domain(x)?;
        if self.rho(x).abs() > BOUNDARY_TOL {
            return Err(Error::Argument("point is not on the boundary".into()));
        }
        let n = self.normal_unchecked(x);
        let p = self.tangent_projector(x);
        for v in [u, w] {
            let scale = v.norm().max(1.0);
            if n.dot(v).abs() > 1e-9 * scale || (p * v - v).norm() > 1e-9 * scale {
                return Err(Error::Argument("vector is not tangent to the boundary".into()));
            }
        }
        Ok(-self.grad_normal(x, u).dot(w))
    }

    /// Certified bound `2 max{σ, √k}` on the Hessian of the distance on the collar.
    pub fn hessian_rho_bound(&self) -> f64 {
        let b = &self.curvature_bounds;
        2.0 * b.sigma.max(b.k_sect.sqrt())
    }

    /// A boundary point whose inward normal is the first frame direction.
    pub fn reference_boundary_point(&self) -> Vec4 {
        match &self.shape {
            Shape::Interval { .. } | Shape::Box { .. } => {
                let mut x = Vec4::zeros();
                if let Shape::Box { edges } = &self.shape {
                    for (i, e) in edges.iter().enumerate() {
                        x[i] = 0.5 * e;
                    }
                }
                x[0] = 0.0;
                x
            }
            Shape::Disk { radius } | Shape::Ball { radius } => Vec4::new(-radius, 0.0, 0.0, 0.0),
            Shape::SphericalCap { theta, .. } => {
                let mut x = Vec4::zeros();
                x[0] = -theta.sin();
                x[self.dimension] = theta.cos();
                x
            }
        }
    }

    /// Sup of `|∇²N − R(N)|` over unit tangent pairs at a boundary point, inflated for grid error.
    ///
    /// The tensor is equivariant under rotations fixing `N`, so pairs are parameterised by
    /// their normal angles and the angle between their tangential parts.
    fn sup_boundary_tensor(&self) -> f64 {
        let x = self.reference_boundary_point();
        let n = self.normal_unchecked(&x);
        let f = self.frame(&x);
        let mut t = Vec::new();
        for j in 0..self.dimension {
            let c = f.column(j).into_owned();
            let c = c - n.dot(&c) * n;
            if c.norm() > 1e-8 {
                let mut c = c / c.norm();
                for prev in &t {
                    let p: &Vec4 = prev;
                    c -= p.dot(&c) * p;
                }
                if c.norm() > 1e-8 {
                    t.push(c / c.norm());
                }
            }
        }
        if t.is_empty() {
            let v = self.neumann_boundary_tensor(&x, &n, &n).norm();
            return v * (1.0 + 1e-2);
        }
        let steps = 90;
        let h = std::f64::consts::PI / steps as f64;
        let phis: Vec<f64> = if t.len() >= 2 {
            (0..=steps).map(|k| k as f64 * h).collect()
        } else {
            vec![0.0, std::f64::consts::PI]
        };
        let mut best: f64 = 0.0;
        for i in 0..=steps {
            let al = i as f64 * h;
            let a = al.cos() * n + al.sin() * t[0];
            for j in 0..=steps {
                let be = j as f64 * h;
                for &ph in &phis {
                    let dir = if t.len() >= 2 { ph.cos() * t[0] + ph.sin() * t[1] } else { ph.cos() * t[0] };
                    let b = be.cos() * n + be.sin() * dir;
                    best = best.max(self.neumann_boundary_tensor(&x, &a, &b).norm());
                }
            }
        }
        best * (1.0 + 1e-2)
    }

    /// Chart coordinates of an ambient point.
    pub fn to_chart(&self, x: &Vec4) -> ChartPoint {
        let n = self.dimension;
        if self.is_curved() {
            let th = self.polar_angle(x);
            let s = (x.norm_squared() - x[n] * x[n]).max(0.0).sqrt();
            let scale = if s > 0.0 { th / s } else { 1.0 };
            ChartPoint { coordinates: (0..n).map(|i| x[i] * scale).collect() }
        } else {
            ChartPoint { coordinates: (0..n).map(|i| x[i]).collect() }
        }
    }

    /// Ambient point of chart coordinates.
    pub fn from_chart(&self, c: &ChartPoint) -> Result<Vec4> {
        let n = self.dimension;
        if c.coordinates.len() != n {
            return Err(Error::Argument(format!(
                "expected {n} chart coordinates, got {}",
                c.coordinates.len()
            )));
        }
        let mut x = Vec4::zeros();
        if self.is_curved() {
            let r = c.coordinates.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = if r > 0.0 { r.sin() / r } else { 1.0 };
            for i in 0..n {
                x[i] = c.coordinates[i] * scale;
            }
            x[n] = r.cos();
        } else {
            for i in 0..n {
                x[i] = c.coordinates[i];
            }
        }
        Ok(x)
    }

    /// Maps a point of the unit cube `[0,1]^n` onto the closed domain.
    ///
    /// Boxes and intervals scale linearly; balls and caps use radius and direction coordinates
    /// so that the whole domain is covered.
    pub fn from_unit_cube(&self, u: &[f64]) -> Vec4 {
        use std::f64::consts::PI;
        let mut x = Vec4::zeros();
        match &self.shape {
            Shape::Interval { length } => x[0] = u[0] * length,
            Shape::Box { edges } => {
                for (i, e) in edges.iter().enumerate() {
                    x[i] = u[i] * e;
                }
            }
            Shape::Disk { radius } => {
                let r = radius * u[0].sqrt();
                let t = 2.0 * PI * u[1];
                x[0] = r * t.cos();
                x[1] = r * t.sin();
            }
            Shape::Ball { radius } => {
                let r = radius * u[0].cbrt();
                let z = 2.0 * u[1] - 1.0;
                let s = (1.0 - z * z).max(0.0).sqrt();
                let t = 2.0 * PI * u[2];
                x[0] = r * s * t.cos();
                x[1] = r * s * t.sin();
                x[2] = r * z;
            }
            Shape::SphericalCap { n, theta } => {
                let c = 1.0 - u[0] * (1.0 - theta.cos());
                let th = c.clamp(-1.0, 1.0).acos();
                let dir = if *n == 2 {
                    let t = 2.0 * PI * u[1];
                    [t.cos(), t.sin(), 0.0]
                } else {
                    let z = 2.0 * u[1] - 1.0;
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    let t = 2.0 * PI * u[2];
                    [s * t.cos(), s * t.sin(), z]
                };
                for i in 0..*n {
                    x[i] = th.sin() * dir[i];
                }
                x[*n] = th.cos();
            }
        }
        x
    }

    /// Closest boundary point along the normal direction.
    pub fn project_to_boundary(&self, y: &Vec4) -> Vec4 {
        match &self.shape {
            Shape::Interval { length } => {
                let mut z = *y;
                z[0] = if y[0] <= 0.5 * length { 0.0 } else { *length };
                z
            }
            Shape::Box { edges } => {
                let mut z = *y;
                for (i, e) in edges.iter().enumerate() {
                    z[i] = z[i].clamp(0.0, *e);
                }
                if self.rho(&z) > 0.0 {
                    // interior input: snap the nearest face
                    let mut best = (f64::INFINITY, 0, 0.0);
                    for (i, e) in edges.iter().enumerate() {
                        if z[i] < best.0 {
                            best = (z[i], i, 0.0);
                        }
                        if e - z[i] < best.0 {
                            best = (e - z[i], i, *e);
                        }
                    }
                    z[best.1] = best.2;
                }
                z
            }
            Shape::Disk { radius } | Shape::Ball { radius } => y * (radius / y.norm()),
            Shape::SphericalCap { theta, .. } => {
                let n = self.dimension;
                let mut z = *y;
                z[n] = 0.0;
                let s = z.norm();
                z *= theta.sin() / s;
                z[n] = theta.cos();
                z
            }
        }
    }

    /// Mirror image of a point outside a flat model across the boundary.
    ///
    /// Boxes mirror each violated coordinate; disks and balls mirror the radius.
    pub fn reflect(&self, y: &Vec4) -> Result<Vec4> {
        match &self.shape {
            Shape::Interval { length } => Ok(Vec4::new(mirror(y[0], *length), 0.0, 0.0, 0.0)),
            Shape::Box { edges } => {
                let mut z = *y;
                for (i, e) in edges.iter().enumerate() {
                    z[i] = mirror(z[i], *e);
                }
                Ok(z)
            }
            Shape::Disk { radius } | Shape::Ball { radius } => {
                let r = y.norm();
                if r <= *radius {
                    Ok(*y)
                } else {
                    let rr = (2.0 * radius - r).max(0.0);
                    Ok(y * (rr / r))
                }
            }
            Shape::SphericalCap { .. } => Err(Error::Capability(
                "reflection is only implemented for flat models".into(),
            )),
        }
    }
}

/// Folds a coordinate into `[0, e]` by mirror reflection.
pub(crate) fn mirror(v: f64, e: f64) -> f64 {
    let p = 2.0 * e;
    let mut w = v.rem_euclid(p);
    if w > e {
        w = p - w;
    }
    w
}

/// Rotation in the plane of unit vectors `x` and `y` taking `x` to `y`, applied to `v`.
pub fn rotate_transport(x: &Vec4, y: &Vec4, v: &Vec4) -> Vec4 {
    let c = 1.0 + x.dot(y);
    v - (v.dot(y) / c) * (x + y)
}
