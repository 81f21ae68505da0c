//! Killed and reflecting Brownian motion with the transport processes of the
//! second-order derivative formulas.
//!
//! All diffusions have generator `½Δ`. Tangent vectors and the transport
//! operators are kept in ambient coordinates, so `Q` maps `T_xD` into the
//! tangent space at the current position.

mod checks;

pub use checks::*;

use std::fmt;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, GeometryModel, Mat4, Shape, Vec4, BOUNDARY_TOL};

/// A user supplied control `s, t ↦ (k(s), k̇(s))`.
#[derive(Clone)]
pub struct KCallback {
    name: String,
    f: Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>,
}

impl KCallback {
    pub fn new(name: impl Into<String>, f: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        KCallback { name: name.into(), f: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for KCallback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KCallback({})", self.name)
    }
}

impl PartialEq for KCallback {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name
    }
}

/// The control function `k` of the derivative formulas.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KSchedule {
    /// `k(s) = (t − s)/t`, so `k(0) = 1` and `k(t) = 0`.
    #[default]
    Linear,
    /// `k ≡ 1`.
    Constant,
    #[serde(skip)]
    Custom(KCallback),
}

impl KSchedule {
    /// `(k(s), k̇(s))` for horizon `t`.
    pub fn eval(&self, s: f64, t: f64) -> (f64, f64) {
        match self {
            KSchedule::Linear => ((t - s) / t, -1.0 / t),
            KSchedule::Constant => (1.0, 0.0),
            KSchedule::Custom(c) => (c.f)(s, t),
        }
    }

    /// `(∫₀ᵗ k², ∫₀ᵗ |k|)`.
    pub fn integrals(&self, t: f64) -> (f64, f64) {
        match self {
            KSchedule::Linear => (t / 3.0, t / 2.0),
            KSchedule::Constant => (t, t),
            KSchedule::Custom(_) => {
                let sq = crate::numeric::adaptive_simpson(&|s| self.eval(s, t).0.powi(2), 0.0, t, 1e-12);
                let ab = crate::numeric::adaptive_simpson(&|s| self.eval(s, t).0.abs(), 0.0, t, 1e-12);
                (sq, ab)
            }
        }
    }
}

/// How the boundary is treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryScheme {
    /// Killed at the first detected crossing.
    #[default]
    CrossingKill,
    /// Reflected by projection; `dl` is twice the penetration depth.
    ReflectProject,
    /// Reflected by mirroring, with contact and local time drawn from the half-space bridge law.
    ReflectExact,
}

impl BoundaryScheme {
    pub fn is_reflecting(self) -> bool {
        self != BoundaryScheme::CrossingKill
    }
}

/// Monte Carlo run parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub k_schedule: KSchedule,
    #[serde(default)]
    pub boundary_scheme: BoundaryScheme,
    /// Also kill with the Brownian-bridge crossing probability when the endpoint is inside.
    #[serde(default)]
    pub bridge_kill: bool,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, paths: usize, seed: u64) -> Self {
        SimConfig {
            dt,
            horizon,
            paths,
            seed,
            k_schedule: KSchedule::Linear,
            boundary_scheme: BoundaryScheme::CrossingKill,
            bridge_kill: false,
        }
    }

    pub fn with_scheme(mut self, s: BoundaryScheme) -> Self {
        self.boundary_scheme = s;
        self
    }

    pub fn with_k(mut self, k: KSchedule) -> Self {
        self.k_schedule = k;
        self
    }

    pub fn with_bridge_kill(mut self, on: bool) -> Self {
        self.bridge_kill = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Argument(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::Argument(format!("horizon {} must be at least dt", self.horizon)));
        }
        if self.paths < 100 {
            return Err(Error::Argument(format!("{} paths; at least 100 are required", self.paths)));
        }
        Ok(())
    }

    /// Step sizes with the control evaluated at the start of each step.
    pub fn plan(&self) -> Vec<StepCtx> {
        let n = ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (0..n)
            .map(|i| {
                let s = i as f64 * self.dt;
                let dt = if i + 1 == n { self.horizon - s } else { self.dt };
                let (k, kdot) = self.k_schedule.eval(s, self.horizon);
                StepCtx { time: s, dt, k, kdot }
            })
            .collect()
    }
}

/// One time step: start time, size, and the control at the start.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepCtx {
    pub time: f64,
    pub dt: f64,
    pub k: f64,
    pub kdot: f64,
}

/// Mean and standard error of a Monte Carlo functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub paths: usize,
    pub seed: u64,
    /// Wall time in seconds; not serialised so that manifests are reproducible.
    #[serde(skip)]
    pub elapsed: f64,
}

impl McEstimate {
    /// Reduces samples in index order.
    pub fn from_samples(samples: &[f64], seed: u64, elapsed: f64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        McEstimate { mean, stderr: (var / n as f64).sqrt(), paths: n, seed, elapsed }
    }
}

/// Live state of one path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathState {
    pub time: f64,
    /// Ambient coordinates; see [`PathState::chart_position`].
    pub position: Vec4,
    /// Discrete parallel transport of the initial frame, columns `0..n`.
    pub transport: Mat4,
    /// `Q_t` (or `Q̃_t`) as a map from `T_xD`.
    pub q: Mat4,
    /// `W_t^k(v, v)`.
    pub w: Vec4,
    /// `∫⟨Q_s(k̇(s)v), ptr_s dB_s⟩`.
    pub stoch_int: f64,
    pub local_time: f64,
    pub alive: bool,
    pub tau: Option<f64>,
    /// The initial direction `v`.
    pub direction: Vec4,
}

impl PathState {
    /// State at time zero; `v` must be tangent at `x`.
    pub fn start(g: &GeometryModel, x: &Vec4, v: &Vec4) -> Self {
        PathState {
            time: 0.0,
            position: *x,
            transport: g.frame(x),
            q: g.tangent_projector(x),
            w: Vec4::zeros(),
            stoch_int: 0.0,
            local_time: 0.0,
            alive: true,
            tau: None,
            direction: *v,
        }
    }

    pub fn chart_position(&self, g: &GeometryModel) -> ChartPoint {
        g.to_chart(&self.position)
    }

    /// `Q_t v`.
    pub fn transported(&self) -> Vec4 {
        self.q * self.direction
    }
}

/// The generator for one path: ChaCha8 keyed by the seed, one stream per path.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(path as u64);
    r
}

fn draw_increment<R: Rng + ?Sized>(n: usize, dt: f64, rng: &mut R) -> Vec4 {
    let sq = dt.sqrt();
    let mut db = Vec4::zeros();
    for i in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        db[i] = z * sq;
    }
    db
}

/// Matrix of the rotation in the plane of unit vectors `x`, `y` taking `x` to `y`.
pub fn transport_matrix(x: &Vec4, y: &Vec4) -> Mat4 {
    Mat4::identity() - (x + y) * y.transpose() / (1.0 + x.dot(y))
}

/// `Q − ½Ric^♯(Q)dt`.
pub fn evolve_q(g: &GeometryModel, q: &Mat4, dt: f64) -> Mat4 {
    let t = g.tensors();
    if t.kappa == 0.0 {
        return *q;
    }
    let mut out = *q;
    for j in 0..4 {
        let c = q.column(j).into_owned();
        out.set_column(j, &(c - 0.5 * dt * t.ric_sharp(&c)));
    }
    out
}

/// Itô increment of `W^k` at `x` for the displacement `xi` and `u = Q v`.
pub fn evolve_w_k(g: &GeometryModel, w: &Vec4, u: &Vec4, xi: &Vec4, k: f64, dt: f64) -> Vec4 {
    let t = g.tensors();
    if t.kappa == 0.0 {
        return *w;
    }
    let a = k * u;
    w + t.riemann(xi, &a, u) - 0.5 * dt * t.divergence_term(&a, u) - 0.5 * dt * t.ric_sharp(w)
}

/// Boundary part of the `Q̃` equation: `Q̃ + ½(∇N)(Q̃)dl` at the boundary point `p`.
pub fn evolve_q_tilde(g: &GeometryModel, p: &Vec4, q: &Mat4, dl: f64) -> Mat4 {
    let mut out = *q;
    for j in 0..4 {
        let c = q.column(j).into_owned();
        out.set_column(j, &(c + 0.5 * dl * g.grad_normal(p, &c)));
    }
    out
}

/// Boundary part of the `W̃` equation with `a = Q̃(kv)`, `u = Q̃v`.
pub fn evolve_w_tilde(g: &GeometryModel, p: &Vec4, w: &Vec4, a: &Vec4, u: &Vec4, dl: f64) -> Vec4 {
    w - 0.5 * dl * g.neumann_boundary_tensor(p, a, u) + 0.5 * dl * g.grad_normal(p, w)
}

/// Multiplies the normal components of `Q̃` and `W̃` by `sign` at a contact.
///
/// `W̃` is first compensated so that `Hess φ(Q̃(kv), Q̃v) + dφ(W̃)` is unchanged for
/// Neumann `φ`; the sign is drawn uniformly, so the normal part is killed in mean.
#[allow(clippy::too_many_arguments)]
pub fn randomize_normal_sign(
    g: &GeometryModel,
    p: &Vec4,
    normal: &Vec4,
    q: &Mat4,
    w: &Vec4,
    v: &Vec4,
    k: f64,
    sign: f64,
) -> (Mat4, Vec4) {
    let u = q * v;
    let a = k * u;
    let (an, un) = (normal.dot(&a), normal.dot(&u));
    let (at, ut) = (a - an * normal, u - un * normal);
    let c = 1.0 - sign;
    let mut w2 = *w;
    if c != 0.0 {
        w2 -= c * (an * g.grad_normal(p, &ut) + un * g.grad_normal(p, &at));
    }
    let f = Mat4::identity() - c * normal * normal.transpose();
    (f * q, f * w2)
}

/// Probability that a Brownian bridge from `x` to `y` over `dt` stays inside.
fn bridge_survival(g: &GeometryModel, x: &Vec4, y: &Vec4, dt: f64) -> f64 {
    let edges: &[f64] = match &g.shape {
        Shape::Interval { length } => std::slice::from_ref(length),
        Shape::Box { edges } => edges,
        _ => return 1.0 - (-2.0 * g.rho(x).max(0.0) * g.rho(y).max(0.0) / dt).exp(),
    };
    let mut s = 1.0;
    for (i, e) in edges.iter().enumerate() {
        s *= 1.0 - (-2.0 * x[i] * y[i] / dt).exp();
        s *= 1.0 - (-2.0 * (e - x[i]) * (e - y[i]) / dt).exp();
    }
    s
}

fn advance(g: &GeometryModel, s: &mut PathState, ctx: StepCtx, xi: &Vec4, dt: f64, y: Vec4) {
    let u = s.q * s.direction;
    s.stoch_int += ctx.kdot * u.dot(xi);
    if g.is_curved() {
        s.w = evolve_w_k(g, &s.w, &u, xi, ctx.k, dt);
        s.q = evolve_q(g, &s.q, dt);
        let rot = transport_matrix(&s.position, &y);
        s.q = rot * s.q;
        s.w = rot * s.w;
        s.transport = rot * s.transport;
    }
    s.position = y;
    s.time += dt;
}

/// One Euler step of Brownian motion killed at the boundary, in place.
///
/// Flat models step in Cartesian coordinates; the cap steps along the transported frame
/// and retracts onto the sphere. A crossing stops the path at the linearly interpolated
/// exit point, projected onto the boundary. Does nothing to a dead path.
pub fn step_killed_bm<R: Rng + ?Sized>(g: &GeometryModel, s: &mut PathState, ctx: StepCtx, bridge_kill: bool, rng: &mut R) {
    if !s.alive {
        return;
    }
    let db = draw_increment(g.dimension, ctx.dt, rng);
    step_killed_bm_with(g, s, ctx, &db, bridge_kill, rng);
}

/// As [`step_killed_bm`] with a caller-supplied frame increment `db`; `rng` only feeds the bridge test.
pub fn step_killed_bm_with<R: Rng + ?Sized>(
    g: &GeometryModel,
    s: &mut PathState,
    ctx: StepCtx,
    db: &Vec4,
    bridge_kill: bool,
    rng: &mut R,
) {
    if !s.alive {
        return;
    }
    let x = s.position;
    let xi_full = s.transport * db;
    let rho0 = g.rho(&x);
    let y = g.retract(&x, &xi_full);
    let rho1 = g.rho(&y);
    let mut frac = 1.0;
    let mut killed = false;
    if rho1 <= 0.0 {
        frac = if rho0 > 0.0 { (rho0 / (rho0 - rho1)).clamp(0.0, 1.0) } else { 0.0 };
        killed = true;
    } else if bridge_kill {
        let u: f64 = rng.random();
        if u >= bridge_survival(g, &x, &y, ctx.dt) {
            frac = 0.5;
            killed = true;
        }
    }
    if killed {
        let xi = frac * xi_full;
        let exit = g.project_to_boundary(&g.retract(&x, &xi));
        advance(g, s, ctx, &xi, frac * ctx.dt, exit);
        s.alive = false;
        s.tau = Some(s.time);
    } else {
        advance(g, s, ctx, &xi_full, ctx.dt, y);
    }
}

/// A boundary contact within one reflecting step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    /// Inward unit normal of the face touched.
    pub normal: Vec4,
    /// Boundary point where the boundary tensors are evaluated.
    pub point: Vec4,
    /// Local-time increment.
    pub dl: f64,
}

struct Reflected {
    y: Vec4,
    dm: Vec4,
    contacts: [Option<Contact>; 4],
}

fn flat_faces(g: &GeometryModel) -> Option<&[f64]> {
    match &g.shape {
        Shape::Interval { length } => Some(std::slice::from_ref(length)),
        Shape::Box { edges } => Some(edges),
        _ => None,
    }
}

/// Contact probability and Skorokhod term of a half-line reflected bridge from distance `a` to `b`.
fn half_line_contact<R: Rng + ?Sized>(a: f64, b: f64, dt: f64, rng: &mut R) -> Option<f64> {
    let z = 2.0 * a * b / dt;
    if z > 40.0 {
        return None;
    }
    let p = 2.0 / (z.exp() + 1.0);
    let u: f64 = rng.random();
    if u >= p {
        return None;
    }
    let e: f64 = 1.0 - rng.random::<f64>();
    let s = a + b;
    Some((s * s - 2.0 * dt * e.ln()).sqrt() - s)
}

fn reflect_exact<R: Rng + ?Sized>(g: &GeometryModel, x: &Vec4, db: &Vec4, dt: f64, rng: &mut R) -> Result<Reflected> {
    let mut out = Reflected { y: *x, dm: *db, contacts: [None; 4] };
    if let Some(edges) = flat_faces(g) {
        for (i, e) in edges.iter().enumerate() {
            let lower = x[i] <= 0.5 * e;
            let (wall, sgn) = if lower { (0.0, 1.0) } else { (*e, -1.0) };
            let yi = crate::geometry::mirror(x[i] + db[i], *e);
            out.y[i] = yi;
            let (a, b) = ((x[i] - wall).abs(), (yi - wall).abs());
            out.dm[i] = yi - x[i];
            if let Some(l) = half_line_contact(a, b, dt, rng) {
                let mut normal = Vec4::zeros();
                normal[i] = sgn;
                let mut point = out.y;
                point[i] = wall;
                out.dm[i] -= sgn * l;
                out.contacts[i] = Some(Contact { normal, point, dl: 2.0 * l });
            }
        }
        return Ok(out);
    }
    match &g.shape {
        Shape::Disk { radius } | Shape::Ball { radius } => {
            let r0 = *radius;
            let mut y = x + db;
            let r = y.norm();
            if r > r0 {
                y *= (2.0 * r0 - r).max(0.0) / r;
            }
            out.y = y;
            out.dm = y - x;
            let (a, b) = (r0 - x.norm(), r0 - y.norm());
            if let Some(l) = half_line_contact(a, b, dt, rng) {
                let ry = y.norm();
                let dir = if ry > 0.0 { y / ry } else { x / x.norm() };
                let normal = -dir;
                out.dm -= l * normal;
                out.contacts[0] = Some(Contact { normal, point: dir * r0, dl: 2.0 * l });
            }
            Ok(out)
        }
        _ => Err(Error::Capability("reflecting motion is only implemented for flat models".into())),
    }
}

fn reflect_project(g: &GeometryModel, x: &Vec4, db: &Vec4) -> Result<Reflected> {
    let mut out = Reflected { y: x + db, dm: *db, contacts: [None; 4] };
    if let Some(edges) = flat_faces(g) {
        for (i, e) in edges.iter().enumerate() {
            let (wall, sgn, depth) = if out.y[i] < 0.0 {
                (0.0, 1.0, -out.y[i])
            } else if out.y[i] > *e {
                (*e, -1.0, out.y[i] - e)
            } else {
                continue;
            };
            out.y[i] = wall;
            let mut normal = Vec4::zeros();
            normal[i] = sgn;
            out.contacts[i] = Some(Contact { normal, point: Vec4::zeros(), dl: 2.0 * depth });
        }
        for c in out.contacts.iter_mut().flatten() {
            c.point = out.y;
        }
        return Ok(out);
    }
    match &g.shape {
        Shape::Disk { radius } | Shape::Ball { radius } => {
            let r = out.y.norm();
            if r > *radius {
                let p = out.y * (radius / r);
                out.contacts[0] = Some(Contact { normal: -p / *radius, point: p, dl: 2.0 * (r - radius) });
                out.y = p;
            }
            Ok(out)
        }
        _ => Err(Error::Capability("reflecting motion is only implemented for flat models".into())),
    }
}

/// One step of reflecting Brownian motion with `Q̃`, `W̃` and the local time, in place.
///
/// Flat models only. The martingale increment entering the stochastic integral is the
/// displacement minus the Skorokhod push `½N dl`.
pub fn step_reflecting_bm<R: Rng + ?Sized>(
    g: &GeometryModel,
    s: &mut PathState,
    ctx: StepCtx,
    scheme: BoundaryScheme,
    rng: &mut R,
) -> Result<Vec<Contact>> {
    let x = s.position;
    let db = draw_increment(g.dimension, ctx.dt, rng);
    let r = match scheme {
        BoundaryScheme::ReflectExact => reflect_exact(g, &x, &db, ctx.dt, rng)?,
        BoundaryScheme::ReflectProject => reflect_project(g, &x, &db)?,
        BoundaryScheme::CrossingKill => {
            return Err(Error::Argument("a reflecting boundary scheme is required".into()))
        }
    };
    let u = s.q * s.direction;
    s.stoch_int += ctx.kdot * u.dot(&r.dm);
    let mut contacts = Vec::new();
    for c in r.contacts.iter().flatten() {
        let u = s.q * s.direction;
        let a = ctx.k * u;
        s.w = evolve_w_tilde(g, &c.point, &s.w, &a, &u, c.dl);
        s.q = evolve_q_tilde(g, &c.point, &s.q, c.dl);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let (q, w) = randomize_normal_sign(g, &c.point, &c.normal, &s.q, &s.w, &s.direction, ctx.k, sign);
        s.q = q;
        s.w = w;
        s.local_time += c.dl;
        contacts.push(*c);
    }
    s.position = r.y;
    s.time += ctx.dt;
    Ok(contacts)
}

/// Simulates one path to the horizon (or the killing time) with the configured scheme.
pub fn simulate_path(g: &GeometryModel, x: &Vec4, v: &Vec4, cfg: &SimConfig, plan: &[StepCtx], path: usize) -> Result<PathState> {
    simulate_path_with(g, x, v, cfg, plan, path, |_| {})
}

/// As [`simulate_path`], calling `observe` after every step.
pub fn simulate_path_with<F: FnMut(&PathState)>(
    g: &GeometryModel,
    x: &Vec4,
    v: &Vec4,
    cfg: &SimConfig,
    plan: &[StepCtx],
    path: usize,
    mut observe: F,
) -> Result<PathState> {
    let mut rng = path_rng(cfg.seed, path);
    let mut s = PathState::start(g, x, v);
    if cfg.boundary_scheme.is_reflecting() {
        for ctx in plan {
            step_reflecting_bm(g, &mut s, *ctx, cfg.boundary_scheme, &mut rng)?;
            observe(&s);
        }
    } else {
        if g.rho(x) <= BOUNDARY_TOL {
            s.alive = false;
            s.tau = Some(0.0);
            return Ok(s);
        }
        for ctx in plan {
            step_killed_bm(g, &mut s, *ctx, cfg.bridge_kill, &mut rng);
            observe(&s);
            if !s.alive {
                break;
            }
        }
    }
    Ok(s)
}

/// Runs `f` on every path index in parallel and returns the results in index order.
pub fn run_paths<T: Send, F: Fn(usize) -> Result<T> + Sync + Send>(paths: usize, f: F) -> Result<Vec<T>> {
    (0..paths).into_par_iter().map(f).collect()
}

/// Monte Carlo mean of a per-path functional of the terminal state.
pub fn estimate<F>(g: &GeometryModel, x: &Vec4, v: &Vec4, cfg: &SimConfig, f: F) -> Result<McEstimate>
where
    F: Fn(&PathState) -> f64 + Sync,
{
    cfg.validate()?;
    let start = Instant::now();
    let plan = cfg.plan();
    let samples = run_paths(cfg.paths, |i| simulate_path(g, x, v, cfg, &plan, i).map(|s| f(&s)))?;
    Ok(McEstimate::from_samples(&samples, cfg.seed, start.elapsed().as_secs_f64()))
}

/// Writes one path as little-endian `f64` records `[t, x_0..x_{m-1}, l_t]`, one per step.
pub fn write_trace<W: Write>(g: &GeometryModel, x: &Vec4, cfg: &SimConfig, path: usize, out: &mut W) -> Result<()> {
    let plan = cfg.plan();
    let m = g.ambient_dim();
    let mut err = None;
    let mut record = |s: &PathState| {
        if err.is_some() {
            return;
        }
        let mut buf = Vec::with_capacity(8 * (m + 2));
        buf.extend_from_slice(&s.time.to_le_bytes());
        for i in 0..m {
            buf.extend_from_slice(&s.position[i].to_le_bytes());
        }
        buf.extend_from_slice(&s.local_time.to_le_bytes());
        if let Err(e) = out.write_all(&buf) {
            err = Some(e);
        }
    };
    let v = g.frame(x).column(0).into_owned();
    record(&PathState::start(g, x, &v));
    simulate_path_with(g, x, &v, cfg, &plan, path, &mut record)?;
    match err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
