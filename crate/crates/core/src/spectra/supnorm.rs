//! Certified-by-refinement sup norms of `φ`, `|∇φ|` and the Hessian spectral radius.
//!
//! Each search evaluates a parameter grid in tiles, keeps the best cells in grid order,
//! polishes them by compass search and doubles the grid until the polished value settles.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EigenPair;
use crate::geometry::{ChartPoint, GeometryModel, Mat4, Shape, Vec4};

/// A sup norm with where it was attained and how settled it is.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNormResult {
    pub value: f64,
    pub argmax: ChartPoint,
    pub grid_level: usize,
    /// Relative change of the polished value over the last refinement.
    pub error_estimate: f64,
}

/// The three sup norms of an eigenfunction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNorms {
    pub phi_sup: SupNormResult,
    pub grad_sup: SupNormResult,
    pub hess_sup: SupNormResult,
}

/// Grid and refinement controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNormOptions {
    /// Points for one-dimensional searches.
    pub base_1d: usize,
    /// Minimum points per dimension for two-dimensional searches.
    pub base_2d: usize,
    /// Minimum points per dimension for three-dimensional searches.
    pub base_3d: usize,
    /// Extra points per unit of `κ · extent`.
    pub density: f64,
    pub rel_tol: f64,
    pub max_levels: usize,
}

impl Default for SupNormOptions {
    fn default() -> Self {
        SupNormOptions {
            base_1d: 2048,
            base_2d: 128,
            base_3d: 24,
            density: 2.0,
            rel_tol: 1e-7,
            max_levels: 3,
        }
    }
}

/// Largest absolute eigenvalue of the leading `k x k` block of a symmetric matrix.
pub(crate) fn spectral_radius(h: &Mat4, k: usize) -> f64 {
    match k {
        1 => h[(0, 0)].abs(),
        2 => {
            let m = 0.5 * (h[(0, 0)] + h[(1, 1)]);
            let q = 0.5 * (h[(0, 0)] - h[(1, 1)]);
            let b = 0.5 * (h[(0, 1)] + h[(1, 0)]);
            m.abs() + q.hypot(b)
        }
        3 => {
            let m = Matrix3::from_fn(|i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
            SymmetricEigen::new(m).eigenvalues.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
        }
        _ => {
            let m = 0.5 * (h + h.transpose());
            SymmetricEigen::new(m).eigenvalues.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
        }
    }
}

type Objective<'a> = dyn Fn(&[f64]) -> [f64; 3] + Sync + 'a;
type Embed<'a> = dyn Fn(&[f64]) -> Vec4 + Sync + 'a;

struct Search<'a> {
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Physical extent of each parameter range, for grid density.
    extent: Vec<f64>,
    objective: Box<Objective<'a>>,
    embed: Box<Embed<'a>>,
}

/// Three best (value, flat index) entries, ordered by value then index.
#[derive(Clone, Copy)]
struct Top([(f64, usize); 3]);

impl Top {
    fn new() -> Self {
        Top([(f64::NEG_INFINITY, usize::MAX); 3])
    }

    fn better(a: (f64, usize), b: (f64, usize)) -> bool {
        a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
    }

    fn push(&mut self, e: (f64, usize)) {
        if !Self::better(e, self.0[2]) {
            return;
        }
        self.0[2] = e;
        if Self::better(self.0[2], self.0[1]) {
            self.0.swap(1, 2);
            if Self::better(self.0[1], self.0[0]) {
                self.0.swap(0, 1);
            }
        }
    }
}

fn grid_point(s: &Search, counts: &[usize], mut flat: usize) -> Vec<f64> {
    let d = counts.len();
    let mut p = vec![0.0; d];
    for i in (0..d).rev() {
        let k = flat % counts[i];
        flat /= counts[i];
        p[i] = if counts[i] == 1 {
            s.lo[i]
        } else {
            s.lo[i] + (s.hi[i] - s.lo[i]) * k as f64 / (counts[i] - 1) as f64
        };
    }
    p
}

fn compass(s: &Search, comp: usize, start: &[f64], step0: &[f64]) -> (f64, Vec<f64>) {
    let d = start.len();
    let mut p = start.to_vec();
    let mut best = (s.objective)(&p)[comp];
    let mut step = step0.to_vec();
    let min_step: Vec<f64> = (0..d).map(|i| 1e-11 * (s.hi[i] - s.lo[i]).max(1e-300)).collect();
    for _ in 0..4000 {
        let mut moved = false;
        for i in 0..d {
            if s.hi[i] == s.lo[i] {
                continue;
            }
            for sign in [1.0, -1.0] {
                let mut q = p.clone();
                q[i] = (q[i] + sign * step[i]).clamp(s.lo[i], s.hi[i]);
                if q[i] == p[i] {
                    continue;
                }
                let v = (s.objective)(&q)[comp];
                if v > best {
                    best = v;
                    p = q;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            let mut done = true;
            for i in 0..d {
                step[i] *= 0.5;
                if step[i] > min_step[i] {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
    }
    (best, p)
}

struct LevelResult {
    best: [(f64, Vec<f64>); 3],
}

fn run_level(s: &Search, counts: &[usize]) -> LevelResult {
    let total: usize = counts.iter().product();
    let tile = 2048;
    let tiles: Vec<[Top; 3]> = (0..total.div_ceil(tile))
        .into_par_iter()
        .map(|t| {
            let mut tops = [Top::new(); 3];
            for flat in (t * tile)..((t + 1) * tile).min(total) {
                let p = grid_point(s, counts, flat);
                let v = (s.objective)(&p);
                for c in 0..3 {
                    tops[c].push((v[c], flat));
                }
            }
            tops
        })
        .collect();
    let mut tops = [Top::new(); 3];
    for t in &tiles {
        for c in 0..3 {
            for e in t[c].0 {
                if e.1 != usize::MAX {
                    tops[c].push(e);
                }
            }
        }
    }
    let step: Vec<f64> = (0..counts.len())
        .map(|i| if counts[i] > 1 { (s.hi[i] - s.lo[i]) / (counts[i] - 1) as f64 } else { 0.0 })
        .collect();
    let phi_seed = grid_point(s, counts, tops[0].0[0].1);
    let polish = |c: usize| -> (f64, Vec<f64>) {
        let mut starts: Vec<Vec<f64>> = tops[c]
            .0
            .iter()
            .filter(|e| e.1 != usize::MAX)
            .map(|e| grid_point(s, counts, e.1))
            .collect();
        if c == 2 {
            starts.push(phi_seed.clone());
        }
        let mut best = (f64::NEG_INFINITY, starts[0].clone());
        for st in starts {
            let r = compass(s, c, &st, &step);
            if r.0 > best.0 {
                best = r;
            }
        }
        best
    };
    LevelResult { best: [polish(0), polish(1), polish(2)] }
}

fn search(s: &Search, g: &GeometryModel, kappa: f64, opts: &SupNormOptions) -> super::SupNorms {
    let active: Vec<usize> = (0..s.lo.len()).filter(|&i| s.hi[i] > s.lo[i]).collect();
    let base = match active.len() {
        0 | 1 => opts.base_1d,
        2 => opts.base_2d,
        _ => opts.base_3d,
    };
    let mut counts: Vec<usize> = (0..s.lo.len())
        .map(|i| {
            if s.hi[i] > s.lo[i] {
                base.max((opts.density * kappa * s.extent[i]).ceil() as usize + 1)
            } else {
                1
            }
        })
        .collect();
    let mut prev: Option<[f64; 3]> = None;
    let mut last = None;
    let mut errors = [f64::INFINITY; 3];
    let mut level = 0;
    while level < opts.max_levels {
        let r = run_level(s, &counts);
        let vals = [r.best[0].0, r.best[1].0, r.best[2].0];
        if let Some(p) = prev {
            for c in 0..3 {
                errors[c] = (vals[c] - p[c]).abs() / vals[c].abs().max(1e-300);
            }
        }
        last = Some(r);
        let settled = errors.iter().all(|e| *e <= opts.rel_tol);
        prev = Some(vals);
        if settled {
            break;
        }
        level += 1;
        if level < opts.max_levels {
            for c in counts.iter_mut() {
                if *c > 1 {
                    *c = 2 * *c - 1;
                }
            }
        } else {
            level -= 1;
            break;
        }
    }
    let r = last.expect("at least one level runs");
    let mk = |c: usize| {
        let (v, p) = &r.best[c];
        super::SupNormResult {
            value: *v,
            argmax: g.to_chart(&(s.embed)(p)),
            grid_level: level,
            error_estimate: errors[c],
        }
    };
    super::SupNorms { phi_sup: mk(0), grad_sup: mk(1), hess_sup: mk(2) }
}

fn triple(e: &EigenPair, x: &Vec4, k: usize) -> [f64; 3] {
    let (v, grad, h) = e.eval_all(x);
    [v.abs(), grad.norm(), spectral_radius(&h, k)]
}

/// Maximum over `c ∈ [0, 1]` of `|p| c + sqrt(q² c² + b² (1 − c²))`.
fn angular_hessian_sup(p: f64, q: f64, b: f64) -> f64 {
    let f = |c: f64| p.abs() * c + (q * q * c * c + b * b * (1.0 - c * c)).max(0.0).sqrt();
    let mut best = f(0.0).max(f(1.0));
    let e = b * b - q * q;
    if e > 0.0 {
        let c = (p * p * b * b / (e * (e + p * p))).sqrt();
        if c <= 1.0 {
            best = best.max(f(c));
        }
    }
    best
}

/// Sup norms with default grid controls.
pub fn sup_norms(e: &EigenPair, g: &GeometryModel) -> super::SupNorms {
    sup_norms_with(e, g, &SupNormOptions::default())
}

/// Sup norms with explicit grid controls.
pub fn sup_norms_with(e: &EigenPair, g: &GeometryModel, opts: &SupNormOptions) -> super::SupNorms {
    let kappa = e.lambda.sqrt();
    let m = e.azimuthal;
    let az = if m > 0 { PI / m as f64 } else { 0.0 };
    let s = match &g.shape {
        Shape::Interval { length } => Search {
            lo: vec![0.0],
            hi: vec![*length],
            extent: vec![*length],
            objective: Box::new(move |p| triple(e, &Vec4::new(p[0], 0.0, 0.0, 0.0), 1)),
            embed: Box::new(|p| Vec4::new(p[0], 0.0, 0.0, 0.0)),
        },
        Shape::Box { edges } => {
            let n = edges.len();
            let emb = move |p: &[f64]| {
                let mut x = Vec4::zeros();
                x.as_mut_slice()[..n].copy_from_slice(p);
                x
            };
            Search {
                lo: vec![0.0; n],
                hi: edges.clone(),
                extent: edges.clone(),
                objective: Box::new(move |p| triple(e, &emb(p), n)),
                embed: Box::new(emb),
            }
        }
        Shape::Disk { radius } => {
            let sine = e.mode_indices.get(2).copied().unwrap_or(0) == 1;
            let ta = if sine && m > 0 { PI / (2.0 * m as f64) } else { 0.0 };
            let tb = ta + if m > 0 { PI / (2.0 * m as f64) } else { 0.0 };
            let at = |r: f64, t: f64| Vec4::new(r * t.cos(), r * t.sin(), 0.0, 0.0);
            let obj = move |p: &[f64]| -> [f64; 3] {
                let r = p[0];
                let (va, ga, ha) = e.eval_all(&at(r, ta));
                let er = Vec4::new(ta.cos(), ta.sin(), 0.0, 0.0);
                let et = Vec4::new(-ta.sin(), ta.cos(), 0.0, 0.0);
                let a = er.dot(&(ha * er));
                let d = et.dot(&(ha * et));
                if m == 0 {
                    return [va.abs(), ga.norm(), spectral_radius(&ha, 2)];
                }
                let (_, gb, hb) = e.eval_all(&at(r, tb));
                let erb = Vec4::new(tb.cos(), tb.sin(), 0.0, 0.0);
                let etb = Vec4::new(-tb.sin(), tb.cos(), 0.0, 0.0);
                let b = erb.dot(&(hb * etb));
                [va.abs(), ga.norm().max(gb.norm()), angular_hessian_sup(0.5 * (a + d), 0.5 * (a - d), b)]
            };
            Search {
                lo: vec![0.0],
                hi: vec![*radius],
                extent: vec![*radius],
                objective: Box::new(obj),
                embed: Box::new(move |p| at(p[0], ta)),
            }
        }
        Shape::Ball { radius } => {
            let emb = |p: &[f64]| {
                let (st, ct) = p[1].sin_cos();
                let (sp, cp) = p[2].sin_cos();
                Vec4::new(p[0] * st * cp, p[0] * st * sp, p[0] * ct, 0.0)
            };
            Search {
                lo: vec![0.0, 0.0, 0.0],
                hi: vec![*radius, PI, az],
                extent: vec![*radius, PI * radius, az * radius],
                objective: Box::new(move |p| triple(e, &emb(p), 3)),
                embed: Box::new(emb),
            }
        }
        Shape::SphericalCap { n, theta } => {
            if *n == 2 {
                let emb = |p: &[f64]| {
                    let (st, ct) = p[0].sin_cos();
                    let (sp, cp) = p[1].sin_cos();
                    Vec4::new(st * cp, st * sp, ct, 0.0)
                };
                Search {
                    lo: vec![0.0, 0.0],
                    hi: vec![*theta, az],
                    extent: vec![*theta, az],
                    objective: Box::new(move |p| triple(e, &emb(p), 3)),
                    embed: Box::new(emb),
                }
            } else {
                let emb = |p: &[f64]| {
                    let (st, ct) = p[0].sin_cos();
                    let (sq, cq) = p[1].sin_cos();
                    let (sp, cp) = p[2].sin_cos();
                    Vec4::new(st * sq * cp, st * sq * sp, st * cq, ct)
                };
                Search {
                    lo: vec![0.0, 0.0, 0.0],
                    hi: vec![*theta, PI, az],
                    extent: vec![*theta, PI, az],
                    objective: Box::new(move |p| triple(e, &emb(p), 4)),
                    embed: Box::new(emb),
                }
            }
        }
    };
    search(&s, g, kappa, opts)
}
