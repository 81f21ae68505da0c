//! The subcommands. Each returns the files it wrote and whether its gates passed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{CheckKind, ExperimentConfig, SimSpec};
use super::svg::{self, Panel, Series, Style};
use crate::bounds::{
    dirichlet_normalised_constant, dirichlet_ratio_constant, neumann_collar_constant, BoundReport, DirichletBoundInputs,
    NeumannBoundInputs,
};
use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, GeometryModel, Shape, Vec4};
use crate::pathwise::{
    h_data_for, hessian_via_bismut_dirichlet, hessian_via_bismut_neumann, local_time_moment_check, martingale_check_dirichlet,
    q_norm_check, w_moment_check, BoundaryScheme, CheckRecord, RunManifest, SimConfig,
};
use crate::spectra::{enumerate_eigenpairs, scaling_from_pairs, sup_norms, whispering_gallery, BoundaryCondition, EigenPair, ScalingTable};

/// Slack on the fitted slopes in the scaling gates.
pub const SLOPE_SLACK: f64 = 0.15;
/// Absolute slack in the lower bound `‖Hess φ‖∞ ≥ (λ/n)‖φ‖∞`.
pub const LOWER_BOUND_SLACK: f64 = 1e-9;
/// Eigenpairs searched when a mode is selected by its indices.
const MODE_SEARCH: usize = 60;

/// What a command produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    /// Human-readable summary printed to stdout.
    pub summary: String,
    /// Names of the failed gates.
    pub failures: Vec<String>,
}

fn write_file(dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let p = dir.join(name);
    fs::write(&p, body)?;
    files.push(p);
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialises");
    s.push('\n');
    s
}

fn stamp(cfg: &ExperimentConfig) -> Option<String> {
    cfg.output.timestamp.then(|| {
        let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("at unix time {secs}")
    })
}

fn mode_label(e: &EigenPair) -> String {
    let idx: Vec<String> = e.mode_indices.iter().map(|v| v.to_string()).collect();
    idx.join(" ")
}

/// Nonconstant eigenpairs: the constant Neumann mode has a zero Hessian and no finite constant.
fn nonconstant_pairs(g: &GeometryModel, bc: BoundaryCondition, count: usize) -> Result<Vec<EigenPair>> {
    let extra = usize::from(bc == BoundaryCondition::Neumann);
    let pairs = enumerate_eigenpairs(g, bc, count + extra)?;
    Ok(pairs.into_iter().filter(|e| e.lambda > 1e-12).take(count).collect())
}

/// The analytic bound report used for `‖Hess φ‖∞ / ‖φ‖∞` at eigenvalue `lambda`.
pub fn ratio_bound_report(g: &GeometryModel, bc: BoundaryCondition, lambda: f64, cfg: &ExperimentConfig) -> Result<BoundReport> {
    let o = cfg.bounds.options();
    match bc {
        BoundaryCondition::Dirichlet => dirichlet_ratio_constant(&DirichletBoundInputs::from_model(g, lambda, o.k_floor), &o),
        BoundaryCondition::Neumann => neumann_collar_constant(&NeumannBoundInputs::from_model(g, lambda), &o),
    }
}

/// The λ-normalised constant at `lambda`.
pub fn lambda_constant(g: &GeometryModel, bc: BoundaryCondition, lambda: f64, cfg: &ExperimentConfig) -> Result<f64> {
    let o = cfg.bounds.options();
    let r = match bc {
        BoundaryCondition::Dirichlet => dirichlet_normalised_constant(&DirichletBoundInputs::from_model(g, lambda, o.k_floor), &o)?,
        BoundaryCondition::Neumann => neumann_collar_constant(&NeumannBoundInputs::from_model(g, lambda), &o)?,
    };
    Ok(r.constant)
}

#[derive(Serialize)]
struct BoundRow {
    mode_indices: Vec<i64>,
    lambda: f64,
    measured_ratio: f64,
    lower_bound: f64,
    holds: bool,
    report: BoundReport,
}

#[derive(Serialize)]
struct SweepRow {
    lambda: f64,
    constant: f64,
}

#[derive(Serialize)]
struct BoundsFile<'a> {
    command: &'a str,
    config: serde_json::Value,
    geometry: &'a GeometryModel,
    rows: Vec<BoundRow>,
    sweep: Vec<SweepRow>,
    sweep_nonincreasing: bool,
    all_hold: bool,
}

/// Constants for the first modes against their measured Hessian ratios, plus a λ sweep.
pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let g = cfg.geometry.build()?;
    let bc = cfg.bc;
    let n = g.dimension as f64;
    let pairs = nonconstant_pairs(&g, bc, cfg.modes.unwrap_or(10))?;
    let mut rows = Vec::new();
    let mut out = Outcome::default();
    for e in &pairs {
        let s = sup_norms(e, &g);
        let ratio = s.hess_sup.value / s.phi_sup.value;
        let report = ratio_bound_report(&g, bc, e.lambda, cfg)?;
        let lower = e.lambda / n - LOWER_BOUND_SLACK;
        let holds = ratio <= report.ratio_bound && ratio >= lower;
        if !holds {
            out.failures.push(format!("mode {}", mode_label(e)));
        }
        rows.push(BoundRow { mode_indices: e.mode_indices.clone(), lambda: e.lambda, measured_ratio: ratio, lower_bound: lower, holds, report });
    }
    let mut sweep = Vec::new();
    for &l in &cfg.bounds.lambdas {
        sweep.push(SweepRow { lambda: l, constant: lambda_constant(&g, bc, l, cfg)? });
    }
    let sweep_nonincreasing = sweep.windows(2).all(|w| w[1].constant <= w[0].constant);

    let mut csv = String::from("mode_indices,lambda,measured_ratio,lambda_over_n,ratio_bound,constant,holds\n");
    let mut table = format!(
        "{} {} ({} variant, k floor {})\n{:<12} {:>12} {:>14} {:>14} {:>14}  ok\n",
        g.name,
        bc,
        cfg.bounds.alpha_variant,
        cfg.bounds.k_floor,
        "mode",
        "lambda",
        "measured",
        "lambda/n",
        "bound"
    );
    for r in &rows {
        let idx: Vec<String> = r.mode_indices.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(
            csv,
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            idx.join(" "),
            r.lambda,
            r.measured_ratio,
            r.lower_bound + LOWER_BOUND_SLACK,
            r.report.ratio_bound,
            r.report.constant,
            r.holds
        );
        let _ = writeln!(
            table,
            "{:<12} {:>12.6} {:>14.6} {:>14.6} {:>14.6}  {}",
            idx.join(" "),
            r.lambda,
            r.measured_ratio,
            r.lower_bound + LOWER_BOUND_SLACK,
            r.report.ratio_bound,
            if r.holds { "yes" } else { "NO" }
        );
    }
    let mut sweep_csv = String::from("lambda,constant\n");
    let _ = writeln!(table, "\n{:>12} {:>16}", "lambda", "C_lambda");
    for r in &sweep {
        let _ = writeln!(sweep_csv, "{:.12e},{:.12e}", r.lambda, r.constant);
        let _ = writeln!(table, "{:>12} {:>16.6}", r.lambda, r.constant);
    }
    let _ = writeln!(table, "C_lambda nonincreasing over the sweep: {sweep_nonincreasing}");

    out.passed = rows.iter().all(|r| r.holds);
    let file = BoundsFile { command: "bounds", config: cfg.echo(), geometry: &g, rows, sweep, sweep_nonincreasing, all_hold: out.passed };
    let dir = &cfg.output.dir;
    write_file(dir, "bounds.json", &to_json(&file), &mut out.files)?;
    write_file(dir, "bounds.csv", &csv, &mut out.files)?;
    write_file(dir, "bounds_sweep.csv", &sweep_csv, &mut out.files)?;
    out.summary = table;
    Ok(out)
}

/// `(n−1)/4, (n+1)/4, (n+3)/4`: the sup-norm growth rates of φ, ∇φ and Hess φ.
pub fn reference_slopes(n: usize) -> [f64; 3] {
    let n = n as f64;
    [(n - 1.0) / 4.0, (n + 1.0) / 4.0, (n + 3.0) / 4.0]
}

fn sup_panel(t: &ScalingTable, n: usize) -> Panel {
    let pts = |f: fn(&crate::spectra::ScalingRow) -> f64| t.rows.iter().map(|r| (r.lambda, f(r))).collect::<Vec<_>>();
    let (lo, hi) = (t.rows.first().map_or(1.0, |r| r.lambda), t.rows.last().map_or(1.0, |r| r.lambda));
    let [a, b, c] = reference_slopes(n);
    let mut series = vec![
        Series { label: "sup |phi|".into(), color: "#1f77b4", style: Style::Points, points: pts(|r| r.phi_sup) },
        Series { label: "sup |grad phi|".into(), color: "#2ca02c", style: Style::Points, points: pts(|r| r.grad_sup) },
        Series { label: "sup |Hess phi|".into(), color: "#d62728", style: Style::Points, points: pts(|r| r.hess_sup) },
    ];
    if let Some(r0) = t.rows.first() {
        series.push(svg::reference_line(&format!("slope {a}"), "#1f77b4", a, (r0.lambda, r0.phi_sup), lo, hi));
        series.push(svg::reference_line(&format!("slope {b}"), "#2ca02c", b, (r0.lambda, r0.grad_sup), lo, hi));
        series.push(svg::reference_line(&format!("slope {c}"), "#d62728", c, (r0.lambda, r0.hess_sup), lo, hi));
    }
    Panel {
        title: format!("{} {}: sup norms (L2-normalised)", t.geometry, t.bc),
        x_label: "eigenvalue".into(),
        y_label: "sup norm".into(),
        series,
    }
}

#[derive(Serialize)]
struct SpectrumFile<'a> {
    command: &'a str,
    config: serde_json::Value,
    table: &'a ScalingTable,
    reference_slopes: [f64; 3],
    ratio_bounds: Vec<f64>,
    all_below_bound: bool,
}

/// Scaling table, a log-log figure with reference slopes, and the bound overlay.
pub fn cmd_spectrum(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let g = cfg.geometry.build()?;
    let pairs = nonconstant_pairs(&g, cfg.bc, cfg.modes.unwrap_or(30))?;
    if pairs.len() < 2 {
        return Err(Error::Config("the spectrum needs at least two nonconstant modes".into()));
    }
    let t = scaling_from_pairs(&g, cfg.bc, &pairs);
    let mut out = Outcome::default();
    let mut bounds = Vec::new();
    let mut csv = String::from("mode_indices,lambda,phi_sup,grad_sup,hess_sup,hess_ratio,ratio_bound\n");
    for (r, e) in t.rows.iter().zip(&pairs) {
        let b = ratio_bound_report(&g, cfg.bc, r.lambda, cfg)?.ratio_bound;
        let ratio = r.hess_sup / r.phi_sup;
        if ratio > b {
            out.failures.push(format!("mode {} above its bound", mode_label(e)));
        }
        let _ = writeln!(
            csv,
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            mode_label(e),
            r.lambda,
            r.phi_sup,
            r.grad_sup,
            r.hess_sup,
            ratio,
            b
        );
        bounds.push(b);
    }
    let refs = reference_slopes(g.dimension);
    let overlay = Panel {
        title: format!("{} {}: Hessian ratio against the bound", g.name, cfg.bc),
        x_label: "eigenvalue".into(),
        y_label: "sup|Hess phi| / sup|phi|".into(),
        series: vec![
            Series {
                label: "bound C lambda".into(),
                color: "#444",
                style: Style::Line,
                points: t.rows.iter().zip(&bounds).map(|(r, b)| (r.lambda, *b)).collect(),
            },
            Series {
                label: "measured".into(),
                color: "#d62728",
                style: Style::Points,
                points: t.rows.iter().map(|r| (r.lambda, r.hess_sup / r.phi_sup)).collect(),
            },
        ],
    };
    let figure = svg::render(&[sup_panel(&t, g.dimension), overlay], stamp(cfg).as_deref());
    out.passed = out.failures.is_empty();
    let file = SpectrumFile { command: "spectrum", config: cfg.echo(), table: &t, reference_slopes: refs, ratio_bounds: bounds, all_below_bound: out.passed };
    let dir = &cfg.output.dir;
    write_file(dir, "spectrum.csv", &csv, &mut out.files)?;
    write_file(dir, "spectrum.json", &to_json(&file), &mut out.files)?;
    write_file(dir, "spectrum.svg", &figure, &mut out.files)?;
    out.summary = format!(
        "{} {}: {} modes, fitted slopes phi {:.4} grad {:.4} hess {:.4} (reference {} {} {})\nall measured ratios below the bound: {}\n",
        g.name,
        cfg.bc,
        t.rows.len(),
        t.slope_phi,
        t.slope_grad,
        t.slope_hess,
        refs[0],
        refs[1],
        refs[2],
        out.passed
    );
    Ok(out)
}

#[derive(Serialize)]
struct Gate {
    name: String,
    value: f64,
    limit: f64,
    passed: bool,
}

#[derive(Serialize)]
struct ScalingFile<'a> {
    command: &'a str,
    config: serde_json::Value,
    table: &'a ScalingTable,
    reference_slopes: [f64; 3],
    gates: Vec<Gate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    whispering_gallery_hess_slope: Option<f64>,
}

/// Fitted sup-norm slopes with the growth-rate gates.
pub fn cmd_scaling(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let g = cfg.geometry.build()?;
    let count = cfg.modes.unwrap_or(50);
    if count < 20 {
        return Err(Error::Config(format!("the scaling study needs at least 20 modes, got {count}")));
    }
    let pairs = nonconstant_pairs(&g, cfg.bc, count)?;
    let t = scaling_from_pairs(&g, cfg.bc, &pairs);
    let refs = reference_slopes(g.dimension);
    let gates = vec![
        Gate { name: "gradient slope".into(), value: t.slope_grad, limit: refs[1] + SLOPE_SLACK, passed: t.slope_grad <= refs[1] + SLOPE_SLACK },
        Gate { name: "hessian slope".into(), value: t.slope_hess, limit: refs[2] + SLOPE_SLACK, passed: t.slope_hess <= refs[2] + SLOPE_SLACK },
    ];
    let wg = match g.shape {
        Shape::Disk { .. } => {
            let fam = whispering_gallery(&g, cfg.bc, 1..=20)?;
            Some(scaling_from_pairs(&g, cfg.bc, &fam).slope_hess)
        }
        _ => None,
    };
    let mut out = Outcome::default();
    for gt in gates.iter().filter(|g| !g.passed) {
        out.failures.push(gt.name.clone());
    }
    out.passed = out.failures.is_empty();
    let mut summary = format!("{} {}: {} modes\n", g.name, cfg.bc, t.rows.len());
    let _ = writeln!(summary, "phi slope {:.6} (reference {})", t.slope_phi, refs[0]);
    for gt in &gates {
        let _ = writeln!(summary, "{} {:.6} <= {:.4}: {}", gt.name, gt.value, gt.limit, if gt.passed { "pass" } else { "FAIL" });
    }
    if let Some(s) = wg {
        let _ = writeln!(summary, "whispering-gallery family hessian slope {s:.6} (reported, not gated)");
    }
    let file = ScalingFile { command: "scaling", config: cfg.echo(), table: &t, reference_slopes: refs, gates, whispering_gallery_hess_slope: wg };
    let dir = &cfg.output.dir;
    write_file(dir, "scaling.csv", &t.to_csv(), &mut out.files)?;
    write_file(dir, "scaling.json", &to_json(&file), &mut out.files)?;
    out.summary = summary;
    Ok(out)
}

/// Start point and unit direction of the pathwise checks.
pub fn check_target(g: &GeometryModel, sim: &SimSpec) -> Result<(Vec4, Vec4)> {
    let pi = std::f64::consts::PI;
    let chart = match &sim.point {
        Some(p) => p.clone(),
        None => match &g.shape {
            Shape::Interval { length } => vec![length / 3.0],
            Shape::Box { edges } => {
                let f = [1.0 / 3.0, 0.4 / pi, 0.45];
                edges.iter().zip(f).map(|(e, f)| e * f).collect()
            }
            Shape::Disk { radius } => vec![0.75 * radius, 0.25 * radius],
            Shape::Ball { radius } => vec![0.5 * radius, 0.3 * radius, 0.2 * radius],
            Shape::SphericalCap { n, theta } => [0.4, 0.15, 0.1][..*n].iter().map(|f| f * theta).collect(),
        },
    };
    let n = g.dimension;
    if chart.len() != n {
        return Err(Error::Config(format!("sim.point needs {n} coordinates, got {}", chart.len())));
    }
    let x = g.from_chart(&ChartPoint { coordinates: chart })?;
    if !g.contains(&x) || g.rho(&x) <= 0.0 {
        return Err(Error::Config(format!("sim.point {:?} is not interior to the {}", x.as_slice(), g.name)));
    }
    let d = sim.direction.clone().unwrap_or_else(|| {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        e
    });
    if d.len() != n {
        return Err(Error::Config(format!("sim.direction needs {n} components, got {}", d.len())));
    }
    let mut c = Vec4::zeros();
    for (i, v) in d.iter().enumerate() {
        c[i] = *v;
    }
    if !(c.norm() > 0.0) {
        return Err(Error::Config("sim.direction must be nonzero".into()));
    }
    let v = g.frame(&x) * (c / c.norm());
    Ok((x, v / v.norm()))
}

/// The configured eigenpair for `bc`, or the first nonconstant one.
pub fn check_pair(g: &GeometryModel, bc: BoundaryCondition, cfg: &ExperimentConfig) -> Result<EigenPair> {
    let pairs = enumerate_eigenpairs(g, bc, MODE_SEARCH)?;
    let chosen = match (&cfg.mode, bc == cfg.bc) {
        (Some(m), true) => pairs.into_iter().find(|e| &e.mode_indices == m),
        _ => pairs.into_iter().find(|e| e.lambda > 1e-12),
    };
    chosen.ok_or_else(|| Error::Config(format!("no {bc} mode {:?} among the first {MODE_SEARCH}", cfg.mode)))
}

fn killed(s: &SimSpec) -> SimConfig {
    SimConfig::new(s.dt, s.t, s.paths, s.seed).with_bridge_kill(s.bridge_kill)
}

fn reflecting(s: &SimSpec, default: BoundaryScheme) -> SimConfig {
    SimConfig::new(s.dt, s.t, s.paths, s.seed).with_scheme(s.scheme.unwrap_or(default))
}

/// Runs the configured checks and assembles the manifest.
pub fn verify_manifest(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let g = cfg.geometry.build()?;
    let (x, v) = check_target(&g, &cfg.sim)?;
    let name = g.name.as_str();
    let mut records: Vec<CheckRecord> = Vec::new();
    for &kind in &cfg.verify.checks {
        let id = kind.id();
        match kind {
            CheckKind::Martingale => {
                let e = check_pair(&g, BoundaryCondition::Dirichlet, cfg)?;
                records.push(martingale_check_dirichlet(&g, &e, &x, &v, &killed(&cfg.sim))?.record(id, name));
            }
            CheckKind::BismutDirichlet => {
                let e = check_pair(&g, BoundaryCondition::Dirichlet, cfg)?;
                records.push(hessian_via_bismut_dirichlet(&g, &e, &x, &v, &killed(&cfg.sim))?.record(id, name));
            }
            CheckKind::BismutNeumann => {
                let e = check_pair(&g, BoundaryCondition::Neumann, cfg)?;
                let sim = reflecting(&cfg.sim, BoundaryScheme::ReflectExact);
                records.push(hessian_via_bismut_neumann(&g, &e, &x, &v, &sim)?.record(id, name));
            }
            CheckKind::LocalTime => {
                let sim = reflecting(&cfg.sim, BoundaryScheme::ReflectProject);
                let alphas = cfg.verify.alphas.clone().unwrap_or_else(|| {
                    let two_sigma = 2.0 * g.curvature_bounds.sigma;
                    let mut a = vec![1.0];
                    if two_sigma > 0.0 && two_sigma != 1.0 {
                        a.push(two_sigma);
                    }
                    a
                });
                for alpha in alphas {
                    let h = h_data_for(&g, alpha, cfg.bounds.k_floor)?;
                    records.push(local_time_moment_check(&g, &x, alpha, &sim, h)?.record(id, name));
                }
            }
            CheckKind::QNorm => records.push(q_norm_check(&g, &x, &killed(&cfg.sim))?.record(id, name)),
            CheckKind::WMoment => records.push(w_moment_check(&g, &x, &v, &killed(&cfg.sim))?.record(id, name)),
        }
    }
    Ok(RunManifest::new("verify", cfg.echo(), cfg.sim.seed, records))
}

/// Pathwise checks; writes `manifest.json`.
pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let m = verify_manifest(cfg)?;
    let mut out = Outcome { passed: m.all_passed, failures: m.failures(), ..Default::default() };
    let mut summary = String::new();
    for c in &m.checks {
        let _ = writeln!(
            summary,
            "{:<4} {:<18} {:<12} mean {:.6e}  se {:.2e}  reference {:.6e}  tolerance {:.2e}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.geometry,
            c.mean,
            c.stderr,
            c.reference,
            c.tolerance,
            c.detail
        );
    }
    out.summary = summary;
    write_file(&cfg.output.dir, "manifest.json", &format!("{}\n", m.to_json()), &mut out.files)?;
    Ok(out)
}
