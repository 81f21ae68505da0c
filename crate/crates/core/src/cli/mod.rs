//! Command-line front end: reproducible experiments that emit tables, reports and figures.
//!
//! Exit codes: 0 success, 1 a gate failed, 2 configuration or usage error.

pub mod commands;
pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_bounds, cmd_scaling, cmd_spectrum, cmd_verify, verify_manifest, Outcome};
pub use config::{CheckKind, ExperimentConfig, GeometrySpec};

use crate::bounds::AlphaVariant;
use crate::error::Result;
use crate::spectra::BoundaryCondition;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "eigenhess", version, about = "Hessian bounds for Laplacian eigenfunctions on model domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Horizon of the simulations.
    #[arg(long, global = true)]
    pub t: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_alpha)]
    pub alpha_variant: Option<AlphaVariant>,
    #[arg(long, global = true)]
    pub k_floor: Option<f64>,
    /// Omit the generation comment from SVG figures.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Catalog geometry name.
    #[arg(long, global = true)]
    pub geometry: Option<String>,
    #[arg(long, global = true, value_parser = parse_bc)]
    pub bc: Option<BoundaryCondition>,
    /// Number of eigenpairs.
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    /// Check to run; repeatable. Replaces the configured list.
    #[arg(long, global = true, value_enum)]
    pub check: Vec<CheckKind>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Constants and measured Hessian ratios for the first modes.
    Bounds,
    /// Scaling table and figure with the bound overlay.
    Spectrum,
    /// Pathwise Monte Carlo checks.
    Verify,
    /// Fitted sup-norm slopes with the growth-rate gates.
    Scaling,
}

fn parse_alpha(s: &str) -> std::result::Result<AlphaVariant, String> {
    match s {
        "printed" => Ok(AlphaVariant::Printed),
        "sqrt" => Ok(AlphaVariant::Sqrt),
        other => Err(format!("expected printed or sqrt, got `{other}`")),
    }
}

fn parse_bc(s: &str) -> std::result::Result<BoundaryCondition, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

impl Cli {
    /// The configuration file, if any, with the command-line overrides applied.
    pub fn effective_config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(name) = &self.geometry {
            c.geometry = GeometrySpec::named(name);
        }
        if let Some(bc) = self.bc {
            c.bc = bc;
        }
        if let Some(m) = self.modes {
            c.modes = Some(m);
        }
        if let Some(s) = self.seed {
            c.sim.seed = s;
        }
        if let Some(p) = self.paths {
            c.sim.paths = p;
        }
        if let Some(dt) = self.dt {
            c.sim.dt = dt;
        }
        if let Some(t) = self.t {
            c.sim.t = t;
        }
        if let Some(o) = &self.out {
            c.output.dir = o.clone();
        }
        if let Some(a) = self.alpha_variant {
            c.bounds.alpha_variant = a;
        }
        if let Some(k) = self.k_floor {
            c.bounds.k_floor = k;
        }
        if self.no_timestamp {
            c.output.timestamp = false;
        }
        if !self.check.is_empty() {
            c.verify.checks = self.check.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match cli.effective_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = match cli.command {
        Command::Bounds => cmd_bounds(&cfg),
        Command::Spectrum => cmd_spectrum(&cfg),
        Command::Verify => cmd_verify(&cfg),
        Command::Scaling => cmd_scaling(&cfg),
    };
    match result {
        Ok(out) => {
            print!("{}", out.summary);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if out.passed {
                EXIT_OK
            } else {
                eprintln!("failed: {}", out.failures.join(", "));
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
