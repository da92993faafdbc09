//! The TOML run configuration shared by every subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use bfamily::experiments::{build_bump, NonUniformityConfig};
use bfamily::io::{read_field_csv, sha256_hex};
use bfamily::{BParams, Field, Grid, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: ParamSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    pub initial: InitialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "L")]
    pub half_length: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub b: f64,
    #[serde(default = "default_s")]
    pub s: f64,
}

fn default_s() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Defaults to `min(1e-3, 0.5 h / max|u0|)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(rename = "T", default = "default_horizon")]
    pub t_final: f64,
    /// Defaults to about ten snapshots per run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default = "default_norm_cap")]
    pub norm_cap: f64,
    #[serde(default = "default_min_phix")]
    pub min_phix: f64,
    #[serde(default = "default_conjugate_tol")]
    pub conjugate_tol: f64,
    #[serde(default = "default_conjugate_iterations")]
    pub conjugate_max_iterations: usize,
}

fn default_horizon() -> f64 {
    1.0
}
fn default_norm_cap() -> f64 {
    1e6
}
fn default_min_phix() -> f64 {
    1e-6
}
fn default_conjugate_tol() -> f64 {
    1e-10
}
fn default_conjugate_iterations() -> usize {
    200
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            dt: None,
            t_final: default_horizon(),
            stride: None,
            norm_cap: default_norm_cap(),
            min_phix: default_min_phix(),
            conjugate_tol: default_conjugate_tol(),
            conjugate_max_iterations: default_conjugate_iterations(),
        }
    }
}

/// A named family of initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialSpec {
    /// `amp * exp(-((x - center) / width)^2)`.
    Gaussian {
        amp: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// Mollifier bump scaled to `||u||_{H^s_norm} = target`.
    Bump {
        center: f64,
        radius: f64,
        s_norm: f64,
        target: f64,
    },
    /// `amp * cos(pi k x / L)`.
    Mode { k: i64, amp: f64 },
    /// An `x,value` CSV on the configured grid, relative to the config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub v: InitialSpec,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_eps_dexp")]
    pub eps_dexp: f64,
}

fn default_n_values() -> Vec<usize> {
    vec![1, 2, 4, 8, 16]
}
fn default_eps_dexp() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Subcommand run in every cell.
    pub command: String,
    /// Values of `b`; defaults to the `[params]` value.
    #[serde(default)]
    pub b: Vec<f64>,
    /// Values of `N`; defaults to the `[grid]` value.
    #[serde(default, rename = "N")]
    pub n_points: Vec<usize>,
}

/// A parsed configuration together with the directory it was read from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let config = parse(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base_dir })
}

/// Parses and validates; errors carry the line number where the parser
/// found the problem.
pub fn parse(text: &str) -> Result<RunConfig, String> {
    let config: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    fn validate(&self) -> Result<(), String> {
        self.grid().map_err(|e| e.to_string())?;
        self.params().map_err(|e| e.to_string())?;
        if let Some(sweep) = &self.sweep {
            if sweep.b.iter().any(|b| !b.is_finite()) {
                return Err("sweep: b values must be finite".into());
            }
            for &n in &sweep.n_points {
                Grid::new(self.grid.half_length, n).map_err(|e| format!("sweep: {e}"))?;
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> bfamily::Result<Grid> {
        Grid::new(self.grid.half_length, self.grid.n_points)
    }

    pub fn params(&self) -> bfamily::Result<BParams> {
        BParams::new(self.params.b, self.params.s)
    }

    /// SHA-256 over the normalised configuration. The output location and
    /// the sweep table are excluded, so a sweep cell hashes like the direct
    /// run it stands for.
    pub fn hash(
        &self,
        command: &str,
        formulation: Option<&str>,
        base_dir: &Path,
    ) -> Result<String, CliError> {
        let mut normal = self.clone();
        normal.output = None;
        normal.sweep = None;
        #[derive(Serialize)]
        struct Canonical<'a> {
            command: &'a str,
            formulation: Option<&'a str>,
            config: &'a RunConfig,
            /// Contents of any data files, which the path alone does not pin.
            files: Vec<String>,
        }
        let mut files = Vec::new();
        for spec in std::iter::once(&normal.initial).chain(normal.probe.as_ref().map(|p| &p.v)) {
            if let InitialSpec::File { path } = spec {
                let bytes = fs::read(base_dir.join(path)).map_err(|e| {
                    CliError::config(format!("cannot read {}: {e}", path.display()))
                })?;
                files.push(sha256_hex(&bytes));
            }
        }
        let json = serde_json::to_vec(&Canonical {
            command,
            formulation,
            config: &normal,
            files,
        })
        .expect("config serializes");
        Ok(sha256_hex(&json))
    }
}

pub fn build_initial(spec: &InitialSpec, grid: Grid, base_dir: &Path) -> Result<Field, CliError> {
    match spec {
        InitialSpec::Gaussian { amp, width, center } => {
            if !(*width > 0.0) {
                return Err(CliError::config(format!(
                    "gaussian width must be positive, got {width}"
                )));
            }
            Ok(Field::from_fn(grid, |x| {
                amp * (-((x - center) / width).powi(2)).exp()
            }))
        }
        InitialSpec::Bump {
            center,
            radius,
            s_norm,
            target,
        } => Ok(build_bump(*center, *radius, *s_norm, *target, grid)?),
        InitialSpec::Mode { k, amp } => {
            let xi = std::f64::consts::PI * *k as f64 / grid.half_length();
            Ok(Field::from_fn(grid, |x| amp * (xi * x).cos()))
        }
        InitialSpec::File { path } => {
            let field = read_field_csv(base_dir.join(path))?;
            if field.grid() != &grid {
                return Err(CliError::config(format!(
                    "{}: grid does not match [grid] (L = {}, N = {})",
                    path.display(),
                    grid.half_length(),
                    grid.len()
                )));
            }
            Ok(field)
        }
    }
}

pub fn solver_config(spec: &SolverSpec, u0: &Field) -> Result<SolverConfig, CliError> {
    let dt = spec.dt.unwrap_or_else(|| SolverConfig::default_dt(u0));
    let mut cfg = SolverConfig::new(dt, spec.t_final)?;
    cfg.blowup_norm_cap = spec.norm_cap;
    cfg.min_phix = spec.min_phix;
    cfg.conjugate.tol = spec.conjugate_tol;
    cfg.conjugate.max_iterations = spec.conjugate_max_iterations;
    let stride = spec
        .stride
        .unwrap_or_else(|| cfg.step_count().div_ceil(10).max(1));
    cfg = cfg.with_stride(stride);
    cfg.validate()?;
    Ok(cfg)
}

pub fn nonuniformity_config(loaded: &Loaded) -> Result<NonUniformityConfig, CliError> {
    let cfg = &loaded.config;
    let probe = cfg
        .probe
        .as_ref()
        .ok_or_else(|| CliError::config("the nonuniform command needs a [probe] section"))?;
    let grid = cfg.grid()?;
    let u0 = build_initial(&cfg.initial, grid, &loaded.base_dir)?;
    let v = build_initial(&probe.v, grid, &loaded.base_dir)?;
    let largest = if u0.max_abs() >= v.max_abs() { &u0 } else { &v };
    let solver = solver_config(&cfg.solver, largest)?;
    Ok(NonUniformityConfig {
        u0,
        v,
        params: cfg.params()?,
        radius: probe.radius,
        n_values: probe.n_values.clone(),
        solver,
        eps_dexp: probe.eps_dexp,
    })
}
