//! CSV snapshots and JSON manifests.
//!
//! Floats are written with 17 significant digits, so every file reads back
//! to the exact in-memory values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::ConservationReport;
use crate::diffeo::Diffeomorphism;
use crate::dynamics::{
    BParams, EulerianTrajectory, LagrangianTrajectory, SolverConfig, Termination,
};
use crate::error::{Error, Result};
use crate::experiments::ExperimentReport;
use crate::spectral::{Field, Grid};

pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn two_column_csv(header: &str, grid: &Grid, values: &[f64]) -> String {
    let mut out = String::with_capacity(48 * values.len());
    out.push_str(header);
    out.push('\n');
    for (j, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt_float(grid.x(j)), fmt_float(*v));
    }
    out
}

/// `x,value` rows.
pub fn field_csv(field: &Field) -> String {
    two_column_csv("x,value", field.grid(), field.values())
}

/// `x,displacement` rows.
pub fn diffeo_csv(phi: &Diffeomorphism) -> String {
    two_column_csv("x,displacement", phi.grid(), phi.displacement().values())
}

pub fn write_field_csv(path: impl AsRef<Path>, field: &Field) -> Result<()> {
    Ok(fs::write(path, field_csv(field))?)
}

pub fn write_diffeo_csv(path: impl AsRef<Path>, phi: &Diffeomorphism) -> Result<()> {
    Ok(fs::write(path, diffeo_csv(phi))?)
}

fn parse_two_columns(text: &str, header: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == header => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header `{header}`, found {other:?}"
            )))
        }
    }
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let parse = |c: Option<&str>| -> Result<f64> {
            c.and_then(|c| c.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("line {}: `{line}`", i + 2)))
        };
        xs.push(parse(cols.next())?);
        vs.push(parse(cols.next())?);
        if cols.next().is_some() {
            return Err(Error::Parse(format!("line {}: too many columns", i + 2)));
        }
    }
    Ok((xs, vs))
}

/// Reads an `x,value` file, recovering the grid from the first abscissa and
/// the row count.
pub fn parse_field_csv(text: &str) -> Result<Field> {
    let (xs, vs) = parse_two_columns(text, "x,value")?;
    let first = *xs
        .first()
        .ok_or_else(|| Error::Parse("no data rows".into()))?;
    let grid = Grid::new(-first, xs.len())?;
    for (j, x) in xs.iter().enumerate() {
        if (x - grid.x(j)).abs() > 1e-9 * grid.half_length() {
            return Err(Error::Parse(format!(
                "row {j}: abscissa {x} is off the uniform grid"
            )));
        }
    }
    Field::new(grid, vs)
}

pub fn read_field_csv(path: impl AsRef<Path>) -> Result<Field> {
    parse_field_csv(&fs::read_to_string(path)?)
}

pub fn parse_diffeo_csv(text: &str) -> Result<Diffeomorphism> {
    let (xs, vs) = parse_two_columns(text, "x,displacement")?;
    let first = *xs
        .first()
        .ok_or_else(|| Error::Parse("no data rows".into()))?;
    let grid = Grid::new(-first, xs.len())?;
    Diffeomorphism::new(Field::new(grid, vs)?)
}

pub fn conservation_csv(report: &ConservationReport) -> String {
    let mut out = String::from("t,res_hs2,res_sup,relative\n");
    for i in 0..report.times.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_float(report.times[i]),
            fmt_float(report.residual_s_minus_2[i]),
            fmt_float(report.residual_sup[i]),
            report.relative
        );
    }
    out
}

pub fn experiment_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "n,r_n,input_dist,output_dist,momentum_output_dist,witness_gap,disjoint_ok,resolved_ok\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            fmt_float(r.r_n),
            fmt_float(r.input_dist),
            fmt_float(r.output_dist),
            fmt_float(r.momentum_output_dist),
            fmt_float(r.witness_gap),
            r.disjoint_ok,
            r.resolved_ok
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSidecar {
    pub m_est: f64,
    pub x0_est: f64,
    #[serde(rename = "L_est")]
    pub l_est: f64,
    pub v_norm: f64,
    pub radius: f64,
    pub config_hash: String,
}

impl From<&ExperimentReport> for ExperimentSidecar {
    fn from(r: &ExperimentReport) -> Self {
        Self {
            m_est: r.geometry.m_est,
            x0_est: r.geometry.x0_est,
            l_est: r.geometry.l_est,
            v_norm: r.geometry.v_norm,
            radius: r.radius,
            config_hash: r.config_hash.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Eulerian,
    Lagrangian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub files: Vec<String>,
}

/// JSON description of a stored trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub formulation: Formulation,
    pub grid: Grid,
    pub params: BParams,
    pub config: SolverConfig,
    pub termination: Termination,
    pub config_hash: String,
    pub snapshots: Vec<SnapshotEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn write_manifest(dir: &Path, manifest: &TrajectoryManifest) -> Result<()> {
    // Written last and renamed into place, so its presence marks a finished run.
    let tmp = dir.join(".manifest.json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(manifest)? + "\n")?;
    fs::rename(tmp, dir.join(MANIFEST_FILE))?;
    Ok(())
}

pub fn write_eulerian(
    dir: impl AsRef<Path>,
    traj: &EulerianTrajectory,
    config_hash: &str,
) -> Result<TrajectoryManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut snapshots = Vec::with_capacity(traj.len());
    for (i, (t, u)) in traj.times.iter().zip(&traj.states).enumerate() {
        let name = format!("u_{i:05}.csv");
        write_field_csv(dir.join(&name), u)?;
        snapshots.push(SnapshotEntry {
            t: *t,
            files: vec![name],
        });
    }
    let manifest = TrajectoryManifest {
        formulation: Formulation::Eulerian,
        grid: *traj.states[0].grid(),
        params: traj.params,
        config: traj.config,
        termination: traj.termination,
        config_hash: config_hash.to_string(),
        snapshots,
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn write_lagrangian(
    dir: impl AsRef<Path>,
    traj: &LagrangianTrajectory,
    config_hash: &str,
) -> Result<TrajectoryManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut snapshots = Vec::with_capacity(traj.len());
    for (i, (t, state)) in traj.times.iter().zip(&traj.states).enumerate() {
        let phi_name = format!("phi_{i:05}.csv");
        let phit_name = format!("phit_{i:05}.csv");
        write_diffeo_csv(dir.join(&phi_name), &state.phi)?;
        write_field_csv(dir.join(&phit_name), &state.phit)?;
        snapshots.push(SnapshotEntry {
            t: *t,
            files: vec![phi_name, phit_name],
        });
    }
    let manifest = TrajectoryManifest {
        formulation: Formulation::Lagrangian,
        grid: *traj.states[0].phi.grid(),
        params: traj.params,
        config: traj.config,
        termination: traj.termination,
        config_hash: config_hash.to_string(),
        snapshots,
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<TrajectoryManifest> {
    let text = fs::read_to_string(dir.as_ref().join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
