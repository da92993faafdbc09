//! The single-run subcommands. Every command writes `manifest.json` last, so
//! its presence marks a finished output directory.

use std::fs;
use std::path::Path;

use bfamily::diagnostics::conservation_residual;
use bfamily::dynamics::{exp_map, solve_eulerian, solve_geodesic};
use bfamily::experiments::{nonuniformity_experiment, scaling_check};
use bfamily::io::{
    conservation_csv, experiment_csv, write_diffeo_csv, write_eulerian, write_lagrangian,
    ExperimentSidecar, MANIFEST_FILE,
};
use bfamily::Termination;
use serde::Serialize;

use crate::config::{build_initial, nonuniformity_config, solver_config, Loaded};
use crate::{CliError, Command, Exit, FormulationArg, Options};

pub const CONSERVE_TOL: f64 = 1e-4;
pub const SCALECHECK_TOL: f64 = 1e-6;
pub const PERSISTENCE_FRACTION: f64 = 0.1;

/// Manifest for commands that do not store a trajectory.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    files: Vec<&'a str>,
    status: &'a str,
}

fn write_run_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let tmp = dir.join(".manifest.json.tmp");
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes") + "\n";
    fs::write(&tmp, text)?;
    fs::rename(tmp, dir.join(MANIFEST_FILE))?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("result serializes") + "\n";
    fs::write(path, text)?;
    Ok(())
}

fn status(exit: Exit) -> &'static str {
    match exit {
        Exit::Ok => "ok",
        Exit::Config => "config_error",
        Exit::Numerical => "blowup",
        Exit::Acceptance => "acceptance_failed",
    }
}

fn termination_exit(termination: Termination) -> Exit {
    if termination == Termination::Completed {
        Exit::Ok
    } else {
        Exit::Numerical
    }
}

/// Runs one command into `out`, returning the exit status.
pub fn run(command: Command, loaded: &Loaded, out: &Path, opts: Options) -> Result<Exit, CliError> {
    let formulation = (command == Command::Solve).then(|| opts.formulation.name());
    let hash = loaded
        .config
        .hash(command.name(), formulation, &loaded.base_dir)?;
    let cfg = &loaded.config;
    let grid = cfg.grid()?;
    let params = cfg.params()?;
    fs::create_dir_all(out)?;

    match command {
        Command::Solve => {
            let u0 = build_initial(&cfg.initial, grid, &loaded.base_dir)?;
            let solver = solver_config(&cfg.solver, &u0)?;
            let termination = match opts.formulation {
                FormulationArg::Eulerian => {
                    let traj = solve_eulerian(&u0, &params, &solver)?;
                    write_eulerian(out, &traj, &hash)?.termination
                }
                FormulationArg::Lagrangian => {
                    let traj = solve_geodesic(&u0, &params, &solver)?;
                    write_lagrangian(out, &traj, &hash)?.termination
                }
            };
            println!("solve: termination {termination:?}");
            Ok(termination_exit(termination))
        }
        Command::Conserve => {
            let u0 = build_initial(&cfg.initial, grid, &loaded.base_dir)?;
            let solver = solver_config(&cfg.solver, &u0)?;
            let traj = solve_geodesic(&u0, &params, &solver)?;
            let report = conservation_residual(&traj, &params, true)?;
            fs::write(out.join("conservation.csv"), conservation_csv(&report))?;
            write_lagrangian(out, &traj, &hash)?;
            let tol = opts.tol.unwrap_or(CONSERVE_TOL);
            let max = report.max_residual();
            println!("conserve: max relative residual {max:e} (tol {tol:e})");
            if !traj.completed() {
                Ok(Exit::Numerical)
            } else if max.is_nan() || max > tol {
                Ok(Exit::Acceptance)
            } else {
                Ok(Exit::Ok)
            }
        }
        Command::Nonuniform => {
            let experiment = nonuniformity_config(loaded)?;
            let report = nonuniformity_experiment(&experiment)?;
            fs::write(out.join("experiment.csv"), experiment_csv(&report))?;
            write_json(
                &out.join("experiment.json"),
                &ExperimentSidecar::from(&report),
            )?;
            let fraction = opts.tol.unwrap_or(PERSISTENCE_FRACTION);
            let exit = if report.separation_persists(fraction) {
                Exit::Ok
            } else {
                Exit::Acceptance
            };
            for r in &report.rows {
                println!(
                    "n = {:>3}  input {:.4e}  output {:.4e}  gap {:.4e}  resolved {}",
                    r.n, r.input_dist, r.output_dist, r.witness_gap, r.resolved_ok
                );
            }
            write_run_manifest(
                out,
                &RunManifest {
                    command: command.name(),
                    config_hash: &hash,
                    files: vec!["experiment.csv", "experiment.json"],
                    status: status(exit),
                },
            )?;
            Ok(exit)
        }
        Command::Exp => {
            let v = build_initial(&cfg.initial, grid, &loaded.base_dir)?;
            let solver = solver_config(&cfg.solver, &v)?;
            let phi = exp_map(&v, &params, &solver)?;
            write_diffeo_csv(out.join("phi.csv"), &phi)?;
            println!("exp: max |phi - id| = {:e}", phi.displacement().max_abs());
            write_run_manifest(
                out,
                &RunManifest {
                    command: command.name(),
                    config_hash: &hash,
                    files: vec!["phi.csv"],
                    status: status(Exit::Ok),
                },
            )?;
            Ok(Exit::Ok)
        }
        Command::Scalecheck => {
            let u0 = build_initial(&cfg.initial, grid, &loaded.base_dir)?;
            let lambda = cfg.scaling.map_or(2.0, |s| s.lambda);
            let solver = solver_config(&cfg.solver, &u0)?;
            let t_final = solver.t_final;
            let residual = scaling_check(&u0, lambda, t_final, &params, &solver)?;
            let tol = opts.tol.unwrap_or(SCALECHECK_TOL);
            let exit = if residual <= tol {
                Exit::Ok
            } else {
                Exit::Acceptance
            };
            #[derive(Serialize)]
            struct ScaleResult {
                lambda: f64,
                #[serde(rename = "T")]
                t_final: f64,
                residual: f64,
                tol: f64,
                pass: bool,
            }
            write_json(
                &out.join("scalecheck.json"),
                &ScaleResult {
                    lambda,
                    t_final,
                    residual,
                    tol,
                    pass: exit == Exit::Ok,
                },
            )?;
            println!("scalecheck: residual {residual:e} (tol {tol:e})");
            write_run_manifest(
                out,
                &RunManifest {
                    command: command.name(),
                    config_hash: &hash,
                    files: vec!["scalecheck.json"],
                    status: status(exit),
                },
            )?;
            Ok(exit)
        }
        Command::Sweep => Err(CliError::config("sweep cells cannot run another sweep")),
    }
}
