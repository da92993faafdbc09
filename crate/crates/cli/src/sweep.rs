//! Batch runs over the cartesian product of `b` and `N`.
//!
//! Each cell is an isolated run of another subcommand in its own directory,
//! named like `b2_n1024`. Cells whose `manifest.json` already exists are
//! skipped, so an interrupted sweep resumes where it stopped.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bfamily::io::MANIFEST_FILE;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands;
use crate::config::Loaded;
use crate::{CliError, Command, Exit, Options};

pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub b: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub dir: String,
    pub exit_code: u8,
    /// `ran`, `resumed` or `failed`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepIndex {
    pub command: String,
    pub cells: Vec<CellRecord>,
}

pub fn cell_name(b: f64, n_points: usize) -> String {
    format!("b{b}_n{n_points}")
}

pub fn run(loaded: &Loaded, out: &Path, opts: Options) -> Result<Exit, CliError> {
    let sweep = loaded
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::config("the sweep command needs a [sweep] section"))?;
    let command = Command::from_name(&sweep.command)
        .filter(|c| *c != Command::Sweep)
        .ok_or_else(|| {
            CliError::config(format!(
                "sweep: unknown or invalid command `{}`",
                sweep.command
            ))
        })?;
    let bs = if sweep.b.is_empty() {
        vec![loaded.config.params.b]
    } else {
        sweep.b.clone()
    };
    let ns = if sweep.n_points.is_empty() {
        vec![loaded.config.grid.n_points]
    } else {
        sweep.n_points.clone()
    };
    let cells: Vec<(f64, usize)> = bs
        .iter()
        .flat_map(|&b| ns.iter().map(move |&n| (b, n)))
        .collect();
    fs::create_dir_all(out)?;

    // Exit codes of cells finished by an earlier invocation.
    let previous: BTreeMap<String, u8> = fs::read_to_string(out.join(INDEX_FILE))
        .ok()
        .and_then(|text| serde_json::from_str::<SweepIndex>(&text).ok())
        .map(|idx| {
            idx.cells
                .into_iter()
                .map(|c| (c.dir, c.exit_code))
                .collect()
        })
        .unwrap_or_default();

    let records: Vec<CellRecord> = cells
        .par_iter()
        .map(|&(b, n_points)| {
            let dir = cell_name(b, n_points);
            let cell_out = out.join(&dir);
            let record = |exit: Exit, status: &str, error: Option<String>| CellRecord {
                b,
                n_points,
                dir: dir.clone(),
                exit_code: exit.code(),
                status: status.into(),
                error,
            };
            if cell_out.join(MANIFEST_FILE).exists() {
                let exit = previous.get(&dir).map_or(Exit::Ok, |&c| Exit::from_code(c));
                return record(exit, "resumed", None);
            }
            let mut cell = loaded.clone();
            cell.config.params.b = b;
            cell.config.grid.n_points = n_points;
            cell.config.sweep = None;
            match commands::run(command, &cell, &cell_out, opts) {
                Ok(exit) => record(exit, "ran", None),
                Err(err) => {
                    eprintln!("{dir}: error: {err}");
                    record(err.exit, "failed", Some(err.message))
                }
            }
        })
        .collect();

    let index = SweepIndex {
        command: command.name().into(),
        cells: records,
    };
    let text = serde_json::to_string_pretty(&index).expect("index serializes") + "\n";
    fs::write(out.join(INDEX_FILE), text)?;
    let worst = index.cells.iter().map(|c| c.exit_code).max().unwrap_or(0);
    println!(
        "sweep: {} cells, worst exit code {worst}",
        index.cells.len()
    );
    Ok(Exit::from_code(worst))
}
