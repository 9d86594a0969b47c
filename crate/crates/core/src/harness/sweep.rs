//! Runs a directory of configs and tabulates the results.
//!
//! Runs are independent and execute in parallel, each writing into
//! `<out>/<index>-<stem>/`. A failing run becomes a row with status `error`;
//! the rest of the sweep continues.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::run::run;
use crate::error::Result;

pub const SWEEP_HEADER: &str =
    "id,name,config_hash,status,final_loss,best_loss,best_loss_step,best_teon1_dual,best_muon_dual,error";

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub id: String,
    pub name: String,
    pub config_hash: String,
    pub result: std::result::Result<super::run::RunSummary, String>,
}

impl SweepRow {
    pub fn csv_row(&self) -> String {
        let prefix = format!("{},{},{}", self.id, self.name, self.config_hash);
        match &self.result {
            Ok(s) => format!(
                "{prefix},ok,{:.16e},{:.16e},{},{:.16e},{:.16e},",
                s.final_loss, s.best_loss, s.best_loss_step, s.best_teon1_dual, s.best_muon_dual
            ),
            Err(e) => format!("{prefix},error,,,,,,{}", sanitize(e)),
        }
    }
}

fn sanitize(message: &str) -> String {
    message
        .chars()
        .map(|c| match c {
            ',' => ';',
            '\n' | '\r' => ' ',
            c => c,
        })
        .collect()
}

/// Hex SHA-256 prefix of the config text.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `*.toml` files of `dir` in name order.
pub fn config_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every config in `dir` and writes `<out>/summary.csv`.
pub fn sweep(dir: &Path, out: &Path) -> Result<Vec<SweepRow>> {
    let files = config_files(dir)?;
    let mut inputs = Vec::with_capacity(files.len());
    for path in files {
        let text = fs::read_to_string(&path)?;
        inputs.push((path, text));
    }
    sweep_texts(&inputs, out)
}

/// Runs configs given as `(origin, text)` pairs.
pub fn sweep_texts(inputs: &[(PathBuf, String)], out: &Path) -> Result<Vec<SweepRow>> {
    fs::create_dir_all(out)?;
    let rows: Vec<SweepRow> = inputs
        .par_iter()
        .enumerate()
        .map(|(idx, (path, text))| {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "config".into());
            let id = format!("{idx:03}-{name}");
            let result = RunConfig::parse(text, path)
                .and_then(|config| run(&config, &out.join(&id)))
                .map(|outcome| outcome.summary)
                .map_err(|e| e.to_string());
            if let Err(e) = &result {
                log::warn!("run {id} failed: {e}");
            }
            SweepRow {
                id,
                name,
                config_hash: config_hash(text),
                result,
            }
        })
        .collect();
    let mut csv = format!("{SWEEP_HEADER}\n");
    for row in &rows {
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    fs::write(out.join("summary.csv"), csv)?;
    Ok(rows)
}
