use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use wan_core::experiments::problem;
use wan_core::trainer::{train, StopReason, TrainConfig, TrainHistory};

use crate::{out_root, write, EXIT_ERROR, EXIT_MAX_ITER, EXIT_OK};

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written next to the outputs of one run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config: TrainConfig,
    pub seed: u64,
    /// SHA-256 of the canonical config JSON.
    pub input_hash: String,
    pub outputs: Vec<OutputFile>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    stop: &'static str,
    steps: usize,
    final_rel_error: Option<f64>,
    min_rel_error: Option<f64>,
    seconds: f64,
    diagnostic: Option<&'a str>,
    seed: u64,
    config: &'a TrainConfig,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Trains one configuration and writes its files into `dir`. Returns the
/// history.
pub fn run_config(cfg: &TrainConfig, dir: &Path, timing: bool) -> Result<TrainHistory, String> {
    let started = unix_now();
    let pde = problem(cfg.problem, cfg.d).map_err(|e| e.to_string())?;
    let out = train(cfg, &pde).map_err(|e| e.to_string())?;
    let h = out.history;
    let csv = h.to_csv(timing);
    let summary = Summary {
        stop: h.stop.name(),
        steps: h.steps,
        final_rel_error: h.final_error(),
        min_rel_error: h.records.iter().map(|r| r.rel_error).reduce(f64::min),
        seconds: h.records.last().map_or(0.0, |r| r.seconds),
        diagnostic: h.diagnostic.as_deref(),
        seed: cfg.seed,
        config: cfg,
    };
    let summary = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())? + "\n";
    let files = [("history.csv", csv.into_bytes()), ("summary.json", summary.into_bytes())];
    let mut outputs = Vec::new();
    for (name, bytes) in &files {
        let path = dir.join(name);
        write(&path, bytes)?;
        outputs.push(OutputFile { path: path.display().to_string(), sha256: sha256_hex(bytes) });
    }
    let manifest = RunManifest {
        config: cfg.clone(),
        seed: cfg.seed,
        input_hash: sha256_hex(cfg.to_json().as_bytes()),
        outputs,
        started_unix: started,
        finished_unix: unix_now(),
    };
    write(&dir.join("manifest.json"), (serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())? + "\n").as_bytes())?;
    Ok(h)
}

pub(crate) fn cmd_run(config: &Path, seed: Option<u64>, seeds: &[u64], out: Option<PathBuf>, timing: bool) -> i32 {
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", config.display());
            return EXIT_ERROR;
        }
    };
    let base = match TrainConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", config.display());
            return EXIT_ERROR;
        }
    };
    let seeds: Vec<u64> = if seeds.is_empty() { vec![seed.unwrap_or(base.seed)] } else { seeds.to_vec() };
    let mut code = EXIT_OK;
    for &s in &seeds {
        let cfg = TrainConfig { seed: s, ..base.clone() };
        let dir = match (&out, seeds.len()) {
            (Some(o), 1) => o.clone(),
            (Some(o), _) => o.join(format!("seed-{s}")),
            (None, _) => out_root().join(format!("{}-{}-{}-seed-{s}", cfg.problem.name(), cfg.model.name(), cfg.loss.name())),
        };
        let this = match run_config(&cfg, &dir, timing) {
            Ok(h) => {
                println!(
                    "seed {s}: {} after {} steps, relative error {:.4e} -> {}",
                    h.stop.name(),
                    h.steps,
                    h.final_error().unwrap_or(f64::NAN),
                    dir.display()
                );
                match h.stop {
                    StopReason::ToleranceMet => EXIT_OK,
                    StopReason::MaxIterations => EXIT_MAX_ITER,
                    StopReason::Diverged => {
                        eprintln!("seed {s}: {}", h.diagnostic.as_deref().unwrap_or("diverged"));
                        EXIT_ERROR
                    }
                }
            }
            Err(e) => {
                eprintln!("error: seed {s}: {e}");
                EXIT_ERROR
            }
        };
        code = match (code, this) {
            (EXIT_ERROR, _) | (_, EXIT_ERROR) => EXIT_ERROR,
            (EXIT_MAX_ITER, _) | (_, EXIT_MAX_ITER) => EXIT_MAX_ITER,
            _ => EXIT_OK,
        };
    }
    code
}
