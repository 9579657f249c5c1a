//! The `wan` command: training runs, presets, the theory checks and plots.

mod plot;
mod run;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use wan_core::experiments::build_preset_named;
use wan_core::theory_lab::{verify_suite, Fault};

pub use plot::{render_svg, read_history, Series};
pub use run::{run_config, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Overrides the default output root `runs`.
pub const OUT_ROOT_VAR: &str = "WAN_OUT_ROOT";

#[derive(Parser, Debug)]
#[command(name = "wan", version, about = "Weak adversarial network PDE solvers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Train from a JSON config; writes history.csv, summary.json and manifest.json.
    Run {
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        /// Comma-separated seeds, one run each.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall-clock seconds in history.csv (otherwise 0, keeping reruns byte-identical).
        #[arg(long)]
        timing: bool,
    },
    /// Write the config of a benchmark (ex1, ex2, ex3).
    Preset {
        id: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the theory checks and write a CSV table.
    Verify {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// Plot relative error against step from one or more history files.
    Plot {
        #[arg(required = true)]
        histories: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FaultArg {
    GammaSign,
}

pub fn out_root() -> PathBuf {
    std::env::var_os(OUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), String> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    std::fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match cli.cmd {
        Cmd::Run { config, seed, seeds, out, timing } => run::cmd_run(&config, seed, &seeds, out, timing),
        Cmd::Preset { id, out } => cmd_preset(&id, out),
        Cmd::Verify { out, inject_fault } => cmd_verify(out, inject_fault.map(|_| Fault::FlipGammaSign).unwrap_or_default()),
        Cmd::Plot { histories, out } => plot::cmd_plot(&histories, &out),
    }
}

fn cmd_preset(id: &str, out: Option<PathBuf>) -> i32 {
    let preset = match build_preset_named(id) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let path = out.unwrap_or_else(|| out_root().join(format!("{id}.json")));
    match write(&path, (preset.config.to_json() + "\n").as_bytes()) {
        Ok(()) => {
            println!("{}", path.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn cmd_verify(out: Option<PathBuf>, fault: Fault) -> i32 {
    let checks = verify_suite(fault);
    let mut csv = String::from("check,expected,observed,pass\n");
    for c in &checks {
        csv.push_str(&format!("{},{:e},{:e},{}\n", c.name, c.expected, c.observed, c.pass));
        println!("{:<40} {:>14.6e} {:>14.6e}  {}", c.name, c.expected, c.observed, if c.pass { "pass" } else { "FAIL" });
    }
    let path = out.unwrap_or_else(|| out_root().join("verify.csv"));
    if let Err(e) = write(&path, csv.as_bytes()) {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    if checks.iter().all(|c| c.pass) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
