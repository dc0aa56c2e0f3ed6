//! Subcommand definitions and dispatch.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use nonsig::curves::{sample_curve, CurveId};
use nonsig::geometry::{concavity_profile, locate_inflection, trajectory};
use nonsig::membership::{report_correlators, report_raw, MembershipReport};
use nonsig::scan::{scan, Mode, ScanConfig, SetKind};
use nonsig::{mutual_information, s_max, Correlators};

use crate::io::{csv_bytes, curve_csv, f12, f17, read_curve_csv};
use crate::manifest::{write_with_manifest, RunManifest};
use crate::recipes::{run_recipe, trajectory_csv, Figure, RecipeOptions};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "nonsig", version, about = "Information-theoretic boundaries of the CHSH non-signaling polytope")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate an analytic boundary curve on a uniform grid.
    Curve {
        #[arg(long)]
        id: CurveId,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numerically optimize the mutual information on CHSH slices.
    Scan {
        #[arg(long)]
        set: SetKind,
        #[arg(long)]
        mode: Mode,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Restrict to behaviors passing the arcsin test.
        #[arg(long)]
        qtilde: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample random two-qubit behaviors.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Append the eight correlator columns.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Locate the concavity change of a scanned curve.
    Inflect {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Canonical optimizer trajectory of a symmetric scan.
    Trajectory {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Membership report for one behavior (JSON, read from stdin by default).
    Check {
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Run a figure recipe.
    Repro {
        figure: Figure,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Original grid sizes instead of the desk-scale defaults.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Diagnostics go to stderr.
pub fn dispatch(args: &[String], out: &mut dyn Write) -> i32 {
    let mut stdin = std::io::stdin();
    match run(args, &mut stdin, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(args: &[String], input: &mut dyn Read, out: &mut dyn Write) -> Result<(), CliError> {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            write_out(out, e.render().to_string().as_bytes())?;
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    configure_threads();
    let command_line = args.join(" ");
    let started = Instant::now();
    let emit = |out: &mut dyn Write, path: &Option<PathBuf>, bytes: &[u8], seed: u64| -> Result<(), CliError> {
        match path {
            Some(p) => Ok(write_with_manifest(p, bytes, &command_line, seed, started.elapsed().as_secs_f64())?),
            None => write_out(out, bytes),
        }
    };
    match cli.command {
        Command::Curve { id, grid, out: path } => {
            let rows = sample_curve(id, grid)?.into_iter().map(|(s, i)| vec![f12(s), f12(i)]);
            emit(out, &path, &csv_bytes(&["s", "i"], rows), 0)
        }
        Command::Scan { set, mode, lo, hi, n, restarts, seed, tol, qtilde, out: path } => {
            let mut cfg =
                ScanConfig::new(set, mode, lo, hi, n).with_restarts(restarts).with_seed(seed).with_qtilde(qtilde);
            cfg.tol = tol;
            let curve = scan(&cfg)?;
            emit(out, &path, &curve_csv(&curve), seed)
        }
        Command::Sample { n, seed, full, out: path } => {
            let samples = nonsig::sampler::sample(n, seed);
            let mut header = vec!["s", "i"];
            if full {
                header.extend(["a0", "a1", "b0", "b1", "c00", "c01", "c10", "c11"]);
            }
            let rows = samples.iter().map(|p| {
                let mut row = vec![f17(s_max(p)), f17(mutual_information(p))];
                if full {
                    row.extend(p.correlators().to_array().iter().map(|&v| f17(v)));
                }
                row
            });
            emit(out, &path, &csv_bytes(&header, rows), seed)
        }
        Command::Inflect { input: file, k, out: path } => {
            let curve = read_curve_csv(&file)?;
            let profile = concavity_profile(&curve, k)?;
            let ds = grid_step(&curve.points.iter().map(|p| p.s).collect::<Vec<_>>());
            let estimate = locate_inflection(&profile, ds, k)?;
            emit(out, &path, &pretty(&estimate), curve.config.seed)
        }
        Command::Trajectory { input: file, out: path } => {
            let curve = read_curve_csv(&file)?;
            let t = trajectory(&curve)?;
            emit(out, &path, &trajectory_csv(&t), curve.config.seed)
        }
        Command::Check { input: file } => {
            let text = match file {
                Some(p) => std::fs::read_to_string(&p)
                    .map_err(|source| crate::io::IoError::File { path: p.display().to_string(), source })?,
                None => {
                    let mut s = String::new();
                    input.read_to_string(&mut s).map_err(|e| CliError::Input(e.to_string()))?;
                    s
                }
            };
            let report = check(&text)?;
            write_out(out, &pretty(&report))?;
            if report.ns_valid {
                Ok(())
            } else {
                Err(CliError::Input(report.violations.join("; ")))
            }
        }
        Command::Repro { figure, seed, full, restarts, out_dir } => {
            let result = run_recipe(figure, &RecipeOptions { seed, full, restarts })?;
            write_recipe(&out_dir, &result.artifacts, &command_line, seed, started.elapsed().as_secs_f64())?;
            write_out(out, &pretty(&result.summary))
        }
    }
}

/// Accepts the correlator object or a flat array of 16 probabilities.
fn check(text: &str) -> Result<MembershipReport, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("not JSON: {e}")))?;
    if value.is_array() {
        let raw: Vec<f64> =
            serde_json::from_value(value).map_err(|e| CliError::Input(format!("expected 16 numbers: {e}")))?;
        return Ok(report_raw(&raw));
    }
    let c: Correlators =
        serde_json::from_value(value).map_err(|e| CliError::Input(format!("expected a behavior: {e}")))?;
    Ok(report_correlators(&c))
}

fn write_recipe(
    dir: &Path,
    artifacts: &[crate::recipes::Artifact],
    command_line: &str,
    seed: u64,
    wall: f64,
) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(command_line, seed, wall);
    for a in artifacts {
        let path = dir.join(&a.name);
        crate::io::write_file(&path, &a.bytes)?;
        manifest.record(&path, &a.bytes);
    }
    for a in artifacts {
        manifest.write_for(&dir.join(&a.name))?;
    }
    Ok(())
}

fn grid_step(s: &[f64]) -> f64 {
    if s.len() < 2 {
        0.0
    } else {
        (s[s.len() - 1] - s[0]) / (s.len() - 1) as f64
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn write_out(out: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    out.write_all(bytes)
        .and_then(|()| out.flush())
        .map_err(|source| crate::io::IoError::File { path: "<stdout>".into(), source }.into())
}

/// `NONSIG_THREADS` caps the global worker pool. Only the first call in a
/// process takes effect.
fn configure_threads() {
    if let Some(n) = std::env::var("NONSIG_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}
