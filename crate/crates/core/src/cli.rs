//! Command-line front end. [`main_with`] does all the work so the binary
//! stays a one-liner and tests can capture output.
//!
//! Exit codes: 0 success, 1 domain failure, 2 usage or I/O failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::asm::{parse_program_unchecked, serialize, validate};
use crate::experiment::{
    best_variants, compare, read_program, read_sample, run_experiment, ExperimentConfig,
    ExperimentError,
};
use crate::scanner::{detect_count, ScannerEnsemble};
use crate::stats::mann_whitney_u;
use crate::transforms::{apply, LabelAllocator, TransformKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "varigen", version, about = "Evolve diverse, behavior-preserving variants of toy assembly programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a program and print a JSON validity report.
    Validate { path: PathBuf },
    /// Apply one transform and print the result.
    Mutate {
        path: PathBuf,
        /// FI, FJ, UB, CZJ or CNZJ.
        #[arg(short, long)]
        transform: TransformKind,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Apply the transform this many times in a row.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value = "__m")]
        label_prefix: String,
    },
    /// Run one evolution and write its run directory.
    Evolve {
        config: PathBuf,
        #[arg(long)]
        rng_seed: Option<u64>,
        /// Run directory; defaults to the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run both fitness modes and test the similarity shifts.
    Compare {
        config: PathBuf,
        #[arg(long)]
        rng_seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count scanner detections of a program, or of every best-of-generation
    /// variant in a run directory.
    Scan {
        ensemble: PathBuf,
        target: PathBuf,
    },
    /// Mann-Whitney U test of two single-column CSV samples.
    Stats { sample1: PathBuf, sample2: PathBuf },
}

/// Runs the CLI on `args` (program name first).
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_input_error() {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, ExperimentError> {
    match cmd {
        Command::Validate { path } => cmd_validate(&path, out),
        Command::Mutate {
            path,
            transform,
            rng_seed,
            count,
            label_prefix,
        } => cmd_mutate(&path, transform, rng_seed, count, &label_prefix, out),
        Command::Evolve {
            config,
            rng_seed,
            out: dir,
        } => {
            let cfg = load_config(&config, rng_seed)?;
            let seed = read_program(&cfg.seed_program)?;
            let dir = dir.unwrap_or_else(|| cfg.output_dir.clone());
            let summary = run_experiment(&cfg, &seed, &dir)?;
            let last = summary.history.last().unwrap_or(&summary.initial);
            emit(
                out,
                &format!(
                    "{}: {} generations, {} variants, final mean source similarity {:.4}, archive {}",
                    summary.dir.display(),
                    summary.history.len(),
                    summary.variants_produced,
                    last.mean_source_similarity,
                    summary.archive_size
                ),
            )?;
            Ok(EXIT_OK)
        }
        Command::Compare {
            config,
            rng_seed,
            out: dir,
        } => {
            let cfg = load_config(&config, rng_seed)?;
            let seed = read_program(&cfg.seed_program)?;
            let dir = dir.unwrap_or_else(|| cfg.output_dir.clone());
            let cmp = compare(&cfg, &seed, &dir)?;
            let json = serde_json::to_string_pretty(&cmp.verdict).expect("verdict serializes");
            emit(out, &json)?;
            Ok(EXIT_OK)
        }
        Command::Scan { ensemble, target } => cmd_scan(&ensemble, &target, out),
        Command::Stats { sample1, sample2 } => {
            let a = read_sample(&sample1)?;
            let b = read_sample(&sample2)?;
            let r = mann_whitney_u(&a, &b)?;
            emit(out, &serde_json::to_string_pretty(&r).expect("result serializes"))?;
            Ok(EXIT_OK)
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), ExperimentError> {
    writeln!(out, "{text}").map_err(|source| ExperimentError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn load_config(path: &Path, rng_seed: Option<u64>) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = rng_seed {
        cfg.ea.rng_seed = s;
    }
    cfg.ea.check()?;
    Ok(cfg)
}

fn read_text(path: &Path) -> Result<String, ExperimentError> {
    fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_validate(path: &Path, out: &mut dyn Write) -> Result<i32, ExperimentError> {
    let text = read_text(path)?;
    let program = parse_program_unchecked(&text).map_err(|source| ExperimentError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let report = validate(&program);
    emit(out, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    Ok(if report.is_valid() { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_mutate(
    path: &Path,
    kind: TransformKind,
    rng_seed: u64,
    count: usize,
    label_prefix: &str,
    out: &mut dyn Write,
) -> Result<i32, ExperimentError> {
    let mut program = read_program(path)?;
    let mut labels = match LabelAllocator::for_program(label_prefix, &program) {
        Ok(la) => la,
        Err(e) => {
            emit(out, &format!("; {e}"))?;
            return Ok(EXIT_USAGE);
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..count {
        match apply(kind, &program, &mut rng, &mut labels) {
            Ok(p) => program = p,
            Err(e) => {
                emit(out, &format!("; {kind} not applied: {e}"))?;
                return Ok(EXIT_FAILURE);
            }
        }
    }
    let text = serialize(&program).unwrap_or_else(|_| program.to_text());
    write!(out, "{text}").map_err(|source| ExperimentError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })?;
    Ok(EXIT_OK)
}

fn cmd_scan(ensemble: &Path, target: &Path, out: &mut dyn Write) -> Result<i32, ExperimentError> {
    let text = read_text(ensemble)?;
    let ensemble = ScannerEnsemble::from_json(&text).map_err(|source| ExperimentError::Config {
        path: ensemble.to_path_buf(),
        source,
    })?;
    if target.is_dir() {
        emit(out, "generation,detect_count")?;
        for (g, path) in best_variants(target)? {
            let p = read_program(&path)?;
            emit(out, &format!("{g},{}", detect_count(&ensemble, &p)))?;
        }
    } else {
        let p = read_program(target)?;
        emit(out, "target,detect_count")?;
        emit(out, &format!("{},{}", target.display(), detect_count(&ensemble, &p)))?;
    }
    Ok(EXIT_OK)
}
