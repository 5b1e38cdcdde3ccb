//! Experiment configuration and on-disk run directories.
//!
//! A run directory holds:
//!
//! ```text
//! config.json          effective configuration
//! ensemble.json        simulated scanner ensemble
//! history.csv          one row per bred generation (1..=G)
//! similarity.csv       source/peer similarity per generation (0..=G)
//! evasion.csv          scanner detections per generation (0..=G)
//! events.csv           skipped transforms and crossovers
//! best/gen_NNNN.vasm   best-of-generation variant
//! population/gen_NNNN/ind_NN.vasm
//! archive/NNNNNN.vasm and archive/admissions.csv
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asm::{parse_program, serialize, ParseError, Program};
use crate::evolve::{EaConfig, Engine, EvolveError, FitnessMode, GenerationRecord};
use crate::scanner::{
    build_ensemble, detect_count, ScanError, ScannerEnsemble, DEFAULT_GRAM_LEN, DEFAULT_SCANNERS,
    DEFAULT_SIGNATURES_PER_SCANNER,
};
use crate::stats::{mann_whitney_u, StatsError, UTestResult};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScannerConfig {
    pub m: usize,
    pub sigs_per_scanner: usize,
    pub n: usize,
    /// Ensemble seed. Falls back to the run's rng seed.
    pub rng_seed: Option<u64>,
}

impl Default for ScannerConfig {
    fn default() -> Self {
        ScannerConfig {
            m: DEFAULT_SCANNERS,
            sigs_per_scanner: DEFAULT_SIGNATURES_PER_SCANNER,
            n: DEFAULT_GRAM_LEN,
            rng_seed: None,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_snapshot_every() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Relative paths are resolved against the config file's directory.
    pub seed_program: PathBuf,
    #[serde(default)]
    pub ea: EaConfig,
    #[serde(default)]
    pub scanner: ScannerConfig,
    /// Relative paths are resolved against the config file's directory.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Write the whole population every this many generations; 0 writes
    /// only the final one.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u32,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl ExperimentError {
    /// Usage and I/O problems as opposed to failures of the run itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            ExperimentError::Io { .. }
                | ExperimentError::Config { .. }
                | ExperimentError::Parse { .. }
                | ExperimentError::Evolve(EvolveError::Config(_))
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_program(path: &Path) -> Result<Program, ExperimentError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_program(&text).map_err(|source| ExperimentError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

impl ExperimentConfig {
    /// Loads a config and makes its relative paths absolute.
    pub fn load(path: &Path) -> Result<ExperimentConfig, ExperimentError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|source| ExperimentError::Config {
                path: path.to_path_buf(),
                source,
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.seed_program = base.join(&cfg.seed_program);
        cfg.output_dir = base.join(&cfg.output_dir);
        Ok(cfg)
    }

    fn scanner_seed(&self) -> u64 {
        self.scanner.rng_seed.unwrap_or(self.ea.rng_seed)
    }

    pub fn build_ensemble(&self, seed: &Program) -> Result<ScannerEnsemble, ExperimentError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.scanner_seed());
        Ok(build_ensemble(
            seed,
            self.scanner.m,
            self.scanner.sigs_per_scanner,
            self.scanner.n,
            &mut rng,
        )?)
    }
}

fn write(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

fn program_text(p: &Program) -> String {
    // Engine output is size checked on creation.
    serialize(p).unwrap_or_else(|_| p.to_text())
}

/// Per-generation scanner results.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EvasionRecord {
    pub generation: u32,
    /// Detections of the best-of-generation variant.
    pub detect_count: usize,
    /// Fewest detections of any individual in the generation.
    pub population_min_detect_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimilarityRecord {
    pub generation: u32,
    pub best_source_similarity: f64,
    pub mean_source_similarity: f64,
    pub mean_pairwise_similarity: f64,
}

impl From<&GenerationRecord> for SimilarityRecord {
    fn from(r: &GenerationRecord) -> Self {
        SimilarityRecord {
            generation: r.generation,
            best_source_similarity: r.best_source_similarity,
            mean_source_similarity: r.mean_source_similarity,
            mean_pairwise_similarity: r.mean_pairwise_similarity,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
struct HistoryRow {
    generation: u32,
    best_fitness: f64,
    mean_fitness: f64,
    best_source_similarity: f64,
    archive_size: usize,
}

/// What a finished run leaves behind besides its directory.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub initial: GenerationRecord,
    pub history: Vec<GenerationRecord>,
    pub evasion: Vec<EvasionRecord>,
    pub initial_source_similarity: Vec<f64>,
    pub final_source_similarity: Vec<f64>,
    pub variants_produced: u64,
    pub archive_size: usize,
}

fn evasion_of(engine: &Engine, ensemble: &ScannerEnsemble) -> EvasionRecord {
    let counts: Vec<usize> = engine
        .population()
        .iter()
        .map(|c| detect_count(ensemble, &c.program))
        .collect();
    EvasionRecord {
        generation: engine.generation(),
        detect_count: counts[engine.record().best_index],
        population_min_detect_count: counts.iter().copied().min().unwrap_or(0),
    }
}

fn write_population(dir: &Path, engine: &Engine) -> Result<(), ExperimentError> {
    let gen_dir = dir
        .join("population")
        .join(format!("gen_{:04}", engine.generation()));
    for (i, c) in engine.population().iter().enumerate() {
        write(&gen_dir.join(format!("ind_{i:02}.vasm")), &program_text(&c.program))?;
    }
    Ok(())
}

fn write_best(dir: &Path, engine: &Engine) -> Result<(), ExperimentError> {
    let path = dir
        .join("best")
        .join(format!("gen_{:04}.vasm", engine.generation()));
    write(&path, &program_text(&engine.best().program))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Runs one evolution with the given seed program and writes its run
/// directory.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seed: &Program,
    dir: &Path,
) -> Result<RunSummary, ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let ensemble = cfg.build_ensemble(seed)?;
    let json = serde_json::to_string_pretty(cfg).expect("config serializes");
    write(&dir.join("config.json"), &json)?;
    write(&dir.join("ensemble.json"), &ensemble.to_json())?;

    let mut engine = Engine::new(seed, cfg.ea.clone())?;
    let initial = engine.record().clone();
    let mut evasion = vec![evasion_of(&engine, &ensemble)];
    write_best(dir, &engine)?;
    let generations = cfg.ea.generations;
    let snapshot = |g: u32| g == generations || (cfg.snapshot_every > 0 && g.is_multiple_of(cfg.snapshot_every));
    if snapshot(0) {
        write_population(dir, &engine)?;
    }
    let mut history = Vec::with_capacity(generations as usize);
    for _ in 0..generations {
        let record = engine.step()?;
        evasion.push(evasion_of(&engine, &ensemble));
        write_best(dir, &engine)?;
        if snapshot(engine.generation()) {
            write_population(dir, &engine)?;
        }
        history.push(record);
    }

    let rows: Vec<HistoryRow> = history
        .iter()
        .map(|r| HistoryRow {
            generation: r.generation,
            best_fitness: r.best_fitness,
            mean_fitness: r.mean_fitness,
            best_source_similarity: r.best_source_similarity,
            archive_size: r.archive_size,
        })
        .collect();
    write_csv(&dir.join("history.csv"), &rows)?;
    let sim: Vec<SimilarityRecord> = std::iter::once(&initial)
        .chain(&history)
        .map(SimilarityRecord::from)
        .collect();
    write_csv(&dir.join("similarity.csv"), &sim)?;
    write_csv(&dir.join("evasion.csv"), &evasion)?;
    write_csv(&dir.join("events.csv"), engine.events())?;

    let archive = engine.archive();
    for m in archive.members() {
        write(
            &dir.join("archive").join(format!("{:06}.vasm", m.id)),
            &program_text(&m.program),
        )?;
    }
    write_csv(&dir.join("archive").join("admissions.csv"), archive.admission_log())?;

    Ok(RunSummary {
        dir: dir.to_path_buf(),
        archive_size: archive.len(),
        initial,
        evasion,
        initial_source_similarity: engine.initial_source_similarity().to_vec(),
        final_source_similarity: engine.source_similarities(),
        variants_produced: engine.variants_produced(),
        history,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeSummary {
    pub initial_mean_similarity: f64,
    pub final_mean_similarity: f64,
    pub initial_mean_dissimilarity: f64,
    pub final_mean_dissimilarity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub rng_seed: u64,
    pub alpha: ModeSummary,
    pub beta: ModeSummary,
    /// Alpha run, initial against final source similarity.
    pub alpha_initial_vs_final: UTestResult,
    /// Beta run, initial against final source similarity.
    pub beta_initial_vs_final: UTestResult,
    pub alpha_initial_vs_beta_initial: UTestResult,
}

#[derive(Clone, Debug, Serialize)]
struct TableRow {
    individual: usize,
    alpha_initial: f64,
    alpha_final: f64,
    beta_initial: f64,
    beta_final: f64,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub alpha: RunSummary,
    pub beta: RunSummary,
    pub verdict: Verdict,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

fn mode_summary(r: &RunSummary) -> ModeSummary {
    let init = mean(&r.initial_source_similarity);
    let fin = mean(&r.final_source_similarity);
    ModeSummary {
        initial_mean_similarity: init,
        final_mean_similarity: fin,
        initial_mean_dissimilarity: 1.0 - init,
        final_mean_dissimilarity: 1.0 - fin,
    }
}

/// Runs the same configuration under both fitness modes and tests the
/// similarity shifts.
pub fn compare(cfg: &ExperimentConfig, seed: &Program, dir: &Path) -> Result<Comparison, ExperimentError> {
    let mut runs = Vec::new();
    for mode in [FitnessMode::Alpha, FitnessMode::Beta] {
        let mut c = cfg.clone();
        c.ea.fitness_mode = mode;
        runs.push(run_experiment(&c, seed, &dir.join(mode.to_string()))?);
    }
    let beta = runs.pop().expect("two runs");
    let alpha = runs.pop().expect("two runs");

    let rows: Vec<TableRow> = (0..alpha.initial_source_similarity.len())
        .map(|i| TableRow {
            individual: i + 1,
            alpha_initial: alpha.initial_source_similarity[i],
            alpha_final: alpha.final_source_similarity[i],
            beta_initial: beta.initial_source_similarity[i],
            beta_final: beta.final_source_similarity[i],
        })
        .collect();
    write_csv(&dir.join("table.csv"), &rows)?;

    let verdict = Verdict {
        rng_seed: cfg.ea.rng_seed,
        alpha: mode_summary(&alpha),
        beta: mode_summary(&beta),
        alpha_initial_vs_final: mann_whitney_u(
            &alpha.initial_source_similarity,
            &alpha.final_source_similarity,
        )?,
        beta_initial_vs_final: mann_whitney_u(
            &beta.initial_source_similarity,
            &beta.final_source_similarity,
        )?,
        alpha_initial_vs_beta_initial: mann_whitney_u(
            &alpha.initial_source_similarity,
            &beta.initial_source_similarity,
        )?,
    };
    let json = serde_json::to_string_pretty(&verdict).expect("verdict serializes");
    write(&dir.join("verdict.json"), &json)?;
    Ok(Comparison {
        alpha,
        beta,
        verdict,
    })
}

/// Best-of-generation programs of a run directory, in generation order.
pub fn best_variants(run_dir: &Path) -> Result<Vec<(u32, PathBuf)>, ExperimentError> {
    let best = run_dir.join("best");
    let mut out = Vec::new();
    for entry in fs::read_dir(&best).map_err(io_err(&best))? {
        let path = entry.map_err(io_err(&best))?.path();
        let generation = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.strip_prefix("gen_"))
            .and_then(|s| s.parse::<u32>().ok());
        if let Some(g) = generation {
            out.push((g, path));
        }
    }
    out.sort();
    Ok(out)
}

/// Reads a single-column CSV of numbers. A non-numeric first row is taken
/// as a header.
pub fn read_sample(path: &Path) -> Result<Vec<f64>, ExperimentError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let Some(field) = rec.get(0).map(str::trim) else { continue };
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(ExperimentError::Io {
                    path: path.to_path_buf(),
                    source: io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("row {}: `{field}` is not a number", i + 1),
                    ),
                })
            }
        }
    }
    Ok(out)
}
