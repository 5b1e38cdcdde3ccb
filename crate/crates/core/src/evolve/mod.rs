//! The evolutionary engine: initialization, tournament selection, crossover,
//! mutation, evaluation and the novelty archive.

mod archive;

use std::collections::BTreeMap;

use log::debug;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use archive::{Admission, AdmissionReason, Archive};

use crate::asm::{execute, validate, MachineState, Program, DEFAULT_STEP_BUDGET};
use crate::similarity::{score_population, SimilarityError, StatementSet};
use crate::transforms::{
    apply, crossover_cbi, LabelAllocator, PivotPoint, TransformError, TransformKind,
};

/// Which quality indicator drives selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessMode {
    /// Baseline indicator built on similarity to the source alone. Selection
    /// prefers individuals that stay close to the source.
    Alpha,
    /// Novelty: distance of an individual's similarity vector from the
    /// population mean vector.
    Beta,
}

impl std::fmt::Display for FitnessMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitnessMode::Alpha => "alpha",
            FitnessMode::Beta => "beta",
        })
    }
}

fn default_mutation_probs() -> BTreeMap<TransformKind, f64> {
    TransformKind::ALL
        .into_iter()
        .map(|k| (k, TransformKind::DEFAULT_PROBABILITY))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EaConfig {
    pub population_size: usize,
    pub generations: u32,
    pub tournament_size: usize,
    /// Per-offspring application probability of each kind. Kinds left out
    /// are never applied.
    pub mutation_probs: BTreeMap<TransformKind, f64>,
    pub fitness_mode: FitnessMode,
    pub rng_seed: u64,
    pub archive_similarity_threshold: f64,
    pub init_transform_count: usize,
    pub step_budget: u64,
    /// Crossover pivot as a seed body offset. Defaults to the middle.
    pub pivot: Option<u32>,
    pub label_prefix: String,
    /// Previous-generation individuals, best first, that replace the worst
    /// children of each generation. Zero is pure generational replacement.
    pub elitism: usize,
}

impl Default for EaConfig {
    fn default() -> Self {
        EaConfig {
            population_size: 20,
            generations: 300,
            tournament_size: 2,
            mutation_probs: default_mutation_probs(),
            fitness_mode: FitnessMode::Beta,
            rng_seed: 0,
            archive_similarity_threshold: 0.95,
            init_transform_count: 3,
            step_budget: DEFAULT_STEP_BUDGET,
            pivot: None,
            label_prefix: "__v".to_string(),
            elitism: 1,
        }
    }
}

impl EaConfig {
    pub fn check(&self) -> Result<(), EvolveError> {
        let bad = |msg: String| Err(EvolveError::Config(msg));
        if self.population_size < 2 {
            return bad(format!(
                "population_size must be at least 2, got {}",
                self.population_size
            ));
        }
        if self.elitism >= self.population_size {
            return bad(format!(
                "elitism must be below population_size {}, got {}",
                self.population_size, self.elitism
            ));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return bad(format!(
                "tournament_size must lie in 1..={}, got {}",
                self.population_size, self.tournament_size
            ));
        }
        for (kind, p) in &self.mutation_probs {
            if !(0.0..=1.0).contains(p) {
                return bad(format!("mutation probability for {kind} must lie in [0, 1], got {p}"));
            }
        }
        if !(0.0..=1.0).contains(&self.archive_similarity_threshold) {
            return bad(format!(
                "archive_similarity_threshold must lie in [0, 1], got {}",
                self.archive_similarity_threshold
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("seed program is not valid: {0}")]
    InvalidSeed(String),
    #[error("could not build individual {index} of the initial population: {reason}")]
    InitializationFailure { index: usize, reason: String },
    #[error("generation {generation}: variant {id} broke an invariant: {detail}")]
    InvariantViolation {
        generation: u32,
        id: u64,
        detail: String,
        program: String,
    },
    #[error("population has unevaluated individuals")]
    UnevaluatedPopulation,
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("crossover pivot: {0}")]
    Pivot(String),
}

/// One individual.
#[derive(Clone, Debug, PartialEq)]
pub struct Chromosome {
    /// Run-unique identifier, in creation order.
    pub id: u64,
    pub program: Program,
    pub statements: StatementSet,
    pub fitness: Option<f64>,
    pub source_similarity: Option<f64>,
    pub generation_born: u32,
}

impl Chromosome {
    pub fn new(id: u64, program: Program, generation_born: u32) -> Chromosome {
        let statements = StatementSet::from_program(&program);
        Chromosome {
            id,
            program,
            statements,
            fitness: None,
            source_similarity: None,
            generation_born,
        }
    }
}

/// Something noteworthy that did not stop the run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunEvent {
    pub generation: u32,
    pub kind: String,
    pub detail: String,
}

/// Summary of one evaluated generation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub generation: u32,
    /// Population index of the best-of-generation individual.
    pub best_index: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_source_similarity: f64,
    pub mean_source_similarity: f64,
    pub mean_pairwise_similarity: f64,
    pub archive_size: usize,
}

/// Index of the winner among `k` distinct uniformly drawn individuals.
/// Ties go to the lowest index.
pub fn tournament_select<R: Rng + ?Sized>(
    pop: &[Chromosome],
    k: usize,
    rng: &mut R,
) -> Result<usize, EvolveError> {
    if k == 0 || k > pop.len() {
        return Err(EvolveError::Config(format!(
            "tournament size {k} does not fit a population of {}",
            pop.len()
        )));
    }
    let mut best: Option<(usize, f64)> = None;
    for i in sample(rng, pop.len(), k) {
        let f = pop[i].fitness.ok_or(EvolveError::UnevaluatedPopulation)?;
        best = match best {
            Some((j, g)) if g > f || (g == f && j < i) => Some((j, g)),
            _ => Some((i, f)),
        };
    }
    Ok(best.expect("k >= 1").0)
}

/// Bound on attempts to find an applicable transform per initial mutation.
const INIT_RETRIES: usize = 64;

/// The running state of one evolutionary run.
pub struct Engine {
    seed: Program,
    seed_outcome: MachineState,
    source: StatementSet,
    cfg: EaConfig,
    rng: ChaCha8Rng,
    labels: LabelAllocator,
    pivot: PivotPoint,
    population: Vec<Chromosome>,
    archive: Archive,
    generation: u32,
    next_id: u64,
    variants_produced: u64,
    events: Vec<RunEvent>,
    last_record: GenerationRecord,
    initial_source_similarity: Vec<f64>,
}

impl Engine {
    /// Builds and evaluates the initial population (generation 0).
    pub fn new(seed: &Program, cfg: EaConfig) -> Result<Engine, EvolveError> {
        cfg.check()?;
        let report = validate(seed);
        if !report.is_valid() {
            return Err(EvolveError::InvalidSeed(format!("{:?}", report.violations)));
        }
        let seed_outcome = execute(seed, cfg.step_budget)
            .map_err(|e| EvolveError::InvalidSeed(e.to_string()))?;
        let labels = LabelAllocator::for_program(&cfg.label_prefix, seed)?;
        let pivot = match cfg.pivot {
            Some(offset) => PivotPoint::new(seed, offset),
            None => PivotPoint::middle(seed),
        }
        .map_err(|e| EvolveError::Pivot(e.to_string()))?;

        let mut engine = Engine {
            seed: seed.clone(),
            seed_outcome,
            source: StatementSet::from_program(seed),
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            cfg,
            labels,
            pivot,
            population: Vec::new(),
            archive: Archive::new(0.0),
            generation: 0,
            next_id: 0,
            variants_produced: 0,
            events: Vec::new(),
            last_record: GenerationRecord {
                generation: 0,
                best_index: 0,
                best_fitness: 0.0,
                mean_fitness: 0.0,
                best_source_similarity: 0.0,
                mean_source_similarity: 0.0,
                mean_pairwise_similarity: 0.0,
                archive_size: 0,
            },
            initial_source_similarity: Vec::new(),
        };
        engine.archive = Archive::new(engine.cfg.archive_similarity_threshold);
        engine.population = engine.init_population()?;
        engine.last_record = engine.evaluate()?;
        engine.initial_source_similarity = engine.source_similarities();
        Ok(engine)
    }

    fn init_population(&mut self) -> Result<Vec<Chromosome>, EvolveError> {
        let mut pop = Vec::with_capacity(self.cfg.population_size);
        for index in 0..self.cfg.population_size {
            let mut program = self.seed.clone();
            for _ in 0..self.cfg.init_transform_count {
                let mut attempt = 0;
                program = loop {
                    let kind = TransformKind::ALL[self.rng.gen_range(0..TransformKind::ALL.len())];
                    match apply(kind, &program, &mut self.rng, &mut self.labels) {
                        Ok(p) => break p,
                        Err(e) if attempt + 1 < INIT_RETRIES => {
                            self.event("init-skip", format!("{kind}: {e}"));
                            attempt += 1;
                        }
                        Err(e) => {
                            return Err(EvolveError::InitializationFailure {
                                index,
                                reason: e.to_string(),
                            })
                        }
                    }
                };
            }
            let c = self.admit_child(program)?;
            pop.push(c);
        }
        Ok(pop)
    }

    fn event(&mut self, kind: &str, detail: String) {
        debug!("generation {}: {kind}: {detail}", self.generation);
        self.events.push(RunEvent {
            generation: self.generation,
            kind: kind.to_string(),
            detail,
        });
    }

    /// Online check of the core guarantee, then wraps the program.
    fn admit_child(&mut self, program: Program) -> Result<Chromosome, EvolveError> {
        let id = self.next_id;
        self.next_id += 1;
        let violation = |detail: String| EvolveError::InvariantViolation {
            generation: self.generation,
            id,
            detail,
            program: program.to_text(),
        };
        let report = validate(&program);
        if !report.is_valid() {
            return Err(violation(format!("invalid: {:?}", report.violations)));
        }
        match execute(&program, self.cfg.step_budget) {
            Ok(st) if st.same_outcome(&self.seed_outcome) => {}
            Ok(_) => return Err(violation("observable behavior differs from the seed".into())),
            Err(e) => return Err(violation(format!("cannot be compared with the seed: {e}"))),
        }
        Ok(Chromosome::new(id, program, self.generation))
    }

    /// Scores the population, updates the archive and summarizes.
    fn evaluate(&mut self) -> Result<GenerationRecord, EvolveError> {
        let sets: Vec<&StatementSet> = self.population.iter().map(|c| &c.statements).collect();
        let scores = score_population(&sets, &self.source)?;
        for (i, c) in self.population.iter_mut().enumerate() {
            c.source_similarity = Some(scores.source_similarity[i]);
            c.fitness = Some(match self.cfg.fitness_mode {
                FitnessMode::Alpha => scores.source_similarity[i],
                FitnessMode::Beta => scores.novelty[i],
            });
        }
        let fitness: Vec<f64> = self.population.iter().map(|c| c.fitness.unwrap_or(0.0)).collect();
        let top = argmax(&fitness);
        let best_index = match self.cfg.fitness_mode {
            FitnessMode::Alpha => top,
            FitnessMode::Beta => argmin(&scores.source_similarity),
        };
        self.archive.update(self.generation, &self.population, top);
        let n = fitness.len() as f64;
        Ok(GenerationRecord {
            generation: self.generation,
            best_index,
            best_fitness: fitness[best_index],
            mean_fitness: fitness.iter().sum::<f64>() / n,
            best_source_similarity: scores.source_similarity[best_index],
            mean_source_similarity: scores.source_similarity.iter().sum::<f64>() / n,
            mean_pairwise_similarity: scores.mean_pairwise_similarity,
            archive_size: self.archive.len(),
        })
    }

    fn fitness_of(&self, pop: &[Chromosome]) -> Result<Vec<f64>, EvolveError> {
        let sets: Vec<&StatementSet> = pop.iter().map(|c| &c.statements).collect();
        let scores = score_population(&sets, &self.source)?;
        Ok(match self.cfg.fitness_mode {
            FitnessMode::Alpha => scores.source_similarity,
            FitnessMode::Beta => scores.novelty,
        })
    }

    /// Overwrites the lowest-fitness children with the fittest parents.
    /// Ties go to the lower index on both sides.
    fn keep_elites(&self, children: &mut [Chromosome]) -> Result<(), EvolveError> {
        let e = self.cfg.elitism;
        let parent_fit: Vec<f64> = self.population.iter().map(|c| c.fitness.unwrap_or(0.0)).collect();
        let child_fit = self.fitness_of(children)?;
        let mut best: Vec<usize> = (0..parent_fit.len()).collect();
        best.sort_by(|&a, &b| parent_fit[b].total_cmp(&parent_fit[a]).then(a.cmp(&b)));
        let mut worst: Vec<usize> = (0..child_fit.len()).collect();
        worst.sort_by(|&a, &b| child_fit[a].total_cmp(&child_fit[b]).then(a.cmp(&b)));
        for (&slot, &elite) in worst.iter().zip(&best).take(e) {
            children[slot] = self.population[elite].clone();
        }
        Ok(())
    }

    fn mutate(&mut self, mut program: Program) -> Program {
        for kind in TransformKind::ALL {
            let p = self.cfg.mutation_probs.get(&kind).copied().unwrap_or(0.0);
            if p > 0.0 && self.rng.gen_bool(p) {
                match apply(kind, &program, &mut self.rng, &mut self.labels) {
                    Ok(out) => program = out,
                    Err(e) => self.event("mutation-skip", format!("{kind}: {e}")),
                }
            }
        }
        program
    }

    /// Breeds and evaluates the next generation.
    pub fn step(&mut self) -> Result<GenerationRecord, EvolveError> {
        self.step_with(|_| {})
    }

    /// [`Engine::step`], showing every bred child to `observe` as it is
    /// admitted, including any that elites later displace.
    pub fn step_with<F: FnMut(&Chromosome)>(&mut self, mut observe: F) -> Result<GenerationRecord, EvolveError> {
        self.generation += 1;
        let size = self.cfg.population_size;
        let mut children = Vec::with_capacity(size);
        while children.len() < size {
            let a = tournament_select(&self.population, self.cfg.tournament_size, &mut self.rng)?;
            let b = tournament_select(&self.population, self.cfg.tournament_size, &mut self.rng)?;
            let (pa, pb) = (&self.population[a].program, &self.population[b].program);
            let pair = if a == b {
                (pa.clone(), pb.clone())
            } else {
                match crossover_cbi(pa, pb, self.pivot) {
                    Ok(pair) => pair,
                    Err(e) => {
                        let parents = (pa.clone(), pb.clone());
                        self.event("crossover-skip", e.to_string());
                        parents
                    }
                }
            };
            for offspring in [pair.0, pair.1] {
                if children.len() == size {
                    break;
                }
                let mutated = self.mutate(offspring);
                let child = self.admit_child(mutated)?;
                observe(&child);
                children.push(child);
            }
        }
        self.variants_produced += size as u64;
        if self.cfg.elitism > 0 {
            self.keep_elites(&mut children)?;
        }
        self.population = children;
        self.last_record = self.evaluate()?;
        Ok(self.last_record.clone())
    }

    pub fn config(&self) -> &EaConfig {
        &self.cfg
    }

    pub fn seed(&self) -> &Program {
        &self.seed
    }

    pub fn pivot(&self) -> PivotPoint {
        self.pivot
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn population(&self) -> &[Chromosome] {
        &self.population
    }

    pub fn archive(&self) -> &Archive {
        &self.archive
    }

    pub fn events(&self) -> &[RunEvent] {
        &self.events
    }

    /// Variants bred by `step`; the initial population is not counted.
    pub fn variants_produced(&self) -> u64 {
        self.variants_produced
    }

    /// Record of the most recent evaluation.
    pub fn record(&self) -> &GenerationRecord {
        &self.last_record
    }

    pub fn best(&self) -> &Chromosome {
        &self.population[self.last_record.best_index]
    }

    pub fn source_similarities(&self) -> Vec<f64> {
        self.population
            .iter()
            .map(|c| c.source_similarity.unwrap_or(0.0))
            .collect()
    }

    pub fn initial_source_similarity(&self) -> &[f64] {
        &self.initial_source_similarity
    }

    pub fn into_result(self, history: Vec<GenerationRecord>, initial: GenerationRecord) -> RunResult {
        let final_source_similarity = self.source_similarities();
        RunResult {
            config: self.cfg,
            initial,
            history,
            initial_source_similarity: self.initial_source_similarity,
            final_source_similarity,
            final_population: self.population,
            archive: self.archive,
            variants_produced: self.variants_produced,
            events: self.events,
        }
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: EaConfig,
    /// Generation 0, the initial population.
    pub initial: GenerationRecord,
    /// Generations 1 through G.
    pub history: Vec<GenerationRecord>,
    pub initial_source_similarity: Vec<f64>,
    pub final_source_similarity: Vec<f64>,
    pub final_population: Vec<Chromosome>,
    pub archive: Archive,
    pub variants_produced: u64,
    pub events: Vec<RunEvent>,
}

/// Runs all configured generations in memory.
pub fn run(seed: &Program, cfg: EaConfig) -> Result<RunResult, EvolveError> {
    let mut engine = Engine::new(seed, cfg)?;
    let initial = engine.record().clone();
    let mut history = Vec::with_capacity(engine.config().generations as usize);
    for _ in 0..engine.config().generations {
        history.push(engine.step()?);
    }
    Ok(engine.into_result(history, initial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::parse_program;

    fn seed() -> Program {
        parse_program(
            ";;BODY-START\n    MOV CX, 3\ntop:\n    OUT CX\n    DEC CX\n    CMP CX, 0\n    JNZ top\n    MOV AX, 5\n    PUSH AX\n    POP BX\n    ADD BX, 2\n    OUT BX\n;;BODY-END\n",
        )
        .unwrap()
    }

    fn evaluated(fitness: &[f64]) -> Vec<Chromosome> {
        fitness
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                let mut c = Chromosome::new(i as u64, seed(), 0);
                c.fitness = Some(f);
                c
            })
            .collect()
    }

    #[test]
    fn tournament_examples() {
        let pop = evaluated(&[0.1, 0.9, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(tournament_select(&pop, 3, &mut rng).unwrap(), 1);
        }
        let mut seen = [false; 3];
        for _ in 0..200 {
            seen[tournament_select(&pop, 1, &mut rng).unwrap()] = true;
        }
        assert_eq!(seen, [true; 3]);
        for _ in 0..50 {
            let w = tournament_select(&pop, 2, &mut rng).unwrap();
            assert_ne!(w, 0, "the worst can never win a pair of distinct entrants");
        }
        let tie = evaluated(&[0.5, 0.5]);
        assert_eq!(tournament_select(&tie, 2, &mut rng).unwrap(), 0);
        let mut raw = evaluated(&[0.5, 0.5]);
        raw[1].fitness = None;
        assert!(matches!(
            tournament_select(&raw, 2, &mut rng),
            Err(EvolveError::UnevaluatedPopulation)
        ));
    }

    #[test]
    fn clones_without_mutation() {
        let cfg = EaConfig {
            population_size: 2,
            generations: 1,
            init_transform_count: 0,
            mutation_probs: BTreeMap::new(),
            ..EaConfig::default()
        };
        let r = run(&seed(), cfg).unwrap();
        for c in &r.final_population {
            assert_eq!(c.program, seed());
        }
        assert_eq!(r.variants_produced, 2);
        assert_eq!(r.archive.len(), 1);
    }

    #[test]
    fn zero_generations() {
        let cfg = EaConfig {
            generations: 0,
            ..EaConfig::default()
        };
        let r = run(&seed(), cfg).unwrap();
        assert!(r.history.is_empty());
        assert_eq!(r.final_population.len(), 20);
        assert_eq!(r.variants_produced, 0);
    }

    #[test]
    fn exact_population_counts() {
        let cfg = EaConfig {
            population_size: 5,
            generations: 4,
            ..EaConfig::default()
        };
        let r = run(&seed(), cfg).unwrap();
        assert_eq!(r.variants_produced, 20);
        assert_eq!(r.history.len(), 4);
        assert_eq!(r.final_population.len(), 5);
    }

    #[test]
    fn config_checks() {
        let bad = [
            EaConfig {
                population_size: 1,
                ..EaConfig::default()
            },
            EaConfig {
                tournament_size: 21,
                ..EaConfig::default()
            },
            EaConfig {
                archive_similarity_threshold: 1.5,
                ..EaConfig::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(Engine::new(&seed(), cfg), Err(EvolveError::Config(_))));
        }
    }

    #[test]
    fn config_json_defaults() {
        let cfg: EaConfig = serde_json::from_str(r#"{"fitness_mode": "alpha", "rng_seed": 9}"#).unwrap();
        assert_eq!(cfg.population_size, 20);
        assert_eq!(cfg.mutation_probs.len(), 5);
        assert_eq!(cfg.fitness_mode, FitnessMode::Alpha);
        assert!(serde_json::from_str::<EaConfig>(r#"{"popsize": 3}"#).is_err());
    }
}
