//! Semantics-preserving code transformations.
//!
//! Five mutation operators (fake instruction, forced jump, untouchable block,
//! and the two conditional-jump flavors) plus a two-parent code block
//! interchange crossover. Every operator maps a valid program to a valid,
//! observationally equivalent program.
//!
//! Placement rule shared by the jump-based operators: material created for a
//! site stays inside the site's *provenance gap*, the run of statements
//! between the site's seed ancestor and the next seed-derived statement. That
//! keeps every transform-issued label on one side of any crossover pivot.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asm::{
    is_label_name, Mnemonic, ParseError, Program, Register, Statement, GENERATED_LABEL_PREFIX,
    MAX_PROGRAM_BYTES,
};

/// Mutation operator tags.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum TransformKind {
    /// Fake instruction: insert a NOP.
    FI,
    /// Forced jump: move an instruction out of line behind a JMP.
    FJ,
    /// Untouchable block: dead code jumped over.
    UB,
    /// Conditional zero jump.
    CZJ,
    /// Conditional non-zero jump.
    CNZJ,
}

impl TransformKind {
    pub const ALL: [TransformKind; 5] = [
        TransformKind::FI,
        TransformKind::FJ,
        TransformKind::UB,
        TransformKind::CZJ,
        TransformKind::CNZJ,
    ];

    pub const DEFAULT_PROBABILITY: f64 = 0.2;
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for TransformKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TransformKind::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown transform `{s}` (expected FI, FJ, UB, CZJ or CNZJ)"))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("result would be {bytes} bytes, over the {MAX_PROGRAM_BYTES} byte limit")]
    SizeLimitExceeded { bytes: usize },
    #[error("body has no instruction to transform")]
    NoEligibleSite,
    #[error("label allocator range exhausted")]
    LabelsExhausted,
    #[error("invalid label prefix `{0}`")]
    InvalidPrefix(String),
    #[error("seed label `{0}` collides with the generated label prefix")]
    LabelCollision(String),
}

/// What a generated label is used for. Encoded as one letter before the
/// numeric suffix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelRole {
    /// Start of an out-of-line block (`L`).
    Entry,
    /// Resume point after an out-of-line block (`R`).
    Return,
    /// End of an untouchable block (`U`).
    Untouchable,
    /// Jump-over target guarding an out-of-line block (`K`).
    Skip,
}

impl LabelRole {
    fn letter(self) -> char {
        match self {
            LabelRole::Entry => 'L',
            LabelRole::Return => 'R',
            LabelRole::Untouchable => 'U',
            LabelRole::Skip => 'K',
        }
    }
}

/// Issues run-unique labels that cannot collide with seed labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelAllocator {
    run_prefix: String,
    counter: u64,
    end: u64,
}

impl LabelAllocator {
    pub fn new(run_prefix: &str) -> Result<LabelAllocator, TransformError> {
        let ok = run_prefix.starts_with(GENERATED_LABEL_PREFIX)
            && is_label_name(run_prefix)
            && !run_prefix.ends_with(|c: char| c.is_ascii_digit());
        if !ok {
            return Err(TransformError::InvalidPrefix(run_prefix.to_string()));
        }
        Ok(LabelAllocator {
            run_prefix: run_prefix.to_string(),
            counter: 0,
            end: u64::MAX,
        })
    }

    /// Allocator for transforming descendants of `seed`. Fails if any seed
    /// label already uses the prefix.
    pub fn for_program(run_prefix: &str, seed: &Program) -> Result<LabelAllocator, TransformError> {
        let la = LabelAllocator::new(run_prefix)?;
        if let Some(clash) = seed
            .label_table
            .keys()
            .find(|name| name.starts_with(run_prefix))
        {
            return Err(TransformError::LabelCollision(clash.clone()));
        }
        Ok(la)
    }

    pub fn run_prefix(&self) -> &str {
        &self.run_prefix
    }

    /// Next free label number.
    pub fn peek(&self) -> u64 {
        self.counter
    }

    fn next_id(&mut self) -> Result<u64, TransformError> {
        if self.counter >= self.end {
            return Err(TransformError::LabelsExhausted);
        }
        let id = self.counter;
        self.counter += 1;
        Ok(id)
    }

    fn name(&self, role: LabelRole, id: u64) -> String {
        format!("{}{}{}", self.run_prefix, role.letter(), id)
    }

    /// Reserves the next `count` label numbers for an independent worker.
    pub fn split_off(&mut self, count: u64) -> Result<LabelAllocator, TransformError> {
        let start = self.counter;
        let stop = start.checked_add(count).filter(|&s| s <= self.end);
        let stop = stop.ok_or(TransformError::LabelsExhausted)?;
        self.counter = stop;
        Ok(LabelAllocator {
            run_prefix: self.run_prefix.clone(),
            counter: start,
            end: stop,
        })
    }

    /// Role of a generated label, judged by its trailing letter and digits.
    pub fn role_of(label: &str) -> Option<LabelRole> {
        if !label.starts_with(GENERATED_LABEL_PREFIX) {
            return None;
        }
        let stem = label.trim_end_matches(|c: char| c.is_ascii_digit());
        if stem.len() == label.len() {
            return None;
        }
        match stem.chars().last()? {
            'L' => Some(LabelRole::Entry),
            'R' => Some(LabelRole::Return),
            'U' => Some(LabelRole::Untouchable),
            'K' => Some(LabelRole::Skip),
            _ => None,
        }
    }
}

fn finish(p: &Program, body: Vec<Statement>) -> Result<Program, TransformError> {
    let out = p.with_body(body);
    let bytes = out.serialized_len();
    if bytes > MAX_PROGRAM_BYTES {
        return Err(TransformError::SizeLimitExceeded { bytes });
    }
    Ok(out)
}

fn jmp(target: &str) -> Statement {
    Statement::synthetic_instruction(Mnemonic::Jmp, &[target])
}

/// Inserts a NOP at a uniformly random body position.
pub fn fake_instruction<R: Rng + ?Sized>(p: &Program, rng: &mut R) -> Result<Program, TransformError> {
    let pos = rng.gen_range(0..=p.body.len());
    let mut body = p.body.clone();
    body.insert(pos, Statement::synthetic_instruction(Mnemonic::Nop, &[]));
    finish(p, body)
}

/// Replaces a random instruction `s` with `JMP L` and moves `s` into an
/// out-of-line block `L: s; JMP R`, resuming at a return label `R:` placed
/// right after the original site.
pub fn forced_jmp<R: Rng + ?Sized>(
    p: &Program,
    rng: &mut R,
    la: &mut LabelAllocator,
) -> Result<Program, TransformError> {
    out_of_line(p, rng, la, Mnemonic::Jmp)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroFlavor {
    Z,
    NZ,
}

/// Conditional variant of [`forced_jmp`]: the site becomes `JZ L` (or
/// `JNZ L`) followed by an in-line copy of `s`, so `s` runs exactly once on
/// either flag outcome.
pub fn conditional_jmp<R: Rng + ?Sized>(
    p: &Program,
    rng: &mut R,
    la: &mut LabelAllocator,
    flavor: ZeroFlavor,
) -> Result<Program, TransformError> {
    let m = match flavor {
        ZeroFlavor::Z => Mnemonic::Jz,
        ZeroFlavor::NZ => Mnemonic::Jnz,
    };
    out_of_line(p, rng, la, m)
}

fn out_of_line<R: Rng + ?Sized>(
    p: &Program,
    rng: &mut R,
    la: &mut LabelAllocator,
    jump: Mnemonic,
) -> Result<Program, TransformError> {
    let sites: Vec<usize> = p
        .body
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_instruction())
        .map(|(i, _)| i)
        .collect();
    if sites.is_empty() {
        return Err(TransformError::NoEligibleSite);
    }
    let i = sites[rng.gen_range(0..sites.len())];
    let body = &p.body;
    let site = &body[i];

    let id = la.next_id()?;
    let entry = la.name(LabelRole::Entry, id);
    let ret = la.name(LabelRole::Return, id);

    // The rewritten site inherits the seed provenance of `s`.
    let mut head = Statement::synthetic_instruction(jump, &[&entry]);
    head.provenance = site.provenance;
    head.synthetic = site.synthetic;

    let block = [
        Statement::synthetic_label(&entry),
        site.as_synthetic_copy(),
        jmp(&ret),
    ];

    let mut out = Vec::with_capacity(body.len() + 8);
    out.extend_from_slice(&body[..i]);
    out.push(head);
    if jump != Mnemonic::Jmp {
        out.push(site.as_synthetic_copy());
    }

    if site.is_unconditional_transfer() {
        // Nothing falls through past the site, so the block can sit right here.
        out.extend(block);
        out.push(Statement::synthetic_label(&ret));
        out.extend_from_slice(&body[i + 1..]);
        return finish(p, out);
    }

    out.push(Statement::synthetic_label(&ret));
    let gap_end = body[i + 1..]
        .iter()
        .position(|s| s.provenance.is_some())
        .map_or(body.len(), |k| i + 1 + k);
    let terminator = body[i + 1..gap_end]
        .iter()
        .position(Statement::is_unconditional_transfer)
        .map(|k| i + 1 + k);

    match terminator {
        Some(t) => {
            out.extend_from_slice(&body[i + 1..=t]);
            out.extend(block);
            out.extend_from_slice(&body[t + 1..]);
        }
        None if gap_end == body.len() => {
            out.extend_from_slice(&body[i + 1..]);
            out.push(Statement::synthetic_instruction(Mnemonic::Hlt, &[]));
            out.extend(block);
        }
        None => {
            let skip = la.name(LabelRole::Skip, id);
            out.extend_from_slice(&body[i + 1..gap_end]);
            out.push(jmp(&skip));
            out.extend(block);
            out.push(Statement::synthetic_label(&skip));
            out.extend_from_slice(&body[gap_end..]);
        }
    }
    finish(p, out)
}

pub const MAX_DEAD_STATEMENTS: usize = 5;

/// A random jump-free instruction for dead-code padding.
pub fn random_dead_statement<R: Rng + ?Sized>(rng: &mut R) -> Statement {
    const POOL: [Mnemonic; 10] = [
        Mnemonic::Mov,
        Mnemonic::Add,
        Mnemonic::Sub,
        Mnemonic::Cmp,
        Mnemonic::Inc,
        Mnemonic::Dec,
        Mnemonic::Push,
        Mnemonic::Pop,
        Mnemonic::Out,
        Mnemonic::Nop,
    ];
    let m = POOL[rng.gen_range(0..POOL.len())];
    let reg = Register::ALL[rng.gen_range(0..4)].name().to_string();
    let value = |rng: &mut R| -> String {
        if rng.gen_bool(0.5) {
            Register::ALL[rng.gen_range(0..4)].name().to_string()
        } else {
            rng.gen_range(0..100).to_string()
        }
    };
    let ops: Vec<String> = match m {
        Mnemonic::Mov | Mnemonic::Add | Mnemonic::Sub | Mnemonic::Cmp => vec![reg, value(rng)],
        Mnemonic::Inc | Mnemonic::Dec | Mnemonic::Pop => vec![reg],
        Mnemonic::Push | Mnemonic::Out => vec![value(rng)],
        _ => vec![],
    };
    let refs: Vec<&str> = ops.iter().map(String::as_str).collect();
    Statement::synthetic_instruction(m, &refs)
}

/// Inserts `JMP U; <1..=5 dead statements>; U:` at a random body position.
pub fn untouchable_block<R: Rng + ?Sized>(
    p: &Program,
    rng: &mut R,
    la: &mut LabelAllocator,
) -> Result<Program, TransformError> {
    let dead: Vec<Statement> = (0..rng.gen_range(1..=MAX_DEAD_STATEMENTS))
        .map(|_| random_dead_statement(rng))
        .collect();
    untouchable_block_with(p, rng, la, dead)
}

/// [`untouchable_block`] with caller-chosen dead statements.
pub fn untouchable_block_with<R: Rng + ?Sized>(
    p: &Program,
    rng: &mut R,
    la: &mut LabelAllocator,
    dead: Vec<Statement>,
) -> Result<Program, TransformError> {
    let pos = rng.gen_range(0..=p.body.len());
    let id = la.next_id()?;
    let over = la.name(LabelRole::Untouchable, id);
    let mut chunk = Vec::with_capacity(dead.len() + 2);
    chunk.push(jmp(&over));
    chunk.extend(dead);
    chunk.push(Statement::synthetic_label(&over));
    let mut body = p.body.clone();
    body.splice(pos..pos, chunk);
    finish(p, body)
}

/// Applies one mutation operator by tag.
pub fn apply<R: Rng + ?Sized>(
    kind: TransformKind,
    p: &Program,
    rng: &mut R,
    la: &mut LabelAllocator,
) -> Result<Program, TransformError> {
    match kind {
        TransformKind::FI => fake_instruction(p, rng),
        TransformKind::FJ => forced_jmp(p, rng, la),
        TransformKind::UB => untouchable_block(p, rng, la),
        TransformKind::CZJ => conditional_jmp(p, rng, la, ZeroFlavor::Z),
        TransformKind::CNZJ => conditional_jmp(p, rng, la, ZeroFlavor::NZ),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CrossoverError {
    #[error("parents do not descend from the same seed")]
    IncompatibleParents,
    #[error("jump to `{label}` crosses the pivot")]
    PivotSplitsBlock { label: String },
    #[error("pivot {offset} is invalid: {reason}")]
    InvalidPivot { offset: u32, reason: String },
    #[error("seed has no offset that can serve as a pivot")]
    NoValidPivot,
    #[error("offspring would be {bytes} bytes, over the {MAX_PROGRAM_BYTES} byte limit")]
    SizeLimitExceeded { bytes: usize },
    #[error("offspring has broken labels: {0}")]
    BrokenOffspring(ParseError),
}

/// Seed-body offset separating the upper and lower homologous regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotPoint {
    seed_offset: u32,
}

impl PivotPoint {
    /// Checks that `0 < offset < len` and that no seed jump crosses it.
    pub fn new(seed: &Program, offset: u32) -> Result<PivotPoint, CrossoverError> {
        let len = seed.body.len() as u32;
        let invalid = |reason: &str| CrossoverError::InvalidPivot {
            offset,
            reason: reason.to_string(),
        };
        if offset == 0 || offset >= len {
            return Err(invalid("must lie strictly inside the seed body"));
        }
        if let Some(label) = crossing_jump(seed, offset as usize) {
            return Err(invalid(&format!("jump to `{label}` crosses it")));
        }
        Ok(PivotPoint {
            seed_offset: offset,
        })
    }

    /// The valid pivot closest to the middle of the seed body.
    pub fn middle(seed: &Program) -> Result<PivotPoint, CrossoverError> {
        let len = seed.body.len();
        let mid = len / 2;
        // A jump between j and d crosses every offset in (min, max].
        let mut delta = vec![0i64; len + 2];
        for (j, s) in seed.body.iter().enumerate() {
            let Some(&d) = s.jump_target().and_then(|t| seed.label_table.get(t)) else {
                continue;
            };
            delta[j.min(d) + 1] += 1;
            delta[j.max(d) + 1] -= 1;
        }
        let mut open = 0;
        let crossed: Vec<bool> = delta[..len]
            .iter()
            .map(|x| {
                open += x;
                open > 0
            })
            .collect();
        (1..len)
            .filter(|&s| !crossed[s])
            .min_by_key(|&s| (s.abs_diff(mid), s))
            .map(|s| PivotPoint {
                seed_offset: s as u32,
            })
            .ok_or(CrossoverError::NoValidPivot)
    }

    pub fn seed_offset(&self) -> u32 {
        self.seed_offset
    }
}

fn crossing_jump(seed: &Program, offset: usize) -> Option<String> {
    seed.body.iter().enumerate().find_map(|(j, s)| {
        let target = s.jump_target()?;
        let d = *seed.label_table.get(target)?;
        ((j < offset) != (d < offset)).then(|| target.to_string())
    })
}

/// Index of the first statement whose provenance is at or past the pivot.
/// Synthetic statements before it belong to the upper region.
fn split_index(body: &[Statement], pivot: PivotPoint) -> usize {
    body.iter()
        .position(|s| s.provenance.is_some_and(|id| id >= pivot.seed_offset))
        .unwrap_or(body.len())
}

fn region_leak(region: &[Statement]) -> Option<String> {
    let defined: BTreeSet<&str> = region.iter().filter_map(Statement::label_name).collect();
    region
        .iter()
        .filter_map(Statement::jump_target)
        .find(|t| !defined.contains(t))
        .map(str::to_string)
}

fn provenance_ids(p: &Program) -> Vec<u32> {
    p.body.iter().filter_map(|s| s.provenance).collect()
}

/// Code block interchange: offspring are `upper(p) + lower(q)` and
/// `upper(q) + lower(p)`.
pub fn crossover_cbi(
    p: &Program,
    q: &Program,
    pivot: PivotPoint,
) -> Result<(Program, Program), CrossoverError> {
    if provenance_ids(p) != provenance_ids(q) {
        return Err(CrossoverError::IncompatibleParents);
    }
    let (p_up, p_low) = p.body.split_at(split_index(&p.body, pivot));
    let (q_up, q_low) = q.body.split_at(split_index(&q.body, pivot));
    for region in [p_up, p_low, q_up, q_low] {
        if let Some(label) = region_leak(region) {
            return Err(CrossoverError::PivotSplitsBlock { label });
        }
    }
    let child = |up: &[Statement], low: &[Statement]| -> Result<Program, CrossoverError> {
        let body: Vec<Statement> = up.iter().chain(low).cloned().collect();
        let out = p.with_body(body);
        let bytes = out.serialized_len();
        if bytes > MAX_PROGRAM_BYTES {
            return Err(CrossoverError::SizeLimitExceeded { bytes });
        }
        out.check_labels().map_err(CrossoverError::BrokenOffspring)?;
        Ok(out)
    };
    Ok((child(p_up, q_low)?, child(q_up, p_low)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::{equivalent, execute, parse_program, validate, DEFAULT_STEP_BUDGET};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prog(src: &str) -> Program {
        parse_program(&format!(";;BODY-START\n{src}\n;;BODY-END\n")).unwrap()
    }

    fn texts(p: &Program) -> Vec<String> {
        p.body.iter().map(|s| s.normalized().to_string()).collect()
    }

    fn labels() -> LabelAllocator {
        LabelAllocator::new("__t").unwrap()
    }

    #[test]
    fn fake_instruction_adds_one_nop() {
        let p = prog("    MOV AX, 1\n    OUT AX");
        let out = fake_instruction(&p, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.body.len(), 3);
        assert_eq!(texts(&out).iter().filter(|t| *t == "NOP").count(), 1);
        assert_eq!(execute(&out, 100).unwrap().output, vec![1]);
        let nop = out.body.iter().find(|s| s.normalized() == "NOP").unwrap();
        assert!(nop.synthetic && nop.provenance.is_none());
    }

    #[test]
    fn fake_instruction_on_empty_body() {
        let p = prog("");
        let p = p.with_body(vec![]);
        let out = fake_instruction(&p, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(texts(&out), vec!["NOP"]);
    }

    #[test]
    fn fake_instruction_respects_size_limit() {
        let p = prog("    OUT AX");
        let overhead = p.serialized_len() + 1;
        let filler = Statement::synthetic_instruction(Mnemonic::Nop, &[])
            .with_raw_text(format!("    NOP ;{}", "z".repeat(65_530 - overhead - 9)));
        let mut body = p.body.clone();
        body.push(filler);
        let big = p.with_body(body);
        assert_eq!(big.serialized_len(), 65_530);
        assert_eq!(
            fake_instruction(&big, &mut ChaCha8Rng::seed_from_u64(3)),
            Err(TransformError::SizeLimitExceeded { bytes: 65_538 })
        );
    }

    #[test]
    fn forced_jmp_single_statement_shape() {
        let p = prog("    OUT AX");
        let out = forced_jmp(&p, &mut ChaCha8Rng::seed_from_u64(0), &mut labels()).unwrap();
        assert_eq!(
            texts(&out),
            vec!["JMP __TL0", "__TR0:", "HLT", "__TL0:", "OUT AX", "JMP __TR0"]
        );
        assert_eq!(out.body[0].provenance, Some(0));
        assert!(out.body[4].synthetic && out.body[4].provenance.is_none());
        assert!(validate(&out).is_valid());
        assert_eq!(equivalent(&p, &out, 100), Ok(true));
    }

    #[test]
    fn forced_jmp_twice_uses_distinct_labels() {
        let p = prog("    OUT AX");
        let mut la = labels();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let once = forced_jmp(&p, &mut rng, &mut la).unwrap();
        let twice = forced_jmp(&once, &mut rng, &mut la).unwrap();
        assert!(twice.label_table.contains_key("__tL0"));
        assert!(twice.label_table.contains_key("__tL1"));
        assert!(twice.check_labels().is_ok());
        assert!(validate(&twice).is_valid());
        assert_eq!(equivalent(&p, &twice, 100), Ok(true));
    }

    #[test]
    fn forced_jmp_needs_an_instruction() {
        let p = prog("only:\n; nothing here");
        assert_eq!(
            forced_jmp(&p, &mut ChaCha8Rng::seed_from_u64(0), &mut labels()),
            Err(TransformError::NoEligibleSite)
        );
    }

    #[test]
    fn forced_jmp_uses_island_inside_gap() {
        // Site 0 is followed directly by another seed statement, so the block
        // must be jumped over in place.
        let p = prog("    MOV AX, 3\n    OUT AX");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut la = labels();
        let out = loop {
            let out = forced_jmp(&p, &mut rng, &mut la).unwrap();
            if out.body[0].normalized().starts_with("JMP") {
                break out;
            }
        };
        let id = la.peek() - 1;
        assert_eq!(
            texts(&out),
            vec![
                format!("JMP __TL{id}"),
                format!("__TR{id}:"),
                format!("JMP __TK{id}"),
                format!("__TL{id}:"),
                "MOV AX, 3".to_string(),
                format!("JMP __TR{id}"),
                format!("__TK{id}:"),
                "OUT AX".to_string(),
            ]
        );
        assert_eq!(equivalent(&p, &out, 100), Ok(true));
    }

    #[test]
    fn untouchable_block_is_dead() {
        let p = prog("    OUT AX");
        let dead = vec![Statement::synthetic_instruction(Mnemonic::Mov, &["BX", "9"])];
        let out =
            untouchable_block_with(&p, &mut ChaCha8Rng::seed_from_u64(2), &mut labels(), dead).unwrap();
        assert_eq!(out.body.len(), 1 + 3);
        let st = execute(&out, 100).unwrap();
        assert_eq!(st.register(Register::BX), 0);
        assert_eq!(st.output, vec![0]);
        assert!(validate(&out).is_valid());
    }

    #[test]
    fn untouchable_block_grows_by_k_plus_two() {
        let p = prog("    OUT AX");
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let out = untouchable_block(&p, &mut rng, &mut labels()).unwrap();
            let k = out.body.len() - 1 - 2;
            assert!((1..=MAX_DEAD_STATEMENTS).contains(&k));
            assert_eq!(execute(&out, 100).unwrap().output, vec![0]);
        }
    }

    #[test]
    fn conditional_jumps_cover_both_flag_outcomes() {
        for init in [0, 7] {
            let p = prog(&format!("    MOV AX, {init}\n    CMP AX, 0\n    OUT AX"));
            for flavor in [ZeroFlavor::Z, ZeroFlavor::NZ] {
                let mut rng = ChaCha8Rng::seed_from_u64(9);
                let mut la = labels();
                let mut cur = p.clone();
                for _ in 0..6 {
                    cur = conditional_jmp(&cur, &mut rng, &mut la, flavor).unwrap();
                    assert!(validate(&cur).is_valid(), "{}", cur.to_text());
                    assert_eq!(execute(&cur, 1000).unwrap().output, vec![init]);
                }
            }
        }
    }

    #[test]
    fn conditional_jmp_on_terminator_site() {
        let p = prog("    OUT 1\n    HLT");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut la = labels();
        let mut cur = p.clone();
        for _ in 0..10 {
            cur = conditional_jmp(&cur, &mut rng, &mut la, ZeroFlavor::NZ).unwrap();
            assert!(validate(&cur).is_valid());
            assert_eq!(equivalent(&p, &cur, DEFAULT_STEP_BUDGET), Ok(true));
        }
    }

    #[test]
    fn label_roles_round_trip() {
        let mut la = labels();
        let id = la.next_id().unwrap();
        for role in [LabelRole::Entry, LabelRole::Return, LabelRole::Untouchable, LabelRole::Skip] {
            assert_eq!(LabelAllocator::role_of(&la.name(role, id)), Some(role));
        }
        assert_eq!(LabelAllocator::role_of("loop"), None);
        assert_eq!(LabelAllocator::role_of("__tL"), None);
    }

    #[test]
    fn allocator_rejects_bad_prefixes_and_collisions() {
        assert!(LabelAllocator::new("v").is_err());
        assert!(LabelAllocator::new("__v1").is_err());
        let seed = prog("__vL3:\n    NOP");
        assert_eq!(
            LabelAllocator::for_program("__v", &seed),
            Err(TransformError::LabelCollision("__vL3".into()))
        );
    }

    #[test]
    fn split_off_partitions_ranges() {
        let mut la = labels();
        let mut a = la.split_off(2).unwrap();
        let mut b = la.split_off(2).unwrap();
        assert_eq!(a.next_id().unwrap(), 0);
        assert_eq!(a.next_id().unwrap(), 1);
        assert_eq!(a.next_id(), Err(TransformError::LabelsExhausted));
        assert_eq!(b.next_id().unwrap(), 2);
        assert_eq!(la.next_id().unwrap(), 4);
    }

    #[test]
    fn transform_kind_parses() {
        assert_eq!("cnzj".parse::<TransformKind>(), Ok(TransformKind::CNZJ));
        assert!("XX".parse::<TransformKind>().is_err());
    }

    const TWO_HALVES: &str = "    MOV CX, 2\ntop:\n    OUT CX\n    DEC CX\n    CMP CX, 0\n    JNZ top\n    MOV AX, 4\nnext:\n    OUT AX\n    SUB AX, 2\n    CMP AX, 0\n    JNZ next";

    #[test]
    fn pivot_selection() {
        let seed = prog(TWO_HALVES);
        let pivot = PivotPoint::middle(&seed).unwrap();
        assert_eq!(pivot.seed_offset(), 6);
        assert!(matches!(
            PivotPoint::new(&seed, 3),
            Err(CrossoverError::InvalidPivot { offset: 3, .. })
        ));
        assert!(PivotPoint::new(&seed, 0).is_err());
        assert!(PivotPoint::new(&seed, 12).is_err());
        let loop_only = prog("top:\n    JMP top");
        assert_eq!(PivotPoint::middle(&loop_only), Err(CrossoverError::NoValidPivot));
    }

    #[test]
    fn identity_crossover() {
        let seed = prog(TWO_HALVES);
        let pivot = PivotPoint::middle(&seed).unwrap();
        let (a, b) = crossover_cbi(&seed, &seed, pivot).unwrap();
        assert_eq!(a, seed);
        assert_eq!(b, seed);
    }

    #[test]
    fn crossover_exchanges_regions() {
        let seed = prog(TWO_HALVES);
        let pivot = PivotPoint::middle(&seed).unwrap();
        let split = pivot.seed_offset() as usize;
        // Insert a marker NOP above the pivot in p and below it in q.
        let mut p_body = seed.body.clone();
        p_body.insert(1, Statement::synthetic_instruction(Mnemonic::Nop, &[]));
        let p = seed.with_body(p_body);
        let mut q_body = seed.body.clone();
        q_body.insert(split + 1, Statement::synthetic_instruction(Mnemonic::Nop, &[]));
        let q = seed.with_body(q_body);
        let (a, b) = crossover_cbi(&p, &q, pivot).unwrap();
        let nops = |x: &Program| x.body.iter().filter(|s| s.synthetic).count();
        assert_eq!(nops(&a), 2);
        assert_eq!(nops(&b), 0);
        assert_eq!(b, seed);
        assert_eq!(equivalent(&seed, &a, 1000), Ok(true));
    }

    #[test]
    fn crossover_rejects_foreign_parents() {
        let seed = prog(TWO_HALVES);
        let other = prog("    OUT AX");
        let pivot = PivotPoint::middle(&seed).unwrap();
        assert_eq!(
            crossover_cbi(&seed, &other, pivot),
            Err(CrossoverError::IncompatibleParents)
        );
    }

    #[test]
    fn crossover_detects_crossing_jump() {
        let seed = prog(TWO_HALVES);
        let pivot = PivotPoint::middle(&seed).unwrap();
        let mut body = seed.body.clone();
        body.insert(0, jmp("next"));
        let p = seed.with_body(body);
        assert_eq!(
            crossover_cbi(&p, &seed, pivot),
            Err(CrossoverError::PivotSplitsBlock {
                label: "next".into()
            })
        );
    }
}
