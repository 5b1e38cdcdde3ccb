//! The assembly dialect: statements, programs, parsing, validation and a
//! bounded interpreter used as the semantic-equivalence oracle.
//!
//! A program file is split into three sections by two marker directives:
//!
//! ```text
//! .MODEL TINY          ; prologue (never touched by transforms)
//! ;;BODY-START
//!     MOV AX, 5        ; body
//!     OUT AX
//! ;;BODY-END
//! .END                 ; epilogue
//! ```
//!
//! Every body statement parsed from a seed gets a provenance ID (its index in
//! the seed body). Transforms carry those IDs along, which is what makes
//! homologous crossover possible.

mod exec;
mod parse;
mod validate;

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exec::{equivalent, execute, ExecError, MachineState, NotComparable, Side};
pub use parse::{parse_program, parse_program_unchecked, parse_statement};
pub use validate::{validate, ValidityReport, Violation};

/// Hard cap on the serialized size of a program, in bytes.
pub const MAX_PROGRAM_BYTES: usize = 65_536;

pub const DEFAULT_STEP_BUDGET: u64 = 100_000;

pub const BODY_START: &str = ";;BODY-START";
pub const BODY_END: &str = ";;BODY-END";

/// Labels beginning with this prefix are reserved for transform-issued labels.
pub const GENERATED_LABEL_PREFIX: &str = "__";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Register {
    AX,
    BX,
    CX,
    DX,
}

impl Register {
    pub const ALL: [Register; 4] = [Register::AX, Register::BX, Register::CX, Register::DX];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Register::AX => "AX",
            Register::BX => "BX",
            Register::CX => "CX",
            Register::DX => "DX",
        }
    }
}

impl FromStr for Register {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Register::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or(())
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The fixed instruction set of the dialect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mnemonic {
    Mov,
    Add,
    Sub,
    Inc,
    Dec,
    Cmp,
    Jmp,
    Jz,
    Jnz,
    Nop,
    Push,
    Pop,
    Out,
    Hlt,
}

impl Mnemonic {
    pub const ALL: [Mnemonic; 14] = [
        Mnemonic::Mov,
        Mnemonic::Add,
        Mnemonic::Sub,
        Mnemonic::Inc,
        Mnemonic::Dec,
        Mnemonic::Cmp,
        Mnemonic::Jmp,
        Mnemonic::Jz,
        Mnemonic::Jnz,
        Mnemonic::Nop,
        Mnemonic::Push,
        Mnemonic::Pop,
        Mnemonic::Out,
        Mnemonic::Hlt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mnemonic::Mov => "MOV",
            Mnemonic::Add => "ADD",
            Mnemonic::Sub => "SUB",
            Mnemonic::Inc => "INC",
            Mnemonic::Dec => "DEC",
            Mnemonic::Cmp => "CMP",
            Mnemonic::Jmp => "JMP",
            Mnemonic::Jz => "JZ",
            Mnemonic::Jnz => "JNZ",
            Mnemonic::Nop => "NOP",
            Mnemonic::Push => "PUSH",
            Mnemonic::Pop => "POP",
            Mnemonic::Out => "OUT",
            Mnemonic::Hlt => "HLT",
        }
    }

    pub fn is_jump(self) -> bool {
        matches!(self, Mnemonic::Jmp | Mnemonic::Jz | Mnemonic::Jnz)
    }
}

impl FromStr for Mnemonic {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mnemonic::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or(())
    }
}

/// A decoded operand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand<'a> {
    Reg(Register),
    Imm(i64),
    Label(&'a str),
}

impl<'a> Operand<'a> {
    /// Classifies an operand token. Anything that is neither a register nor an
    /// integer is treated as a label reference.
    pub fn parse(token: &'a str) -> Operand<'a> {
        if let Ok(r) = token.parse::<Register>() {
            return Operand::Reg(r);
        }
        if let Some(v) = parse_int(token) {
            return Operand::Imm(v);
        }
        Operand::Label(token)
    }
}

pub(crate) fn parse_int(token: &str) -> Option<i64> {
    let (neg, digits) = match token.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, token),
    };
    let (radix, digits) = match digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")) {
        Some(hex) => (16, hex),
        None => (10, digits),
    };
    if digits.is_empty() || !digits.chars().all(|c| c.is_digit(radix)) {
        return None;
    }
    // Magnitude of i64::MIN does not fit in i64.
    let magnitude = i128::from_str_radix(digits, radix).ok()?;
    i64::try_from(if neg { -magnitude } else { magnitude }).ok()
}

pub(crate) fn is_label_name(s: &str) -> bool {
    let mut bytes = s.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatementKind {
    Instruction,
    LabelDefinition,
    Directive,
    CommentOnly,
}

/// Immutable text of a statement, shared between clones.
#[derive(Debug, PartialEq, Eq)]
struct Text {
    kind: StatementKind,
    mnemonic: String,
    operands: Vec<String>,
    raw_text: String,
    op: Option<Mnemonic>,
    normalized: Arc<str>,
    key: u64,
}

/// One line-level unit of a program.
///
/// The text is immutable and cheap to clone; only the lineage fields are
/// per-copy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    text: Arc<Text>,
    /// Seed-statement ID this statement descends from.
    pub provenance: Option<u32>,
    /// Set for statements inserted by a transform.
    pub synthetic: bool,
}

impl Statement {
    /// `mnemonic` is upper-cased for instructions and directives and empty
    /// otherwise. A label definition carries its name as the only operand.
    pub fn new(
        kind: StatementKind,
        mnemonic: String,
        operands: Vec<String>,
        raw_text: String,
    ) -> Statement {
        let op = match kind {
            StatementKind::Instruction => mnemonic.parse().ok(),
            _ => None,
        };
        let normalized: Arc<str> = normalize_parts(kind, &mnemonic, &operands).into();
        let key = text_key(&normalized);
        Statement {
            text: Arc::new(Text {
                kind,
                mnemonic,
                operands,
                raw_text,
                op,
                normalized,
                key,
            }),
            provenance: None,
            synthetic: false,
        }
    }

    /// A transform-inserted instruction with canonical text.
    pub fn synthetic_instruction(mnemonic: Mnemonic, operands: &[&str]) -> Statement {
        let operands: Vec<String> = operands.iter().map(|s| s.to_string()).collect();
        let mut raw_text = format!("    {}", mnemonic.name());
        if !operands.is_empty() {
            raw_text.push(' ');
            raw_text.push_str(&operands.join(", "));
        }
        let mut s = Statement::new(
            StatementKind::Instruction,
            mnemonic.name().to_string(),
            operands,
            raw_text,
        );
        s.synthetic = true;
        s
    }

    pub fn synthetic_label(name: &str) -> Statement {
        let mut s = Statement::new(
            StatementKind::LabelDefinition,
            String::new(),
            vec![name.to_string()],
            format!("{name}:"),
        );
        s.synthetic = true;
        s
    }

    /// Same statement with different source text.
    pub fn with_raw_text(&self, raw_text: String) -> Statement {
        let t = &self.text;
        Statement {
            text: Arc::new(Text {
                kind: t.kind,
                mnemonic: t.mnemonic.clone(),
                operands: t.operands.clone(),
                raw_text,
                op: t.op,
                normalized: t.normalized.clone(),
                key: t.key,
            }),
            ..self.clone()
        }
    }

    pub fn kind(&self) -> StatementKind {
        self.text.kind
    }

    pub fn mnemonic(&self) -> &str {
        &self.text.mnemonic
    }

    pub fn operands(&self) -> &[String] {
        &self.text.operands
    }

    /// The line as written, comment included.
    pub fn raw_text(&self) -> &str {
        &self.text.raw_text
    }

    pub fn is_instruction(&self) -> bool {
        self.text.kind == StatementKind::Instruction
    }

    pub fn mnemonic_kind(&self) -> Option<Mnemonic> {
        self.text.op
    }

    /// Name defined by a label-definition statement.
    pub fn label_name(&self) -> Option<&str> {
        match self.text.kind {
            StatementKind::LabelDefinition => self.text.operands.first().map(String::as_str),
            _ => None,
        }
    }

    /// Target of a JMP/JZ/JNZ.
    pub fn jump_target(&self) -> Option<&str> {
        match self.text.op {
            Some(m) if m.is_jump() => self.text.operands.first().map(String::as_str),
            _ => None,
        }
    }

    /// True for JMP and HLT: control never falls through to the next line.
    pub fn is_unconditional_transfer(&self) -> bool {
        matches!(self.text.op, Some(Mnemonic::Jmp | Mnemonic::Hlt))
    }

    /// Statements that take part in similarity sets and signatures.
    pub fn is_significant(&self) -> bool {
        matches!(
            self.text.kind,
            StatementKind::Instruction | StatementKind::LabelDefinition
        )
    }

    /// Canonical text: upper-cased, single-spaced, comment stripped.
    pub fn normalized(&self) -> &str {
        &self.text.normalized
    }

    /// Shared handle to the canonical text.
    pub fn normalized_shared(&self) -> Arc<str> {
        self.text.normalized.clone()
    }

    /// Hash of the canonical text, fixed within a process.
    pub fn normalized_key(&self) -> u64 {
        self.text.key
    }

    /// Copy of this statement that no longer carries seed provenance.
    pub(crate) fn as_synthetic_copy(&self) -> Statement {
        Statement {
            provenance: None,
            synthetic: true,
            ..self.clone()
        }
    }
}

pub(crate) fn text_key(s: &str) -> u64 {
    let mut h = DefaultHasher::new();
    s.hash(&mut h);
    h.finish()
}

fn normalize_parts(kind: StatementKind, mnemonic: &str, operands: &[String]) -> String {
    match kind {
        StatementKind::Instruction | StatementKind::Directive => {
            let mut out = mnemonic.to_ascii_uppercase();
            for (i, o) in operands.iter().enumerate() {
                out.push_str(if i == 0 { " " } else { ", " });
                match parse_int(o) {
                    Some(v) => out.push_str(&v.to_string()),
                    None => out.extend(o.chars().map(|c| c.to_ascii_uppercase())),
                }
            }
            out
        }
        StatementKind::LabelDefinition => format!("{}:", operands[0].to_ascii_uppercase()),
        StatementKind::CommentOnly => String::new(),
    }
}


/// Pure normalization of a single statement.
pub fn normalize_statement(s: &Statement) -> String {
    s.normalized().to_string()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing {0} marker")]
    MissingBodyMarker(&'static str),
    #[error("line {line}: jump to undefined label `{label}`")]
    UndefinedLabel { label: String, line: usize },
    #[error("line {line}: label `{label}` defined more than once")]
    DuplicateLabel { label: String, line: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("serialized program is {bytes} bytes, limit is {MAX_PROGRAM_BYTES}")]
pub struct SizeLimitExceeded {
    pub bytes: usize,
}

/// A parsed assembly unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub prologue: Vec<Statement>,
    pub body: Vec<Statement>,
    pub epilogue: Vec<Statement>,
    /// Label name to body index. The first definition wins when duplicates exist.
    pub label_table: BTreeMap<String, usize>,
}

impl Program {
    /// Builds a program without checking label integrity.
    pub fn from_sections(
        prologue: Vec<Statement>,
        body: Vec<Statement>,
        epilogue: Vec<Statement>,
    ) -> Program {
        let label_table = build_label_table(&body);
        Program {
            prologue,
            body,
            epilogue,
            label_table,
        }
    }

    /// Same sections, different body.
    pub fn with_body(&self, body: Vec<Statement>) -> Program {
        Program::from_sections(self.prologue.clone(), body, self.epilogue.clone())
    }

    /// Checks that every label is defined once and every jump resolves.
    /// Line numbers in errors are 1-based body indices.
    pub fn check_labels(&self) -> Result<(), ParseError> {
        let mut seen = BTreeMap::new();
        for (i, s) in self.body.iter().enumerate() {
            if let Some(name) = s.label_name() {
                if seen.insert(name, i).is_some() {
                    return Err(ParseError::DuplicateLabel {
                        label: name.to_string(),
                        line: i + 1,
                    });
                }
            }
        }
        for (i, s) in self.body.iter().enumerate() {
            if let Some(target) = s.jump_target() {
                if !seen.contains_key(target) {
                    return Err(ParseError::UndefinedLabel {
                        label: target.to_string(),
                        line: i + 1,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn instruction_count(&self) -> usize {
        self.body.iter().filter(|s| s.is_instruction()).count()
    }

    /// Normalized significant body statements, in order.
    pub fn normalized_body(&self) -> Vec<&str> {
        self.body
            .iter()
            .filter(|s| s.is_significant())
            .map(Statement::normalized)
            .collect()
    }

    /// Byte length of `serialize` output, without building the string.
    pub fn serialized_len(&self) -> usize {
        self.lines().map(|l| l.len() + 1).sum()
    }

    fn lines(&self) -> impl Iterator<Item = &str> {
        self.prologue
            .iter()
            .chain(&self.body)
            .chain(&self.epilogue)
            .map(Statement::raw_text)
    }

    /// Text form, one statement per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.serialized_len());
        for line in self.lines() {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

pub(crate) fn build_label_table(body: &[Statement]) -> BTreeMap<String, usize> {
    let mut table = BTreeMap::new();
    for (i, s) in body.iter().enumerate() {
        if let Some(name) = s.label_name() {
            table.entry(name.to_string()).or_insert(i);
        }
    }
    table
}

/// Serializes a program, refusing anything over [`MAX_PROGRAM_BYTES`].
pub fn serialize(p: &Program) -> Result<String, SizeLimitExceeded> {
    let bytes = p.serialized_len();
    if bytes > MAX_PROGRAM_BYTES {
        return Err(SizeLimitExceeded { bytes });
    }
    Ok(p.to_text())
}
