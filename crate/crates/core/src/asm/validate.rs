use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    Mnemonic, Operand, Program, Statement, StatementKind, GENERATED_LABEL_PREFIX,
    MAX_PROGRAM_BYTES,
};
use crate::transforms::{LabelRole, LabelAllocator};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    UndefinedLabel { label: String, index: usize },
    DuplicateLabel { label: String, index: usize },
    SizeLimitExceeded { bytes: usize, limit: usize },
    ForeignMnemonic { mnemonic: String, index: usize },
    BadOperands { index: usize, detail: String },
    /// An out-of-line block entry that live code can fall into.
    InterruptingLabel { label: String, index: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every structural problem with `p`. Violations are data, never errors.
pub fn validate(p: &Program) -> ValidityReport {
    let mut violations = Vec::new();

    let bytes = p.serialized_len();
    if bytes > MAX_PROGRAM_BYTES {
        violations.push(Violation::SizeLimitExceeded {
            bytes,
            limit: MAX_PROGRAM_BYTES,
        });
    }

    let mut defined: BTreeMap<&str, usize> = BTreeMap::new();
    for (index, s) in p.body.iter().enumerate() {
        if let Some(name) = s.label_name() {
            if defined.insert(name, index).is_some() {
                violations.push(Violation::DuplicateLabel {
                    label: name.to_string(),
                    index,
                });
            }
        }
    }

    for (index, s) in p.body.iter().enumerate() {
        if s.kind() != StatementKind::Instruction {
            continue;
        }
        let Some(m) = s.mnemonic_kind() else {
            violations.push(Violation::ForeignMnemonic {
                mnemonic: s.mnemonic().to_string(),
                index,
            });
            continue;
        };
        if let Err(detail) = check_operands(m, s) {
            violations.push(Violation::BadOperands { index, detail });
            continue;
        }
        if let Some(target) = s.jump_target() {
            if !defined.contains_key(target) {
                violations.push(Violation::UndefinedLabel {
                    label: target.to_string(),
                    index,
                });
            }
        }
    }

    let live = reachable(p);
    for (index, s) in p.body.iter().enumerate() {
        let Some(name) = s.label_name() else { continue };
        if !name.starts_with(GENERATED_LABEL_PREFIX)
            || LabelAllocator::role_of(name) != Some(LabelRole::Entry)
        {
            continue;
        }
        let falls_in = index == 0
            || (live[index - 1] && !p.body[index - 1].is_unconditional_transfer());
        if falls_in {
            violations.push(Violation::InterruptingLabel {
                label: name.to_string(),
                index,
            });
        }
    }

    ValidityReport { violations }
}

pub(crate) fn check_operands(m: Mnemonic, s: &Statement) -> Result<(), String> {
    let ops: Vec<Operand> = s.operands().iter().map(|o| Operand::parse(o)).collect();
    let want = |n: usize| -> Result<(), String> {
        if ops.len() == n {
            Ok(())
        } else {
            Err(format!("{} takes {n} operand(s), got {}", m.name(), ops.len()))
        }
    };
    let is_value = |o: &Operand| matches!(o, Operand::Reg(_) | Operand::Imm(_));
    match m {
        Mnemonic::Mov | Mnemonic::Add | Mnemonic::Sub | Mnemonic::Cmp => {
            want(2)?;
            if !matches!(ops[0], Operand::Reg(_)) {
                return Err(format!("{} needs a register destination", m.name()));
            }
            if !is_value(&ops[1]) {
                return Err(format!("{} source must be a register or integer", m.name()));
            }
        }
        Mnemonic::Inc | Mnemonic::Dec | Mnemonic::Pop => {
            want(1)?;
            if !matches!(ops[0], Operand::Reg(_)) {
                return Err(format!("{} needs a register", m.name()));
            }
        }
        Mnemonic::Push | Mnemonic::Out => {
            want(1)?;
            if !is_value(&ops[0]) {
                return Err(format!("{} needs a register or integer", m.name()));
            }
        }
        Mnemonic::Jmp | Mnemonic::Jz | Mnemonic::Jnz => {
            want(1)?;
            if !matches!(ops[0], Operand::Label(_)) {
                return Err(format!("{} needs a label", m.name()));
            }
        }
        Mnemonic::Nop | Mnemonic::Hlt => want(0)?,
    }
    Ok(())
}

/// Static reachability over body indices, starting at the first statement.
fn reachable(p: &Program) -> Vec<bool> {
    let n = p.body.len();
    let mut live = vec![false; n];
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        if i >= n || live[i] {
            continue;
        }
        live[i] = true;
        let s = &p.body[i];
        if let Some(&t) = s.jump_target().and_then(|t| p.label_table.get(t)) {
            stack.push(t);
        }
        if !s.is_unconditional_transfer() {
            stack.push(i + 1);
        }
    }
    live
}
