use serde::Serialize;
use thiserror::Error;

use super::validate::check_operands;
use super::{Mnemonic, Operand, Program, Register};

/// Final state of a bounded run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MachineState {
    /// Indexed by [`Register::index`].
    pub registers: [i64; 4],
    pub zero_flag: bool,
    pub stack: Vec<i64>,
    /// Values written by OUT, in order.
    pub output: Vec<i64>,
    /// Executed instructions. Labels, comments and directives are free.
    pub steps: u64,
}

impl MachineState {
    pub fn register(&self, r: Register) -> i64 {
        self.registers[r.index()]
    }

    /// Observable outcome comparison: output trace, registers and zero flag.
    pub fn same_outcome(&self, other: &MachineState) -> bool {
        self.output == other.output
            && self.registers == other.registers
            && self.zero_flag == other.zero_flag
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("step budget of {budget} exhausted")]
    StepBudgetExceeded { budget: u64 },
    #[error("POP on empty stack at body index {index}")]
    StackUnderflow { index: usize },
    #[error("cannot execute body index {index}: {detail}")]
    Invalid { index: usize, detail: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Src {
    Reg(usize),
    Imm(i64),
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Skip,
    Mov(usize, Src),
    Add(usize, Src),
    Sub(usize, Src),
    Inc(usize),
    Dec(usize),
    Cmp(usize, Src),
    Jmp(usize),
    Jz(usize),
    Jnz(usize),
    Nop,
    Push(Src),
    Pop(usize),
    Out(Src),
    Hlt,
}

fn compile(p: &Program) -> Result<Vec<Op>, ExecError> {
    p.body
        .iter()
        .enumerate()
        .map(|(index, s)| {
            if !s.is_instruction() {
                return Ok(Op::Skip);
            }
            let invalid = |detail: String| ExecError::Invalid { index, detail };
            let m = s
                .mnemonic_kind()
                .ok_or_else(|| invalid(format!("unknown mnemonic {}", s.mnemonic())))?;
            check_operands(m, s).map_err(invalid)?;
            let ops: Vec<Operand> = s.operands().iter().map(|o| Operand::parse(o)).collect();
            let reg = |i: usize| match ops[i] {
                Operand::Reg(r) => r.index(),
                _ => unreachable!("operand shapes checked"),
            };
            let src = |i: usize| match ops[i] {
                Operand::Reg(r) => Src::Reg(r.index()),
                Operand::Imm(v) => Src::Imm(v),
                Operand::Label(_) => unreachable!("operand shapes checked"),
            };
            let target = || {
                let name = s.jump_target().unwrap_or_default();
                p.label_table
                    .get(name)
                    .copied()
                    .ok_or_else(|| invalid(format!("undefined label {name}")))
            };
            Ok(match m {
                Mnemonic::Mov => Op::Mov(reg(0), src(1)),
                Mnemonic::Add => Op::Add(reg(0), src(1)),
                Mnemonic::Sub => Op::Sub(reg(0), src(1)),
                Mnemonic::Inc => Op::Inc(reg(0)),
                Mnemonic::Dec => Op::Dec(reg(0)),
                Mnemonic::Cmp => Op::Cmp(reg(0), src(1)),
                Mnemonic::Jmp => Op::Jmp(target()?),
                Mnemonic::Jz => Op::Jz(target()?),
                Mnemonic::Jnz => Op::Jnz(target()?),
                Mnemonic::Nop => Op::Nop,
                Mnemonic::Push => Op::Push(src(0)),
                Mnemonic::Pop => Op::Pop(reg(0)),
                Mnemonic::Out => Op::Out(src(0)),
                Mnemonic::Hlt => Op::Hlt,
            })
        })
        .collect()
}

/// Runs the body from its first statement with all registers zeroed.
/// Execution ends at HLT or when control falls off the end of the body.
pub fn execute(p: &Program, step_budget: u64) -> Result<MachineState, ExecError> {
    let code = compile(p)?;
    let mut st = MachineState::default();
    let mut pc = 0usize;
    while let Some(&op) = code.get(pc) {
        if matches!(op, Op::Skip) {
            pc += 1;
            continue;
        }
        if st.steps == step_budget {
            return Err(ExecError::StepBudgetExceeded {
                budget: step_budget,
            });
        }
        st.steps += 1;
        let value = |st: &MachineState, s: Src| match s {
            Src::Reg(r) => st.registers[r],
            Src::Imm(v) => v,
        };
        let mut next = pc + 1;
        match op {
            Op::Skip | Op::Nop => {}
            Op::Mov(d, s) => st.registers[d] = value(&st, s),
            Op::Add(d, s) => st.registers[d] = st.registers[d].wrapping_add(value(&st, s)),
            Op::Sub(d, s) => st.registers[d] = st.registers[d].wrapping_sub(value(&st, s)),
            Op::Inc(d) => st.registers[d] = st.registers[d].wrapping_add(1),
            Op::Dec(d) => st.registers[d] = st.registers[d].wrapping_sub(1),
            Op::Cmp(a, s) => st.zero_flag = st.registers[a] == value(&st, s),
            Op::Jmp(t) => next = t,
            Op::Jz(t) => {
                if st.zero_flag {
                    next = t
                }
            }
            Op::Jnz(t) => {
                if !st.zero_flag {
                    next = t
                }
            }
            Op::Push(s) => {
                let v = value(&st, s);
                st.stack.push(v);
            }
            Op::Pop(d) => {
                st.registers[d] = st
                    .stack
                    .pop()
                    .ok_or(ExecError::StackUnderflow { index: pc })?;
            }
            Op::Out(s) => {
                let v = value(&st, s);
                st.output.push(v);
            }
            Op::Hlt => break,
        }
        pc = next;
    }
    Ok(st)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// One of the two programs could not be run to completion, so the pair has
/// no verdict.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{side:?} program not comparable: {error}")]
pub struct NotComparable {
    pub side: Side,
    pub error: ExecError,
}

/// Observational equivalence under a shared step budget.
pub fn equivalent(p: &Program, q: &Program, step_budget: u64) -> Result<bool, NotComparable> {
    let a = execute(p, step_budget).map_err(|error| NotComparable {
        side: Side::Left,
        error,
    })?;
    let b = execute(q, step_budget).map_err(|error| NotComparable {
        side: Side::Right,
        error,
    })?;
    Ok(a.same_outcome(&b))
}
