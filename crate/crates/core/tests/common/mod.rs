//! Random terminating programs for property tests.

#![allow(dead_code)]

use proptest::prelude::*;
use varigen::asm::{parse_program, Program};

const REGS: [&str; 4] = ["AX", "BX", "CX", "DX"];

fn reg() -> impl Strategy<Value = &'static str> {
    prop::sample::select(&REGS[..])
}

fn imm() -> impl Strategy<Value = i64> {
    prop_oneof![-50i64..50, Just(0), Just(i64::MAX), Just(i64::MIN)]
}

fn value() -> impl Strategy<Value = String> {
    prop_oneof![reg().prop_map(String::from), imm().prop_map(|v| v.to_string())]
}

/// One jump-free line. `CX` is left alone so it can count loops.
fn straight() -> impl Strategy<Value = Vec<String>> {
    let dst = prop::sample::select(&["AX", "BX", "DX"][..]);
    prop_oneof![
        (prop::sample::select(&["MOV", "ADD", "SUB", "CMP"][..]), dst.clone(), value())
            .prop_map(|(m, d, v)| vec![format!("    {m} {d}, {v}")]),
        (prop::sample::select(&["INC", "DEC"][..]), dst.clone()).prop_map(|(m, d)| vec![format!("    {m} {d}")]),
        (value(), dst).prop_map(|(v, d)| vec![format!("    PUSH {v}"), format!("    POP {d}")]),
        reg().prop_map(|r| vec![format!("    OUT {r}")]),
        Just(vec!["    NOP".to_string()]),
    ]
}

fn straight_run(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(straight(), 1..=max).prop_map(|v| v.concat())
}

#[derive(Clone, Debug)]
enum Block {
    Plain(Vec<String>),
    Loop(i64, Vec<String>),
    Branch(&'static str, i64, &'static str, Vec<String>),
}

fn block() -> impl Strategy<Value = Block> {
    prop_oneof![
        3 => straight_run(4).prop_map(Block::Plain),
        1 => (1i64..5, straight_run(3)).prop_map(|(n, b)| Block::Loop(n, b)),
        1 => (
            prop::sample::select(&["AX", "BX", "DX"][..]),
            -3i64..3,
            prop::sample::select(&["JZ", "JNZ"][..]),
            straight_run(3)
        )
            .prop_map(|(r, v, j, b)| Block::Branch(r, v, j, b)),
    ]
}

/// Body lines of a program that always halts well inside the step budget.
pub fn body_lines() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(block(), 1..8).prop_map(|blocks| {
        let mut out = Vec::new();
        for (i, b) in blocks.into_iter().enumerate() {
            match b {
                Block::Plain(lines) => out.extend(lines),
                Block::Loop(n, lines) => {
                    out.push(format!("    MOV CX, {n}"));
                    out.push(format!("loop{i}:"));
                    out.extend(lines);
                    out.push("    DEC CX".into());
                    out.push("    CMP CX, 0".into());
                    out.push(format!("    JNZ loop{i}"));
                }
                Block::Branch(r, v, j, lines) => {
                    out.push(format!("    CMP {r}, {v}"));
                    out.push(format!("    {j} skip{i}"));
                    out.extend(lines);
                    out.push(format!("skip{i}:"));
                }
            }
        }
        out.push("    OUT AX".into());
        out
    })
}

pub fn wrap(lines: &[String]) -> String {
    format!(
        "; generated\n.MODEL TINY\n.CODE\n;;BODY-START\n{}\n;;BODY-END\n.END\n",
        lines.join("\n")
    )
}

pub fn program() -> impl Strategy<Value = Program> {
    body_lines().prop_map(|l| parse_program(&wrap(&l)).expect("generated program parses"))
}
