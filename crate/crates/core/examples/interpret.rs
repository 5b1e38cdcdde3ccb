//! Runs a program on the reference interpreter and prints what it emitted.
//!
//! ```text
//! cargo run --example interpret -- corpus/fib.vasm
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use varigen::asm::{execute, DEFAULT_STEP_BUDGET};
use varigen::experiment::read_program;

fn main() -> ExitCode {
    let path: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/fib.vasm")));
    let program = match read_program(&path) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::FAILURE;
        }
    };
    match execute(&program, DEFAULT_STEP_BUDGET) {
        Ok(state) => {
            println!("output: {:?}", state.output);
            println!("steps:  {}", state.steps);
            println!("regs:   {:?}  zf={}", state.registers, state.zero_flag);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            ExitCode::FAILURE
        }
    }
}
