//! Parses a program, prints its normalized body and validity report, and
//! checks that serializing it reproduces the input.
//!
//! ```text
//! cargo run --example parse_roundtrip -- corpus/branches.vasm
//! ```

use std::fs;
use std::path::PathBuf;

use varigen::asm::{parse_program, serialize, validate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/branches.vasm")));
    let text = fs::read_to_string(&path)?;
    let program = parse_program(&text)?;

    println!(
        "{}: {} prologue, {} body, {} epilogue statements",
        path.display(),
        program.prologue.len(),
        program.body.len(),
        program.epilogue.len()
    );
    for line in program.normalized_body() {
        println!("  {line}");
    }
    println!("labels: {:?}", program.label_table);

    let report = validate(&program);
    println!("valid: {}", report.is_valid());
    for v in &report.violations {
        println!("  {v:?}");
    }

    let again = serialize(&program)?;
    let same = again == text || again.trim_end() == text.trim_end();
    println!("round trip identical: {same}");
    Ok(())
}
