//! Byte-exact transform output for a fixed program, rng seed and label
//! prefix. A change here means variants from old seeds are no longer
//! reproducible, which should be deliberate.

use std::fs;
use std::path::Path;

use varigen::cli::{main_with, EXIT_OK};

fn check(kind: &str) {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let seed = root.join("corpus/countdown.vasm");
    let want = fs::read_to_string(root.join(format!("tests/fixtures/golden/countdown_{}.vasm", kind.to_lowercase()))).unwrap();
    let mut out = Vec::new();
    let code = main_with(
        ["varigen", "mutate", seed.to_str().unwrap(), "-t", kind, "--rng-seed", "5", "--label-prefix", "__g"],
        &mut out,
        &mut Vec::new(),
    );
    assert_eq!(code, EXIT_OK);
    assert_eq!(String::from_utf8(out).unwrap(), want, "{kind}");
}

#[test]
fn forced_jump() {
    check("FJ");
}

#[test]
fn untouchable_block() {
    check("UB");
}

#[test]
fn conditional_nonzero_jump() {
    check("CNZJ");
}

#[test]
fn conditional_zero_jump() {
    check("CZJ");
}

#[test]
fn fake_instruction() {
    check("FI");
}
