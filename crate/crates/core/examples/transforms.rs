//! Applies each mutation operator to a corpus program and shows what it
//! inserted. Every result still behaves exactly like the original.
//!
//! ```text
//! cargo run --example transforms -- corpus/countdown.vasm 3
//! ```

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use varigen::asm::{equivalent, execute, validate, DEFAULT_STEP_BUDGET};
use varigen::experiment::read_program;
use varigen::transforms::{apply, LabelAllocator, TransformKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/countdown.vasm")));
    let rng_seed: u64 = args.next().map_or(Ok(3), |s| s.parse())?;

    let seed = read_program(&path)?;
    let before = execute(&seed, DEFAULT_STEP_BUDGET)?;
    let mut labels = LabelAllocator::for_program("__x", &seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    for kind in TransformKind::ALL {
        let variant = apply(kind, &seed, &mut rng, &mut labels)?;
        let after = execute(&variant, DEFAULT_STEP_BUDGET)?;
        println!(
            "{kind}: {} -> {} statements, valid {}, equivalent {}, steps {} -> {}",
            seed.body.len(),
            variant.body.len(),
            validate(&variant).is_valid(),
            equivalent(&seed, &variant, DEFAULT_STEP_BUDGET)?,
            before.steps,
            after.steps,
        );
        for s in variant.body.iter().filter(|s| s.synthetic) {
            println!("    + {}", s.raw_text().trim());
        }
    }
    Ok(())
}
