//! Breeds two variants of the same seed with code block interchange: each
//! child takes the upper region of one parent and the lower region of the
//! other, split at a fixed seed offset.
//!
//! ```text
//! cargo run --example crossover
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use varigen::asm::{equivalent, DEFAULT_STEP_BUDGET};
use varigen::experiment::read_program;
use varigen::transforms::{apply, crossover_cbi, LabelAllocator, PivotPoint, TransformKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/stack_reverse.vasm");
    let seed = read_program(path.as_ref())?;
    let pivot = PivotPoint::middle(&seed)?;
    println!("seed body {} statements, pivot at offset {}", seed.body.len(), pivot.seed_offset());

    let mut labels = LabelAllocator::for_program("__x", &seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut p = seed.clone();
    let mut q = seed.clone();
    for _ in 0..4 {
        p = apply(TransformKind::FI, &p, &mut rng, &mut labels)?;
        q = apply(TransformKind::UB, &q, &mut rng, &mut labels)?;
    }

    let (c1, c2) = crossover_cbi(&p, &q, pivot)?;
    for (name, prog) in [("p", &p), ("q", &q), ("upper p + lower q", &c1), ("upper q + lower p", &c2)] {
        println!(
            "{name:>18}: {:3} statements, equivalent to seed: {}",
            prog.body.len(),
            equivalent(&seed, prog, DEFAULT_STEP_BUDGET)?
        );
    }
    Ok(())
}
