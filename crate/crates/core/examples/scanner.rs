//! Builds a simulated signature-scanner ensemble from a seed and shows how
//! detections fall as the program is mutated.
//!
//! ```text
//! cargo run --example scanner
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use varigen::experiment::read_program;
use varigen::scanner::{
    build_ensemble, detect_count, DEFAULT_GRAM_LEN, DEFAULT_SCANNERS, DEFAULT_SIGNATURES_PER_SCANNER,
};
use varigen::transforms::{apply, LabelAllocator, TransformKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/workload_small.vasm");
    let seed = read_program(path.as_ref())?;
    let ensemble = build_ensemble(
        &seed,
        DEFAULT_SCANNERS,
        DEFAULT_SIGNATURES_PER_SCANNER,
        DEFAULT_GRAM_LEN,
        &mut ChaCha8Rng::seed_from_u64(1),
    )?;
    println!("{} scanners, first one looks for:", ensemble.len());
    for sig in &ensemble.scanners[0].signatures {
        println!("    {}", sig.gram.join(" | "));
    }

    let mut labels = LabelAllocator::for_program("__x", &seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut variant = seed.clone();
    println!("mutations  detections");
    for round in 0..=40 {
        if round % 5 == 0 {
            println!("{round:>9}  {:>10}", detect_count(&ensemble, &variant));
        }
        let kind = TransformKind::ALL[round % TransformKind::ALL.len()];
        variant = apply(kind, &variant, &mut rng, &mut labels)?;
    }
    Ok(())
}
