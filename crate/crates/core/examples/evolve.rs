//! Evolves variants of a corpus program in memory under either fitness mode
//! and prints a line every few generations.
//!
//! ```text
//! cargo run --release --example evolve -- beta 100
//! ```

use varigen::evolve::{EaConfig, Engine, FitnessMode};
use varigen::experiment::read_program;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mode: FitnessMode = match args.next().as_deref() {
        Some("alpha") => FitnessMode::Alpha,
        Some("beta") | None => FitnessMode::Beta,
        Some(other) => return Err(format!("unknown mode `{other}`, want alpha or beta").into()),
    };
    let generations: u32 = args.next().map_or(Ok(60), |s| s.parse())?;

    let seed = read_program(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/workload_small.vasm").as_ref())?;
    let cfg = EaConfig {
        fitness_mode: mode,
        generations,
        rng_seed: 42,
        ..EaConfig::default()
    };
    let mut engine = Engine::new(&seed, cfg)?;
    println!("gen  mean J(source)  best J(source)  pairwise  archive  best length");
    let show = |e: &Engine| {
        let r = e.record();
        println!(
            "{:>3}  {:>14.4}  {:>14.4}  {:>8.4}  {:>7}  {:>11}",
            r.generation,
            r.mean_source_similarity,
            r.best_source_similarity,
            r.mean_pairwise_similarity,
            r.archive_size,
            e.best().program.body.len()
        );
    };
    show(&engine);
    for _ in 0..generations {
        engine.step()?;
        if engine.generation() % 10 == 0 || engine.generation() == generations {
            show(&engine);
        }
    }
    println!("{} variants bred, all validated against the seed", engine.variants_produced());
    Ok(())
}
