//! Scores a small population of variants: Jaccard similarity to the source
//! and the novelty of each member relative to its peers.
//!
//! ```text
//! cargo run --example similarity
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use varigen::experiment::read_program;
use varigen::similarity::{jaccard, score_population, StatementSet};
use varigen::transforms::{apply, LabelAllocator, TransformKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/gcd.vasm");
    let seed = read_program(path.as_ref())?;
    let source = StatementSet::from_program(&seed);

    let mut labels = LabelAllocator::for_program("__x", &seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pop = Vec::new();
    for i in 0..6 {
        // Later members receive more mutations and drift further.
        let mut p = seed.clone();
        for k in 0..i * 2 {
            let kind = TransformKind::ALL[k % TransformKind::ALL.len()];
            p = apply(kind, &p, &mut rng, &mut labels)?;
        }
        pop.push(StatementSet::from_program(&p));
    }

    let scores = score_population(&pop, &source)?;
    println!("member  statements  J(source)  novelty");
    for (i, set) in pop.iter().enumerate() {
        println!(
            "{i:>6}  {:>10}  {:>9.4}  {:>7.4}",
            set.len(),
            scores.source_similarity[i],
            scores.novelty[i]
        );
    }
    println!("mean pairwise similarity {:.4}", scores.mean_pairwise_similarity);
    println!("J(first, last) = {:.4}", jaccard(&pop[0], &pop[5])?);
    Ok(())
}
