//! Runs the alpha/beta comparison end to end and writes a run directory,
//! the same as `varigen compare`.
//!
//! ```text
//! cargo run --release --example compare -- corpus/quick.json /tmp/varigen-compare
//! ```

use std::path::PathBuf;

use varigen::experiment::{compare, read_program, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args_os().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/quick.json")));
    let cfg = ExperimentConfig::load(&config)?;
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| cfg.output_dir.clone());

    let seed = read_program(&cfg.seed_program)?;
    let cmp = compare(&cfg, &seed, &out)?;
    let v = &cmp.verdict;
    println!("written to {}", out.display());
    for (mode, s, t) in [
        ("alpha", &v.alpha, &v.alpha_initial_vs_final),
        ("beta", &v.beta, &v.beta_initial_vs_final),
    ] {
        println!(
            "{mode:>5}: mean J(source) {:.4} -> {:.4}, U={} p={:.3e} reject={}",
            s.initial_mean_similarity, s.final_mean_similarity, t.u, t.p_two_tailed, t.reject_null
        );
    }
    let evasion = cmp.beta.evasion.last().expect("at least generation 0");
    println!(
        " beta: best variant of the last generation trips {} scanners",
        evasion.detect_count
    );
    Ok(())
}
