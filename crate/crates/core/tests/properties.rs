//! Property tests over randomly generated terminating programs.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varigen::asm::{
    equivalent, execute, normalize_statement, parse_program, parse_statement, serialize, validate, Program,
    DEFAULT_STEP_BUDGET,
};
use varigen::evolve::{run, EaConfig, FitnessMode};
use varigen::scanner::{build_ensemble, detect_count};
use varigen::similarity::{jaccard, score_population, StatementSet};
use varigen::stats::mann_whitney_u;
use varigen::transforms::{apply, crossover_cbi, LabelAllocator, LabelRole, PivotPoint, TransformKind};

fn kind() -> impl Strategy<Value = TransformKind> {
    prop::sample::select(&TransformKind::ALL[..])
}

fn provenance_count(p: &Program) -> usize {
    p.body.iter().filter(|s| s.provenance.is_some()).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_then_parse_is_identity(p in common::program()) {
        let text = serialize(&p).unwrap();
        prop_assert_eq!(parse_program(&text).unwrap(), p);
    }

    #[test]
    fn normalization_is_idempotent(p in common::program()) {
        for s in &p.body {
            let once = normalize_statement(s);
            let again = parse_statement(&once).unwrap();
            prop_assert_eq!(again.len(), 1);
            prop_assert_eq!(normalize_statement(&again[0]), once);
        }
    }

    #[test]
    fn generated_programs_are_valid_and_halt(p in common::program()) {
        prop_assert!(validate(&p).is_valid());
        prop_assert!(execute(&p, DEFAULT_STEP_BUDGET).is_ok());
    }

    #[test]
    fn execution_is_deterministic(p in common::program()) {
        prop_assert_eq!(execute(&p, DEFAULT_STEP_BUDGET), execute(&p, DEFAULT_STEP_BUDGET));
    }

    #[test]
    fn equivalence_is_reflexive_and_symmetric(p in common::program(), q in common::program()) {
        prop_assert!(equivalent(&p, &p, DEFAULT_STEP_BUDGET).unwrap());
        prop_assert_eq!(
            equivalent(&p, &q, DEFAULT_STEP_BUDGET).unwrap(),
            equivalent(&q, &p, DEFAULT_STEP_BUDGET).unwrap()
        );
    }

    #[test]
    fn transforms_preserve_behavior(
        p in common::program(),
        kinds in prop::collection::vec(kind(), 1..12),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels = LabelAllocator::for_program("__p", &p).unwrap();
        let mut v = p.clone();
        for k in kinds {
            let next = apply(k, &v, &mut rng, &mut labels).unwrap();
            // Mutations only ever add statements and never touch lineage.
            prop_assert!(next.body.len() > v.body.len());
            prop_assert_eq!(provenance_count(&next), provenance_count(&p));
            v = next;
            let report = validate(&v);
            prop_assert!(report.is_valid(), "{:?}\n{}", report.violations, v.to_text());
            prop_assert!(equivalent(&p, &v, DEFAULT_STEP_BUDGET).unwrap(), "{}", v.to_text());
        }
    }

    #[test]
    fn generated_labels_are_fresh_and_typed(
        p in common::program(),
        kinds in prop::collection::vec(kind(), 1..10),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels = LabelAllocator::for_program("__p", &p).unwrap();
        let mut v = p.clone();
        for k in kinds {
            v = apply(k, &v, &mut rng, &mut labels).unwrap();
        }
        for name in v.label_table.keys() {
            if p.label_table.contains_key(name) {
                continue;
            }
            prop_assert!(name.starts_with("__p"), "{}", name);
            prop_assert!(LabelAllocator::role_of(name).is_some(), "{}", name);
        }
        // Every original label survives and still names the same statement.
        for name in p.label_table.keys() {
            prop_assert!(v.label_table.contains_key(name));
        }
    }

    #[test]
    fn crossover_preserves_behavior_and_lineage(
        p in common::program(),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels = LabelAllocator::for_program("__p", &p).unwrap();
        let mut variant = |rng: &mut ChaCha8Rng| {
            let mut v = p.clone();
            for _ in 0..rng.gen_range(0..6) {
                let k = TransformKind::ALL[rng.gen_range(0..5)];
                v = apply(k, &v, rng, &mut labels).unwrap();
            }
            v
        };
        let (a, b) = (variant(&mut rng), variant(&mut rng));
        let Ok(pivot) = PivotPoint::middle(&p) else { return Ok(()) };
        let (c1, c2) = crossover_cbi(&a, &b, pivot).unwrap();
        prop_assert_eq!(provenance_count(&c1) + provenance_count(&c2), 2 * provenance_count(&p));
        for c in [&c1, &c2] {
            prop_assert!(validate(c).is_valid(), "{}", c.to_text());
            prop_assert!(equivalent(&p, c, DEFAULT_STEP_BUDGET).unwrap(), "{}", c.to_text());
        }
    }

    #[test]
    fn middle_pivot_is_closest_valid_offset(p in common::program()) {
        let len = p.body.len() as u32;
        let valid: Vec<u32> = (1..len).filter(|&s| PivotPoint::new(&p, s).is_ok()).collect();
        match PivotPoint::middle(&p) {
            Ok(pivot) => {
                let mid = len / 2;
                let best = valid.iter().copied().min_by_key(|&s| (s.abs_diff(mid), s));
                prop_assert_eq!(Some(pivot.seed_offset()), best);
            }
            Err(_) => prop_assert!(valid.is_empty()),
        }
    }

    #[test]
    fn jaccard_is_symmetric_and_bounded(a in prop::collection::vec("[A-E]{1,2}", 0..12), b in prop::collection::vec("[A-E]{1,2}", 1..12)) {
        let (sa, sb) = (StatementSet::from_items(a), StatementSet::from_items(b));
        let ab = jaccard(&sa, &sb).unwrap();
        prop_assert_eq!(ab, jaccard(&sb, &sa).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(jaccard(&sb, &sb).unwrap(), 1.0);
        // Oracle over plain sets.
        let xa: std::collections::BTreeSet<&str> = sa.iter().collect();
        let xb: std::collections::BTreeSet<&str> = sb.iter().collect();
        let want = xa.intersection(&xb).count() as f64 / xa.union(&xb).count() as f64;
        prop_assert!((ab - want).abs() < 1e-12);
    }

    #[test]
    fn novelty_is_nonnegative_and_clones_score_zero(sets in prop::collection::vec(prop::collection::vec("[A-F]", 1..6), 2..8)) {
        let pop: Vec<StatementSet> = sets.into_iter().map(StatementSet::from_items).collect();
        let scores = score_population(&pop, &pop[0]).unwrap();
        prop_assert!(scores.novelty.iter().all(|&x| x >= 0.0));
        let clones = vec![pop[0].clone(); pop.len()];
        let flat = score_population(&clones, &pop[0]).unwrap();
        prop_assert!(flat.novelty.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn u_statistics_match_pair_counting(
        a in prop::collection::vec(0u8..6, 1..25),
        b in prop::collection::vec(0u8..6, 1..25),
    ) {
        let fa: Vec<f64> = a.iter().map(|&x| f64::from(x)).collect();
        let fb: Vec<f64> = b.iter().map(|&x| f64::from(x)).collect();
        let r = mann_whitney_u(&fa, &fb).unwrap();
        // U1 counts pairs where the first sample wins, ties as one half.
        let mut want = 0.0;
        for x in &fa {
            for y in &fb {
                want += if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 };
            }
        }
        prop_assert!((r.u1 - want).abs() < 1e-9);
        prop_assert!((r.u1 + r.u2 - (fa.len() * fb.len()) as f64).abs() < 1e-9);
        prop_assert_eq!(r.u, r.u1.max(r.u2));
        prop_assert!((0.0..=1.0).contains(&r.p_two_tailed));
        // Swapping the samples mirrors the statistic.
        let s = mann_whitney_u(&fb, &fa).unwrap();
        prop_assert!((s.u1 - r.u2).abs() < 1e-9);
        prop_assert!((s.p_two_tailed - r.p_two_tailed).abs() < 1e-12);
    }

    #[test]
    fn fewer_signatures_never_detect_more(p in common::program(), q in common::program(), seed in any::<u64>()) {
        let Ok(mut e) = build_ensemble(&p, 6, 2, 2, &mut ChaCha8Rng::seed_from_u64(seed)) else { return Ok(()) };
        prop_assert_eq!(detect_count(&e, &p), 6);
        let before = detect_count(&e, &q);
        for s in &mut e.scanners {
            s.signatures.pop();
        }
        prop_assert!(detect_count(&e, &q) <= before);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn evolution_is_reproducible(p in common::program(), seed in any::<u64>(), beta in any::<bool>()) {
        let cfg = EaConfig {
            population_size: 6,
            generations: 4,
            rng_seed: seed,
            fitness_mode: if beta { FitnessMode::Beta } else { FitnessMode::Alpha },
            ..EaConfig::default()
        };
        let a = run(&p, cfg.clone()).unwrap();
        let b = run(&p, cfg).unwrap();
        prop_assert_eq!(&a.final_source_similarity, &b.final_source_similarity);
        prop_assert_eq!(a.variants_produced, 24);
        let texts = |r: &varigen::evolve::RunResult| r.final_population.iter().map(|c| c.program.to_text()).collect::<Vec<_>>();
        prop_assert_eq!(texts(&a), texts(&b));
        prop_assert_eq!(a.final_population.len(), 6);
        for c in &a.final_population {
            prop_assert!(equivalent(&p, &c.program, DEFAULT_STEP_BUDGET).unwrap());
        }
    }
}

#[test]
fn label_roles_parse() {
    assert_eq!(LabelAllocator::role_of("__vL12"), Some(LabelRole::Entry));
    assert_eq!(LabelAllocator::role_of("__vR0"), Some(LabelRole::Return));
    assert_eq!(LabelAllocator::role_of("__xyzU3"), Some(LabelRole::Untouchable));
    assert_eq!(LabelAllocator::role_of("__vK9"), Some(LabelRole::Skip));
    assert_eq!(LabelAllocator::role_of("__vQ1"), None);
    assert_eq!(LabelAllocator::role_of("vL1"), None);
    assert_eq!(LabelAllocator::role_of("__vL"), None);
}
