use super::*;
use crate::exponents::SourceSpec;
use crate::rng::trial_rng;
use crate::types::{Alphabet, Pmf, TypeVector};
use proptest::prelude::*;

fn binary(k: u64, n: u64, delta: f64) -> CodeConfig {
    CodeConfig::new(
        SourceSpec::new(Pmf::uniform(2)),
        Alphabet::new(2).unwrap(),
        k,
        n,
        vec![TypeVector::new(vec![n / 2, n - n / 2]).unwrap()],
        &AssignmentRule::AllFirst,
        delta,
    )
    .unwrap()
}

fn ternary_single() -> CodeConfig {
    CodeConfig::new(
        SourceSpec::new(Pmf::uniform(3)),
        Alphabet::new(2).unwrap(),
        1,
        4,
        vec![TypeVector::new(vec![2, 2]).unwrap()],
        &AssignmentRule::AllFirst,
        0.01,
    )
    .unwrap()
}

#[test]
fn message_order_groups_types() {
    let cfg = binary(2, 8, 0.01);
    let order = message_order(&cfg);
    assert_eq!(order.len(), 4);
    let types: Vec<usize> = order.iter().map(|m| m.0).collect();
    assert_eq!(types, vec![0, 1, 1, 2]);
    assert_eq!(order[1].1, vec![0, 1]);
    assert_eq!(order[2].1, vec![1, 0]);
}

#[test]
fn both_modes_respect_distances() {
    let cfg = binary(2, 8, 0.01);
    for mode in [ConstructMode::Enumerate, ConstructMode::Rejection] {
        for s in 0..20 {
            let cb = construct(&cfg, &mut trial_rng(7, s), mode).unwrap();
            assert_eq!(cb.len(), 4);
            cb.check_types(&cfg).unwrap();
            let rep = verify_min_distance(&cb, &cfg);
            assert!(rep.ok, "{:?}", rep.violations);
            assert_eq!(rep.pairs_checked, 6);
        }
    }
}

#[test]
fn construction_is_deterministic() {
    let cfg = binary(2, 8, 0.01);
    let a = construct(&cfg, &mut trial_rng(3, 1), ConstructMode::Enumerate).unwrap();
    let b = construct(&cfg, &mut trial_rng(3, 1), ConstructMode::Enumerate).unwrap();
    assert_eq!(a, b);
}

#[test]
fn trace_records_shrinking_sets() {
    let cfg = binary(2, 8, 0.01);
    let (_, trace) =
        construct_traced(&cfg, &mut trial_rng(1, 0), ConstructMode::Enumerate, None).unwrap();
    assert_eq!(trace.feasible_sizes.len(), 3);
    assert_eq!(trace.feasible_sizes[0], vec![70]);
    let mid = &trace.feasible_sizes[1];
    assert_eq!(mid.len(), 2);
    assert!(mid[1] < mid[0] && mid[0] < 70);
}

#[test]
fn infinite_threshold_exhausts_class() {
    let cfg = binary(2, 4, 0.0)
        .with_uniform_threshold(f64::INFINITY)
        .unwrap();
    let r = construct(&cfg, &mut trial_rng(0, 0), ConstructMode::Enumerate);
    assert!(matches!(
        r,
        Err(Error::EmptyFeasibleSet { class: 1, index: 0 })
    ));
    let r = construct(&cfg, &mut trial_rng(0, 0), ConstructMode::Rejection);
    assert!(matches!(r, Err(Error::EmptyFeasibleSet { .. })));
}

#[test]
fn unconstrained_codewords_may_collide() {
    let cfg = ternary_single()
        .with_uniform_threshold(f64::NEG_INFINITY)
        .unwrap();
    let j = joint_census(&cfg, 5, 3000, &[0], &[1], ConstructMode::Enumerate).unwrap();
    assert_eq!(j.violations, 0);
    assert_eq!(j.failures, 0);
    // 36 equally likely pairs, including the 6 where both codewords agree.
    assert_eq!(j.counts.len(), 36);
}

#[test]
fn first_codeword_is_uniform() {
    let cfg = binary(2, 8, 0.01);
    let c = marginal_census(&cfg, 11, 20_000, &[0, 0], ConstructMode::Enumerate).unwrap();
    let support = crate::types::type_class_sequences(&cfg.palette()[0]);
    assert_eq!(c.failures, 0);
    assert!(c.total_variation_from_uniform(&support) < 0.05);
}

#[test]
fn discarded_count_matches_scan() {
    let cfg = ternary_single();
    let reps: Vec<Vec<Symbol>> = (0..3).map(|_| vec![0, 0, 1, 1]).collect();
    let by_types = discarded_count(&cfg, 0).unwrap();
    let by_scan = discarded_count_by_representative(&cfg, 0, &reps).unwrap();
    assert_eq!(by_types, by_scan);
    // Each representative excludes itself and its complement.
    assert_eq!(by_types, 6u32.into());
}

#[test]
fn feasibility_report_shape() {
    let cfg = binary(2, 8, 0.01);
    let rep = feasibility_check(&cfg).unwrap();
    assert_eq!(rep.classes.len(), 1);
    let c = &rep.classes[0];
    assert_eq!(c.class_size, "70");
    assert!(rep.floor_vacuous);
    assert!(c.satisfied);
    let free = cfg.with_uniform_threshold(f64::NEG_INFINITY).unwrap();
    let rep = feasibility_check(&free).unwrap();
    assert_eq!(rep.classes[0].discarded, "0");
    assert_eq!(rep.classes[0].achievable_delta, f64::INFINITY);
}

#[test]
fn text_round_trip() {
    let cfg = binary(2, 8, 0.01);
    let cb = construct(&cfg, &mut trial_rng(9, 0), ConstructMode::Enumerate).unwrap();
    let text = cb.to_text().unwrap();
    assert!(text.starts_with("rgv-codebook 1\n"));
    let back = Codebook::from_text(&text).unwrap();
    assert_eq!(back, cb);
    back.check_types(&cfg).unwrap();
}

#[test]
fn text_infinite_thresholds() {
    let cfg = binary(1, 2, 0.0)
        .with_thresholds(vec![f64::NEG_INFINITY, f64::INFINITY])
        .unwrap();
    let cb = Codebook::from_codewords(&cfg, vec![vec![0, 1], vec![1, 0]], Some(3)).unwrap();
    let back = Codebook::from_text(&cb.to_text().unwrap()).unwrap();
    assert_eq!(
        back.header().thresholds,
        vec![f64::NEG_INFINITY, f64::INFINITY]
    );
    assert_eq!(back.header().seed, Some(3));
}

#[test]
fn text_errors_name_the_line() {
    let cfg = binary(1, 2, 0.0);
    let cb = Codebook::from_codewords(&cfg, vec![vec![0, 1], vec![1, 0]], None).unwrap();
    let text = cb.to_text().unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[11] = lines[11].replacen(' ', " 0x", 1);
    let bad = lines.join("\n");
    match Codebook::from_text(&bad) {
        Err(Error::CodebookFormat { line, .. }) => assert_eq!(line, 12),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        Codebook::from_text("garbage"),
        Err(Error::CodebookFormat { line: 1, .. })
    ));
    let truncated: String = text.lines().take(11).collect::<Vec<_>>().join("\n");
    assert!(Codebook::from_text(&truncated).is_err());
}

#[test]
fn wrong_type_codeword_rejected() {
    let cfg = binary(1, 2, 0.0);
    assert!(Codebook::from_codewords(&cfg, vec![vec![0, 0], vec![1, 0]], None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counts_agree_for_random_thresholds(th in -0.8f64..0.1, c0 in 1u64..4) {
        let cfg = CodeConfig::new(
            SourceSpec::new(Pmf::uniform(2)),
            Alphabet::new(2).unwrap(),
            2,
            5,
            vec![TypeVector::new(vec![c0, 5 - c0]).unwrap()],
            &AssignmentRule::AllFirst,
            0.0,
        )
        .unwrap()
        .with_uniform_threshold(th)
        .unwrap();
        let rep = crate::types::first_sequence(&cfg.palette()[0]);
        let reps = vec![rep; 3];
        prop_assert_eq!(
            discarded_count(&cfg, 0).unwrap(),
            discarded_count_by_representative(&cfg, 0, &reps).unwrap()
        );
    }

    #[test]
    fn constructed_books_are_valid(seed in any::<u64>()) {
        let cfg = binary(2, 8, 0.01);
        let cb = construct(&cfg, &mut trial_rng(seed, 0), ConstructMode::Rejection).unwrap();
        prop_assert!(verify_min_distance(&cb, &cfg).ok);
        prop_assert!(cb.check_types(&cfg).is_ok());
    }
}
