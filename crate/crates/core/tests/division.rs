mod common;

use std::collections::BTreeSet;

use common::{closed, ints, stump, sum, Z3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tree_sentinel_core::division::{range_division, Division, DivisionOutcome};
use tree_sentinel_core::model::{Aggregation, FeatureKind};
use tree_sentinel_core::num::int;
use tree_sentinel_core::oracle::{brute_force_violations, GridSpec, DEFAULT_GRID_CAP};
use tree_sentinel_core::smt::Verifier;
use tree_sentinel_core::synthetic::{random_ensemble, random_property, SyntheticSpec};
use tree_sentinel_core::{parse_property, ConstraintSet, Ensemble, Hyperrect, Point, Property};

fn divide(m: &Ensemble, phi: &Property, core: &Hyperrect, iv: &Hyperrect, ce: &[i64], seed: u64) -> (DivisionOutcome, u64) {
    let rho = ConstraintSet::within(core.clone());
    let mut z3 = Z3::default();
    let mut v = Verifier::new(m, phi, &mut z3).unwrap();
    let ce = Point::from_ints(ce);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match range_division(core, iv, &rho, 10, &mut v, &ce, &mut rng).unwrap() {
        Division::Done(outcome) => (outcome, v.calls()),
        Division::Aborted(reason) => panic!("aborted: {reason:?}"),
    }
}

#[test]
fn clean_slab_is_dropped() {
    // violates where x0 <= 7; the clean box spans x0 in [8, 10]
    let m = sum(ints(2), vec![stump(0, 8, 1, 0, 2)]);
    let phi = parse_property("y < 1").unwrap();
    let core = closed(&[(0, 10), (0, 10)]);
    let iv = closed(&[(8, 10), (3, 10)]);
    let (out, _) = divide(&m, &phi, &core, &iv, &[1, 1], 0);
    assert!(out.piece_count() <= 4);
    assert!(out.total_volume < core.hypervolume());
    assert_eq!(out.total_volume, 80.0);
    assert!(out.surrds.iter().chain([&out.core]).all(|b| b.interval(0).upper.value <= int(8)));
}

#[test]
fn shared_faces_cost_no_calls() {
    let m = sum(ints(2), vec![stump(0, 8, 1, 0, 2)]);
    let phi = parse_property("y < 1").unwrap();
    let core = closed(&[(0, 10), (0, 10)]);
    // both upper faces of iv coincide with those of core
    let iv = closed(&[(8, 10), (5, 10)]);
    let (out, calls) = divide(&m, &phi, &core, &iv, &[1, 1], 0);
    // only the planes x0 = 8 and x1 = 5 cut anything, each in one of two
    // shapes depending on which comes first
    assert!(calls <= 4);
    assert_eq!(out.total_volume, 80.0);
}

#[test]
fn all_pieces_violating_keeps_volume() {
    let m = sum(ints(2), vec![stump(0, 8, 1, 1, 2)]);
    let phi = parse_property("y < 1").unwrap();
    let core = closed(&[(0, 10), (0, 10)]);
    let iv = closed(&[(4, 6), (4, 6)]);
    let (out, _) = divide(&m, &phi, &core, &iv, &[1, 1], 3);
    assert_eq!(out.total_volume, core.hypervolume());
    assert!(out.piece_count() <= 5);
}

/// Random models and random clean boxes: volume never grows, every
/// violating grid point of the input core survives in some output piece,
/// piece counts stay within 2s + 1, and a fixed seed reproduces the outcome.
#[test]
fn division_invariants_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut divided = 0;
    for case in 0..16 {
        let spec = SyntheticSpec {
            n_trees: 1 + case % 3,
            max_depth: 2,
            features: 2,
            kind: FeatureKind::Integer,
            lo: 0,
            hi: 8,
            leaf_lo: -3,
            leaf_hi: 3,
            aggregation: Aggregation::Sum,
            complete: false,
        };
        let m = random_ensemble(&spec, &mut rng);
        let phi = random_property(&m, &spec, &mut rng);
        let core = spec.domain();
        let grid = GridSpec::from_domain(&core, &m.kinds(), DEFAULT_GRID_CAP).unwrap();
        let truth = brute_force_violations(&m, &phi, &grid).unwrap();
        let Some(ce) = truth.iter().next().cloned() else { continue };
        let a = rand::Rng::random_range(&mut rng, 0..=8);
        let b = rand::Rng::random_range(&mut rng, a..=8);
        let iv = closed(&[(a, b), (a, b)]);
        let ce_ints: Vec<i64> = ce.iter().map(|v| v.to_integer().try_into().unwrap()).collect();
        let (out, _) = divide(&m, &phi, &core, &iv, &ce_ints, case as u64);
        let (again, _) = divide(&m, &phi, &core, &iv, &ce_ints, case as u64);
        assert_eq!(out, again);
        assert!(out.total_volume <= core.hypervolume());
        assert!(out.piece_count() <= 5);
        assert!(out.core.contains(&ce).unwrap());
        let pieces: Vec<&Hyperrect> = out.surrds.iter().chain([&out.core]).collect();
        let uncovered: BTreeSet<&Point> =
            truth.iter().filter(|p| !pieces.iter().any(|b| b.contains(p).unwrap())).collect();
        assert!(uncovered.is_empty(), "case {case}: {uncovered:?}");
        divided += 1;
    }
    assert!(divided > 5);
}
