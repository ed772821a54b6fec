//! Seeded random ensembles and properties for tests and benchmarks.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::geometry::Hyperrect;
use crate::model::{Aggregation, Ensemble, FeatureKind, FeatureSpec, Node, Tree};
use crate::num::{int, ratio, Rational};
use crate::property::{Cmp, Property, Var};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_trees: usize,
    pub max_depth: usize,
    pub features: usize,
    pub kind: FeatureKind,
    /// Every feature ranges over `[lo, hi]`.
    pub lo: i64,
    pub hi: i64,
    /// Leaf values are drawn from `[leaf_lo, leaf_hi]`.
    pub leaf_lo: i64,
    pub leaf_hi: i64,
    pub aggregation: Aggregation,
    /// Grow every branch to `max_depth` instead of stopping at random.
    pub complete: bool,
}

impl SyntheticSpec {
    pub fn domain(&self) -> Hyperrect {
        Hyperrect::closed((0..self.features).map(|_| (int(self.lo), int(self.hi))))
    }
}

fn threshold<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Rational {
    match spec.kind {
        // `x < t` with t in (lo, hi] always splits the integer range
        FeatureKind::Integer => int(rng.random_range(spec.lo + 1..=spec.hi)),
        FeatureKind::Real => ratio(rng.random_range(spec.lo * 4 + 1..=spec.hi * 4), 4),
    }
}

fn grow<R: Rng + ?Sized>(spec: &SyntheticSpec, depth: usize, nodes: &mut Vec<Node>, rng: &mut R) -> usize {
    let id = nodes.len();
    let split = depth == 0 || (depth < spec.max_depth && (spec.complete || rng.random_bool(0.7)));
    if !split {
        nodes.push(Node::Leaf { value: int(rng.random_range(spec.leaf_lo..=spec.leaf_hi)) });
        return id;
    }
    let feature = rng.random_range(0..spec.features);
    let threshold = threshold(spec, rng);
    nodes.push(Node::Leaf { value: int(0) });
    let yes = grow(spec, depth + 1, nodes, rng);
    let no = grow(spec, depth + 1, nodes, rng);
    nodes[id] = Node::Split { feature, threshold, yes, no };
    id
}

/// Panics if `spec` asks for zero trees, features or depth, or an empty
/// value range.
pub fn random_ensemble<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Ensemble {
    assert!(spec.n_trees >= 1 && spec.features >= 1 && spec.max_depth >= 1 && spec.lo < spec.hi);
    let trees = (0..spec.n_trees)
        .map(|t| {
            let mut nodes = Vec::new();
            grow(spec, 0, &mut nodes, rng);
            Tree::new(nodes, 0, spec.features, t).expect("generated tree is well formed")
        })
        .collect();
    let features = (0..spec.features).map(|k| FeatureSpec::new(format!("f{k}"), spec.kind)).collect();
    Ensemble::new(features, trees, spec.aggregation, int(0)).expect("generated ensemble is well formed")
}

/// A property on `y` whose constant is the model output at a random domain
/// point, so it holds on some inputs and fails on others about as often as
/// not. Every fourth property is an implication guarded by a feature test.
pub fn random_property<R: Rng + ?Sized>(m: &Ensemble, spec: &SyntheticSpec, rng: &mut R) -> Property {
    let probe: Vec<Rational> = (0..spec.features).map(|_| int(rng.random_range(spec.lo..=spec.hi))).collect();
    let pivot = m.predict(&probe).expect("probe has one value per feature");
    let cmp = [Cmp::Gt, Cmp::Ge, Cmp::Lt, Cmp::Le][rng.random_range(0..4)];
    let goal = Property::atom(Var::Y, cmp, pivot);
    if rng.random_range(0..4) == 0 {
        let k = rng.random_range(0..spec.features);
        let guard = Property::atom(Var::X(k), Cmp::Ge, int(rng.random_range(spec.lo..=spec.hi)));
        Property::Implies(alloc::boxed::Box::new(guard), alloc::boxed::Box::new(goal))
    } else {
        goal
    }
}
