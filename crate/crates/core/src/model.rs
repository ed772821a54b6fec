//! Decision-tree ensembles: validated construction, prediction and path
//! enumeration.
//!
//! Every split node tests `x[k] < threshold`; the yes-branch is taken when the
//! test holds. Thresholds and leaf values are exact rationals.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::num::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("a model needs at least one feature")]
    NoFeatures,
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("a model needs at least one tree")]
    NoTrees,
    #[error("tree {tree}: root index {root} is out of range")]
    BadRoot { tree: usize, root: usize },
    #[error("tree {tree}: node {node} references missing node {child}")]
    DanglingChild { tree: usize, node: usize, child: usize },
    #[error("tree {tree}: cycle detected through node {node}")]
    Cycle { tree: usize, node: usize },
    #[error("tree {tree}: node {node} has more than one parent")]
    SharedChild { tree: usize, node: usize },
    #[error("tree {tree}: node {node} is unreachable from the root")]
    Unreachable { tree: usize, node: usize },
    #[error("tree {tree}: node {node} tests feature {feature} but the model has {features} features")]
    FeatureOutOfRange { tree: usize, node: usize, feature: usize, features: usize },
    #[error("tree {tree} has no split node")]
    NoSplit { tree: usize },
    #[error("input has {found} values but the model has {expected} features")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Real,
    Integer,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Real => "real",
            FeatureKind::Integer => "integer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        FeatureSpec { name: name.into(), kind }
    }
}

/// An input vector `x = [x[0], ..., x[s-1]]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point(Vec<Rational>);

impl Point {
    pub fn new(values: Vec<Rational>) -> Self {
        Point(values)
    }

    pub fn from_ints(values: &[i64]) -> Self {
        Point(values.iter().map(|&v| Rational::from_integer(BigInt::from(v))).collect())
    }

    pub fn into_inner(self) -> Vec<Rational> {
        self.0
    }
}

impl Deref for Point {
    type Target = [Rational];

    fn deref(&self) -> &[Rational] {
        &self.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&crate::num::format_rational(v))?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Split { feature: usize, threshold: Rational, yes: usize, no: usize },
    Leaf { value: Rational },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub feature: usize,
    pub threshold: Rational,
    pub branch: Branch,
}

impl Step {
    pub fn holds(&self, x: &[Rational]) -> bool {
        let below = x[self.feature] < self.threshold;
        match self.branch {
            Branch::Yes => below,
            Branch::No => !below,
        }
    }
}

/// A root-to-leaf path: the conjunction of its steps implies the tree outputs
/// `leaf_value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub steps: Vec<Step>,
    pub leaf_value: Rational,
}

impl Path {
    pub fn is_satisfied_by(&self, x: &[Rational]) -> bool {
        self.steps.iter().all(|s| s.holds(x))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    nodes: Vec<Node>,
    root: usize,
}

impl Tree {
    /// Validates shape and builds the tree. `tree` is only used to label
    /// errors.
    pub fn new(nodes: Vec<Node>, root: usize, feature_count: usize, tree: usize) -> Result<Self, ModelError> {
        if root >= nodes.len() {
            return Err(ModelError::BadRoot { tree, root });
        }
        let mut has_split = false;
        for (node, n) in nodes.iter().enumerate() {
            if let Node::Split { feature, yes, no, .. } = n {
                has_split = true;
                if *feature >= feature_count {
                    return Err(ModelError::FeatureOutOfRange {
                        tree,
                        node,
                        feature: *feature,
                        features: feature_count,
                    });
                }
                for &child in [yes, no] {
                    if child >= nodes.len() {
                        return Err(ModelError::DanglingChild { tree, node, child });
                    }
                }
            }
        }
        if !has_split {
            return Err(ModelError::NoSplit { tree });
        }

        // Depth-first walk from the root; a revisit is either a cycle or a
        // node with two parents.
        let mut state = vec![0u8; nodes.len()]; // 0 unseen, 1 on stack, 2 done
        let mut stack = vec![(root, false)];
        while let Some((node, leaving)) = stack.pop() {
            if leaving {
                state[node] = 2;
                continue;
            }
            match state[node] {
                1 => return Err(ModelError::Cycle { tree, node }),
                2 => return Err(ModelError::SharedChild { tree, node }),
                _ => {}
            }
            state[node] = 1;
            stack.push((node, true));
            if let Node::Split { yes, no, .. } = &nodes[node] {
                for &child in [no, yes] {
                    match state[child] {
                        1 => return Err(ModelError::Cycle { tree, node: child }),
                        2 => return Err(ModelError::SharedChild { tree, node: child }),
                        _ => stack.push((child, false)),
                    }
                }
            }
        }
        if let Some(node) = state.iter().position(|&s| s == 0) {
            return Err(ModelError::Unreachable { tree, node });
        }
        Ok(Tree { nodes, root })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Number of split nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.paths().iter().map(|p| p.steps.len()).max().unwrap_or(0)
    }

    /// Leaf value reached by `x`. The caller guarantees `x` is long enough.
    pub fn evaluate(&self, x: &[Rational]) -> &Rational {
        let mut at = self.root;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, yes, no } => {
                    at = if x[*feature] < *threshold { *yes } else { *no };
                }
            }
        }
    }

    /// One path per leaf, in depth-first order with yes-branches first.
    pub fn paths(&self) -> Vec<Path> {
        let mut out = Vec::with_capacity(self.leaf_count());
        let mut stack: Vec<(usize, Vec<Step>)> = vec![(self.root, Vec::new())];
        while let Some((at, steps)) = stack.pop() {
            match &self.nodes[at] {
                Node::Leaf { value } => out.push(Path { steps, leaf_value: value.clone() }),
                Node::Split { feature, threshold, yes, no } => {
                    let mut no_steps = steps.clone();
                    no_steps.push(Step { feature: *feature, threshold: threshold.clone(), branch: Branch::No });
                    let mut yes_steps = steps;
                    yes_steps.push(Step { feature: *feature, threshold: threshold.clone(), branch: Branch::Yes });
                    stack.push((*no, no_steps));
                    stack.push((*yes, yes_steps));
                }
            }
        }
        out
    }
}

/// Same as [`Tree::paths`]; kept as a free function for symmetry with the
/// other per-model operations.
pub fn enumerate_paths(tree: &Tree) -> Vec<Path> {
    tree.paths()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregation {
    /// `y = base + Σ y_i` (gradient boosting).
    Sum,
    /// `y = base + (Σ y_i) / card(T)` (random forests).
    Average,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Sum => "sum",
            Aggregation::Average => "average",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ensemble {
    features: Vec<FeatureSpec>,
    trees: Vec<Tree>,
    aggregation: Aggregation,
    base_score: Rational,
}

impl Ensemble {
    pub fn new(
        features: Vec<FeatureSpec>,
        trees: Vec<Tree>,
        aggregation: Aggregation,
        base_score: Rational,
    ) -> Result<Self, ModelError> {
        if features.is_empty() {
            return Err(ModelError::NoFeatures);
        }
        for (i, f) in features.iter().enumerate() {
            if features[..i].iter().any(|g| g.name == f.name) {
                return Err(ModelError::DuplicateFeature(f.name.clone()));
            }
        }
        if trees.is_empty() {
            return Err(ModelError::NoTrees);
        }
        let s = features.len();
        for (t, tree) in trees.iter().enumerate() {
            for (node, n) in tree.nodes.iter().enumerate() {
                if let Node::Split { feature, .. } = n {
                    if *feature >= s {
                        return Err(ModelError::FeatureOutOfRange { tree: t, node, feature: *feature, features: s });
                    }
                }
            }
        }
        Ok(Ensemble { features, trees, aggregation, base_score })
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn kinds(&self) -> Vec<FeatureKind> {
        self.features.iter().map(|f| f.kind).collect()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn aggregation(&self) -> Aggregation {
        self.aggregation
    }

    pub fn base_score(&self) -> &Rational {
        &self.base_score
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }

    /// Combines per-tree outputs according to the aggregation rule.
    pub fn aggregate<'a>(&self, values: impl Iterator<Item = &'a Rational>) -> Rational {
        let total = values.fold(Rational::zero(), |acc, v| acc + v);
        match self.aggregation {
            Aggregation::Sum => &self.base_score + total,
            Aggregation::Average => {
                &self.base_score + total / Rational::from_integer(BigInt::from(self.trees.len()))
            }
        }
    }

    pub fn predict(&self, x: &[Rational]) -> Result<Rational, ModelError> {
        if x.len() != self.features.len() {
            return Err(ModelError::LengthMismatch { expected: self.features.len(), found: x.len() });
        }
        Ok(self.aggregate(self.trees.iter().map(|t| t.evaluate(x))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, ratio};
    use alloc::vec;

    fn split(feature: usize, threshold: i64, yes: usize, no: usize) -> Node {
        Node::Split { feature, threshold: int(threshold), yes, no }
    }

    fn leaf(v: i64) -> Node {
        Node::Leaf { value: int(v) }
    }

    fn features(s: usize) -> Vec<FeatureSpec> {
        (0..s).map(|i| FeatureSpec::new(alloc::format!("f{i}"), FeatureKind::Integer)).collect()
    }

    fn stump(threshold: i64, lo: i64, hi: i64) -> Tree {
        Tree::new(vec![split(0, threshold, 1, 2), leaf(lo), leaf(hi)], 0, 1, 0).unwrap()
    }

    /// Complete tree of the given depth splitting on feature 0 at distinct
    /// thresholds; leaf i has value i.
    fn complete(depth: usize) -> Tree {
        let mut nodes = Vec::new();
        fn build(nodes: &mut Vec<Node>, depth: usize, lo: i64, hi: i64, next_leaf: &mut i64) -> usize {
            let id = nodes.len();
            if depth == 0 {
                nodes.push(Node::Leaf { value: int(*next_leaf) });
                *next_leaf += 1;
                return id;
            }
            nodes.push(leaf(0));
            let mid = (lo + hi) / 2;
            let yes = build(nodes, depth - 1, lo, mid, next_leaf);
            let no = build(nodes, depth - 1, mid, hi, next_leaf);
            nodes[id] = split(0, mid, yes, no);
            id
        }
        let mut counter = 0;
        build(&mut nodes, depth, 0, 1 << (depth + 1), &mut counter);
        Tree::new(nodes, 0, 1, 0).unwrap()
    }

    #[test]
    fn minimal_model() {
        let m = Ensemble::new(features(1), vec![stump(0, -1, 1)], Aggregation::Sum, int(0)).unwrap();
        assert_eq!(m.trees().len(), 1);
        assert_eq!(m.trees()[0].leaf_count(), 2);
        assert_eq!(m.predict(&[int(-3)]).unwrap(), int(-1));
        assert_eq!(m.predict(&[int(0)]).unwrap(), int(1));
        assert!(matches!(m.predict(&[int(0), int(1)]), Err(ModelError::LengthMismatch { .. })));
    }

    #[test]
    fn average_aggregation() {
        let m = Ensemble::new(features(1), vec![stump(0, 2, 2), stump(5, 3, 3)], Aggregation::Average, int(0))
            .unwrap();
        assert_eq!(m.predict(&[int(1)]).unwrap(), ratio(5, 2));
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            Tree::new(vec![split(0, 0, 1, 7), leaf(0), leaf(1)], 0, 1, 0),
            Err(ModelError::DanglingChild { tree: 0, node: 0, child: 7 })
        );
        assert_eq!(
            Tree::new(vec![split(0, 0, 1, 0), leaf(0)], 0, 1, 0),
            Err(ModelError::Cycle { tree: 0, node: 0 })
        );
        assert!(matches!(
            Tree::new(vec![split(0, 0, 1, 2), split(0, 1, 3, 0), leaf(0), leaf(1)], 0, 1, 0),
            Err(ModelError::Cycle { .. })
        ));
        assert!(matches!(
            Tree::new(vec![split(0, 0, 1, 1), leaf(0)], 0, 1, 0),
            Err(ModelError::SharedChild { .. })
        ));
        assert!(matches!(
            Tree::new(vec![split(0, 0, 1, 2), leaf(0), leaf(1), leaf(2)], 0, 1, 0),
            Err(ModelError::Unreachable { node: 3, .. })
        ));
        assert_eq!(Tree::new(vec![leaf(0)], 0, 1, 0), Err(ModelError::NoSplit { tree: 0 }));
        assert!(matches!(
            Tree::new(vec![split(3, 0, 1, 2), leaf(0), leaf(1)], 0, 2, 0),
            Err(ModelError::FeatureOutOfRange { feature: 3, .. })
        ));
        assert_eq!(
            Ensemble::new(features(1), vec![], Aggregation::Sum, int(0)),
            Err(ModelError::NoTrees)
        );
        assert_eq!(Ensemble::new(vec![], vec![stump(0, 0, 1)], Aggregation::Sum, int(0)), Err(ModelError::NoFeatures));
    }

    #[test]
    fn path_counts() {
        assert_eq!(enumerate_paths(&stump(0, 0, 1)).len(), 2);
        for d in 1..=4 {
            let t = complete(d);
            assert_eq!(enumerate_paths(&t).len(), 1 << d);
            assert_eq!(t.depth(), d);
        }
        // skewed: x<0 → a, else (x<5 → b, else c)
        let skewed = Tree::new(vec![split(0, 0, 1, 2), leaf(1), split(0, 5, 3, 4), leaf(2), leaf(3)], 0, 1, 0).unwrap();
        let paths = enumerate_paths(&skewed);
        assert_eq!(paths.len(), 3);
        assert!(paths.iter().all(|p| !p.steps.is_empty()));
    }

    #[test]
    fn paths_partition_small_grid() {
        let t = complete(3);
        let paths = t.paths();
        for v in -2..20 {
            let x = [int(v)];
            let hits: Vec<_> = paths.iter().filter(|p| p.is_satisfied_by(&x)).collect();
            assert_eq!(hits.len(), 1, "x = {v}");
            assert_eq!(&hits[0].leaf_value, t.evaluate(&x));
        }
    }
}
