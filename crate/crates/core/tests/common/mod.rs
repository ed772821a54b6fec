#![allow(dead_code)]

use std::io::Write;
use std::process::{Command, Stdio};

use tree_sentinel_core::model::{Aggregation, Ensemble, FeatureKind, FeatureSpec, Node, Tree};
use tree_sentinel_core::num::{int, parse_rational};
use tree_sentinel_core::smt::RunError;
use tree_sentinel_core::{Hyperrect, Rational, ScriptRunner};

/// Feeds each script to a fresh `z3 -in`.
#[derive(Default)]
pub struct Z3 {
    pub scripts: Vec<String>,
    /// Report the budget as spent once this many calls were made.
    pub call_budget: Option<usize>,
}

impl Z3 {
    pub fn with_budget(calls: usize) -> Self {
        Z3 { scripts: Vec::new(), call_budget: Some(calls) }
    }
}

impl ScriptRunner for Z3 {
    fn run(&mut self, script: &str) -> Result<String, RunError> {
        self.scripts.push(script.to_owned());
        let mut child = Command::new("z3")
            .arg("-in")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| RunError::NotFound(e.to_string()))?;
        child.stdin.take().unwrap().write_all(script.as_bytes()).map_err(|e| RunError::Io(e.to_string()))?;
        let out = child.wait_with_output().map_err(|e| RunError::Io(e.to_string()))?;
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    }

    fn budget_exhausted(&self) -> bool {
        self.call_budget.is_some_and(|n| self.scripts.len() >= n)
    }
}

pub fn r(text: &str) -> Rational {
    parse_rational(text).unwrap()
}

pub fn closed(bounds: &[(i64, i64)]) -> Hyperrect {
    Hyperrect::closed(bounds.iter().map(|&(a, b)| (int(a), int(b))))
}

pub fn stump(feature: usize, threshold: i64, yes: i64, no: i64, features: usize) -> Tree {
    let nodes = vec![
        Node::Split { feature, threshold: int(threshold), yes: 1, no: 2 },
        Node::Leaf { value: int(yes) },
        Node::Leaf { value: int(no) },
    ];
    Tree::new(nodes, 0, features, 0).unwrap()
}

pub fn ints(n: usize) -> Vec<FeatureSpec> {
    (0..n).map(|k| FeatureSpec::new(format!("f{k}"), FeatureKind::Integer)).collect()
}

pub fn sum(features: Vec<FeatureSpec>, trees: Vec<Tree>) -> Ensemble {
    Ensemble::new(features, trees, Aggregation::Sum, int(0)).unwrap()
}

/// 1-D integer model with output 1 on `[lo, hi]` and 0 elsewhere, so
/// `y < 1` fails exactly there.
pub fn band(lo: i64, hi: i64) -> Ensemble {
    let nodes = vec![
        Node::Split { feature: 0, threshold: int(lo), yes: 1, no: 2 },
        Node::Leaf { value: int(0) },
        Node::Split { feature: 0, threshold: int(hi + 1), yes: 3, no: 4 },
        Node::Leaf { value: int(1) },
        Node::Leaf { value: int(0) },
    ];
    sum(ints(1), vec![Tree::new(nodes, 0, 1, 0).unwrap()])
}
