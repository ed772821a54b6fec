//! SMT-LIB v2 text for `F = F_M ∧ ¬φ ∧ ρ`.
//!
//! Output is deterministic: identical inputs give byte-identical scripts.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::geometry::{Hyperrect, Interval};
use crate::model::{Aggregation, Branch, Ensemble, FeatureKind};
use crate::num::{smt_real, Rational};
use crate::property::{Cmp, Property, Var};

use super::ConstraintSet;

/// Solver identifiers for every variable in a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    pub inputs: Vec<String>,
    pub output: String,
    pub trees: Vec<String>,
    kinds: Vec<FeatureKind>,
}

impl SymbolTable {
    pub fn for_model(m: &Ensemble) -> Self {
        SymbolTable {
            inputs: (0..m.feature_count()).map(|k| format!("x{k}")).collect(),
            output: String::from("y"),
            trees: (1..=m.trees().len()).map(|i| format!("y{i}")).collect(),
            kinds: m.kinds(),
        }
    }

    /// Real-sorted term for input `k` (integer inputs are lifted with
    /// `to_real` so every comparison is between reals).
    pub fn input_term(&self, k: usize) -> String {
        match self.kinds[k] {
            FeatureKind::Real => self.inputs[k].clone(),
            FeatureKind::Integer => format!("(to_real {})", self.inputs[k]),
        }
    }

    pub fn logic(&self) -> &'static str {
        if self.kinds.contains(&FeatureKind::Integer) {
            "QF_LIRA"
        } else {
            "QF_LRA"
        }
    }
}

/// A complete solver input plus the names needed to read back a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub script: String,
    pub symbols: SymbolTable,
}

/// Declarations and the `F_M` assertions: one implication per root-to-leaf
/// path of every tree, then the aggregation equation.
pub fn encode_model(m: &Ensemble) -> Vec<String> {
    let symbols = SymbolTable::for_model(m);
    let mut lines = Vec::new();
    for (k, name) in symbols.inputs.iter().enumerate() {
        let sort = match m.features()[k].kind {
            FeatureKind::Real => "Real",
            FeatureKind::Integer => "Int",
        };
        lines.push(format!("(declare-const {name} {sort})"));
    }
    lines.push(format!("(declare-const {} Real)", symbols.output));
    for name in &symbols.trees {
        lines.push(format!("(declare-const {name} Real)"));
    }
    for (tree, name) in m.trees().iter().zip(&symbols.trees) {
        for path in tree.paths() {
            let conditions: Vec<String> = path
                .steps
                .iter()
                .map(|step| {
                    let op = match step.branch {
                        Branch::Yes => "<",
                        Branch::No => ">=",
                    };
                    format!("({op} {} {})", symbols.input_term(step.feature), smt_real(&step.threshold))
                })
                .collect();
            let antecedent = conjunction(&conditions);
            lines.push(format!("(assert (=> {antecedent} (= {name} {})))", smt_real(&path.leaf_value)));
        }
    }
    lines.push(format!("(assert {})", aggregation_equation(m, &symbols)));
    lines
}

fn conjunction(terms: &[String]) -> String {
    match terms {
        [single] => single.clone(),
        _ => format!("(and {})", terms.join(" ")),
    }
}

fn aggregation_equation(m: &Ensemble, symbols: &SymbolTable) -> String {
    let base = m.base_score();
    let has_base = !num_traits::Zero::is_zero(base);
    match m.aggregation() {
        Aggregation::Sum => {
            let mut terms = Vec::new();
            if has_base {
                terms.push(smt_real(base));
            }
            terms.extend(symbols.trees.iter().cloned());
            let rhs = if terms.len() == 1 { terms.pop().unwrap_or_default() } else { format!("(+ {})", terms.join(" ")) };
            format!("(= {} {rhs})", symbols.output)
        }
        Aggregation::Average => {
            // y * n = n * base + Σ y_i keeps the formula division-free.
            let n = Rational::from_integer(m.trees().len().into());
            let mut terms = Vec::new();
            if has_base {
                terms.push(smt_real(&(&n * base)));
            }
            terms.extend(symbols.trees.iter().cloned());
            let rhs = if terms.len() == 1 { terms.pop().unwrap_or_default() } else { format!("(+ {})", terms.join(" ")) };
            format!("(= (* {} {}) {rhs})", smt_real(&n), symbols.output)
        }
    }
}

fn atom_term(symbols: &SymbolTable, var: Var) -> String {
    match var {
        Var::X(k) => symbols.input_term(k),
        Var::Y => symbols.output.clone(),
    }
}

/// SMT-LIB term for a property. The caller has bound the property to the
/// model, so every `x[k]` has a symbol.
pub fn property_term(phi: &Property, symbols: &SymbolTable) -> String {
    match phi {
        Property::Atom { var, cmp, constant } => {
            let lhs = atom_term(symbols, *var);
            let rhs = smt_real(constant);
            match cmp {
                Cmp::Lt => format!("(< {lhs} {rhs})"),
                Cmp::Le => format!("(<= {lhs} {rhs})"),
                Cmp::Gt => format!("(> {lhs} {rhs})"),
                Cmp::Ge => format!("(>= {lhs} {rhs})"),
                Cmp::Eq => format!("(= {lhs} {rhs})"),
                Cmp::Ne => format!("(not (= {lhs} {rhs}))"),
            }
        }
        Property::Not(p) => format!("(not {})", property_term(p, symbols)),
        Property::And(a, b) => format!("(and {} {})", property_term(a, symbols), property_term(b, symbols)),
        Property::Or(a, b) => format!("(or {} {})", property_term(a, symbols), property_term(b, symbols)),
        Property::Implies(a, b) => format!("(=> {} {})", property_term(a, symbols), property_term(b, symbols)),
    }
}

fn within_assertions(b: &Hyperrect, symbols: &SymbolTable, out: &mut Vec<String>) {
    for (k, Interval { lower, upper }) in b.intervals().iter().enumerate() {
        let x = symbols.input_term(k);
        let lo_op = if lower.closed { ">=" } else { ">" };
        let hi_op = if upper.closed { "<=" } else { "<" };
        out.push(format!("(assert ({lo_op} {x} {}))", smt_real(&lower.value)));
        out.push(format!("(assert ({hi_op} {x} {}))", smt_real(&upper.value)));
    }
}

/// `x` lies outside `b`: some coordinate is below the lower bound or above
/// the upper bound, with strictness flipped relative to the box.
fn outside_term(b: &Hyperrect, symbols: &SymbolTable) -> String {
    let mut disjuncts = Vec::with_capacity(2 * b.dim());
    for (k, Interval { lower, upper }) in b.intervals().iter().enumerate() {
        let x = symbols.input_term(k);
        let lo_op = if lower.closed { "<" } else { "<=" };
        let hi_op = if upper.closed { ">" } else { ">=" };
        disjuncts.push(format!("({lo_op} {x} {})", smt_real(&lower.value)));
        disjuncts.push(format!("({hi_op} {x} {})", smt_real(&upper.value)));
    }
    format!("(or {})", disjuncts.join(" "))
}

/// ρ as assertions: the domain and the optional confinement become bound
/// constraints; each non-empty exclusion becomes an "outside" disjunction.
pub fn constraint_to_assertions(rho: &ConstraintSet, symbols: &SymbolTable) -> Vec<String> {
    let mut out = Vec::new();
    within_assertions(&rho.domain, symbols, &mut out);
    if let Some(c) = &rho.confinement {
        within_assertions(c, symbols, &mut out);
    }
    for excluded in rho.exclusions.iter().filter(|b| !b.is_empty()) {
        out.push(format!("(assert {})", outside_term(excluded, symbols)));
    }
    out
}

/// Everything before ρ: header, `F_M` and `¬φ`. Reused across queries on
/// the same model and property.
pub fn prelude(m: &Ensemble, phi: &Property) -> String {
    let symbols = SymbolTable::for_model(m);
    let mut s = String::new();
    let _ = writeln!(s, "(set-option :produce-models true)");
    let _ = writeln!(s, "(set-logic {})", symbols.logic());
    for line in encode_model(m) {
        s.push_str(&line);
        s.push('\n');
    }
    let _ = writeln!(s, "(assert (not {}))", property_term(phi, &symbols));
    s
}

pub fn finish_query(prelude: &str, rho: &ConstraintSet, symbols: &SymbolTable) -> String {
    let mut s = String::from(prelude);
    for line in constraint_to_assertions(rho, symbols) {
        s.push_str(&line);
        s.push('\n');
    }
    s.push_str("(check-sat)\n");
    let mut names: Vec<&str> = symbols.inputs.iter().map(String::as_str).collect();
    names.push(&symbols.output);
    let _ = writeln!(s, "(get-value ({}))", names.join(" "));
    s
}

pub fn build_query(m: &Ensemble, phi: &Property, rho: &ConstraintSet) -> Query {
    let symbols = SymbolTable::for_model(m);
    let script = finish_query(&prelude(m, phi), rho, &symbols);
    Query { script, symbols }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Bound;
    use crate::model::{FeatureSpec, Node, Tree};
    use crate::num::{int, parse_rational};
    use crate::property::parse_property;
    use alloc::vec;

    fn r(t: &str) -> Rational {
        parse_rational(t).unwrap()
    }

    fn one_split(kind: FeatureKind) -> Ensemble {
        let tree = Tree::new(
            vec![
                Node::Split { feature: 0, threshold: int(5), yes: 1, no: 2 },
                Node::Leaf { value: r("1.2") },
                Node::Leaf { value: r("3.4") },
            ],
            0,
            1,
            0,
        )
        .unwrap();
        Ensemble::new(vec![FeatureSpec::new("a", kind)], vec![tree], Aggregation::Sum, int(0)).unwrap()
    }

    #[test]
    fn one_split_structure() {
        let lines = encode_model(&one_split(FeatureKind::Real));
        assert_eq!(
            lines,
            vec![
                "(declare-const x0 Real)",
                "(declare-const y Real)",
                "(declare-const y1 Real)",
                "(assert (=> (< x0 5.0) (= y1 1.2)))",
                "(assert (=> (>= x0 5.0) (= y1 3.4)))",
                "(assert (= y y1))",
            ]
        );
        let int_lines = encode_model(&one_split(FeatureKind::Integer));
        assert_eq!(int_lines[0], "(declare-const x0 Int)");
        assert_eq!(int_lines[3], "(assert (=> (< (to_real x0) 5.0) (= y1 1.2)))");
    }

    #[test]
    fn average_is_division_free() {
        let t = one_split(FeatureKind::Real).trees()[0].clone();
        let m = Ensemble::new(
            vec![FeatureSpec::new("a", FeatureKind::Real)],
            vec![t.clone(), t],
            Aggregation::Average,
            r("0.5"),
        )
        .unwrap();
        let lines = encode_model(&m);
        assert_eq!(lines.last().unwrap(), "(assert (= (* 2.0 y) (+ 1.0 y1 y2)))");
        assert_eq!(lines.iter().filter(|l| l.contains("=>")).count(), 4);
    }

    #[test]
    fn constraint_forms() {
        let m = one_split(FeatureKind::Real);
        let symbols = SymbolTable::for_model(&m);
        let domain = Hyperrect::closed([(int(0), int(10))]);
        let rho = ConstraintSet::within(domain.clone());
        assert_eq!(constraint_to_assertions(&rho, &symbols), vec!["(assert (>= x0 0.0))", "(assert (<= x0 10.0))"]);

        let mut rho = ConstraintSet::within(domain.clone());
        rho.exclude(Hyperrect::closed([(int(2), int(3))]));
        assert_eq!(constraint_to_assertions(&rho, &symbols)[2], "(assert (or (< x0 2.0) (> x0 3.0)))");

        let conf = Hyperrect::new(vec![Interval { lower: Bound::open(int(5)), upper: Bound::closed(int(7)) }]);
        let rho = ConstraintSet::within(domain).confined_to(&conf);
        let lines = constraint_to_assertions(&rho, &symbols);
        assert_eq!(&lines[2..], ["(assert (> x0 5.0))", "(assert (<= x0 7.0))"]);
    }

    #[test]
    fn property_terms() {
        let m = one_split(FeatureKind::Integer);
        let symbols = SymbolTable::for_model(&m);
        let phi = parse_property("x[0] >= 7000 => y >= -500000.5 && y != 3").unwrap();
        assert_eq!(
            property_term(&phi, &symbols),
            "(=> (>= (to_real x0) 7000.0) (and (>= y (- 500000.5)) (not (= y 3.0))))"
        );
    }

    #[test]
    fn deterministic_scripts() {
        let m = one_split(FeatureKind::Real);
        let phi = parse_property("y > 2").unwrap();
        let rho = ConstraintSet::within(Hyperrect::closed([(int(0), int(10))]));
        assert_eq!(build_query(&m, &phi, &rho).script, build_query(&m, &phi, &rho).script);
    }
}
