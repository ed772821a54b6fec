//! Input/output properties over `(x, y)`.
//!
//! Concrete syntax:
//!
//! ```text
//! prop  := imp
//! imp   := or ("=>" imp)?
//! or    := and ("||" and)*
//! and   := unary ("&&" unary)*
//! unary := "!" unary | "(" prop ")" | atom
//! atom  := ("x[" INT "]" | "y") CMP DECIMAL
//! CMP   := "<" | "<=" | ">" | ">=" | "==" | "!="
//! ```
//!
//! Equality on real-valued variables is accepted but is only satisfiable on a
//! measure-zero set; prefer inequalities.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use core::fmt;

use thiserror::Error;

use crate::num::{format_rational, parse_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(usize),
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
        }
    }

    pub fn apply(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Eq => lhs == rhs,
            Cmp::Ne => lhs != rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Property {
    Atom { var: Var, cmp: Cmp, constant: Rational },
    Not(Box<Property>),
    And(Box<Property>, Box<Property>),
    Or(Box<Property>, Box<Property>),
    Implies(Box<Property>, Box<Property>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropertyError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("feature index at byte {position} is not a non-negative integer")]
    BadIndex { position: usize },
    #[error("property refers to x[{index}] but only {features} features are bound")]
    UnboundIndex { index: usize, features: usize },
}

impl Property {
    pub fn atom(var: Var, cmp: Cmp, constant: Rational) -> Self {
        Property::Atom { var, cmp, constant }
    }

    pub fn negate(self) -> Self {
        Property::Not(Box::new(self))
    }

    /// Largest feature index mentioned, if any.
    pub fn max_feature(&self) -> Option<usize> {
        match self {
            Property::Atom { var: Var::X(k), .. } => Some(*k),
            Property::Atom { var: Var::Y, .. } => None,
            Property::Not(p) => p.max_feature(),
            Property::And(a, b) | Property::Or(a, b) | Property::Implies(a, b) => {
                match (a.max_feature(), b.max_feature()) {
                    (Some(i), Some(j)) => Some(i.max(j)),
                    (i, j) => i.or(j),
                }
            }
        }
    }

    /// Checks every `x[k]` refers to one of `features` inputs.
    pub fn bind(&self, features: usize) -> Result<(), PropertyError> {
        match self.max_feature() {
            Some(index) if index >= features => Err(PropertyError::UnboundIndex { index, features }),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, x: &[Rational], y: &Rational) -> Result<bool, PropertyError> {
        Ok(match self {
            Property::Atom { var, cmp, constant } => {
                let lhs = match var {
                    Var::Y => y,
                    Var::X(k) => x.get(*k).ok_or(PropertyError::UnboundIndex { index: *k, features: x.len() })?,
                };
                cmp.apply(lhs, constant)
            }
            Property::Not(p) => !p.evaluate(x, y)?,
            Property::And(a, b) => a.evaluate(x, y)? && b.evaluate(x, y)?,
            Property::Or(a, b) => a.evaluate(x, y)? || b.evaluate(x, y)?,
            Property::Implies(a, b) => !a.evaluate(x, y)? || b.evaluate(x, y)?,
        })
    }
}

pub fn evaluate_property(phi: &Property, x: &[Rational], y: &Rational) -> Result<bool, PropertyError> {
    phi.evaluate(x, y)
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(k) => write!(f, "x[{k}]"),
            Var::Y => f.write_str("y"),
        }
    }
}

/// Fully parenthesized; parses back to the same tree.
impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Atom { var, cmp, constant } => {
                write!(f, "{var} {} {}", cmp.symbol(), format_rational(constant))
            }
            Property::Not(p) => write!(f, "!({p})"),
            Property::And(a, b) => write!(f, "({a}) && ({b})"),
            Property::Or(a, b) => write!(f, "({a}) || ({b})"),
            Property::Implies(a, b) => write!(f, "({a}) => ({b})"),
        }
    }
}

pub fn parse_property(text: &str) -> Result<Property, PropertyError> {
    let mut p = Parser { src: text, pos: 0 };
    let prop = p.implication()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(prop)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> PropertyError {
        PropertyError::Syntax { position: self.pos, message: message.to_string() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn implication(&mut self) -> Result<Property, PropertyError> {
        let lhs = self.disjunction()?;
        if self.eat("=>") {
            let rhs = self.implication()?;
            return Ok(Property::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Property, PropertyError> {
        let mut lhs = self.conjunction()?;
        while self.eat("||") {
            let rhs = self.conjunction()?;
            lhs = Property::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Property, PropertyError> {
        let mut lhs = self.unary()?;
        while self.eat("&&") {
            let rhs = self.unary()?;
            lhs = Property::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Property, PropertyError> {
        self.skip_ws();
        // `!` but not `!=`
        if self.rest().starts_with('!') && !self.rest().starts_with("!=") {
            self.pos += 1;
            return Ok(self.unary()?.negate());
        }
        if self.eat("(") {
            let inner = self.implication()?;
            if !self.eat(")") {
                return Err(self.error("expected `)`"));
            }
            return Ok(inner);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Property, PropertyError> {
        self.skip_ws();
        let var = if self.eat("x[") {
            self.skip_ws();
            let start = self.pos;
            let len = self.rest().find(|c: char| c == ']' || c.is_whitespace()).unwrap_or(self.rest().len());
            let digits = &self.rest()[..len];
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                if digits.is_empty() || digits.bytes().any(|b| !b"0123456789.-+eE".contains(&b)) {
                    return Err(self.error("expected feature index"));
                }
                return Err(PropertyError::BadIndex { position: start });
            }
            let index = digits.parse::<usize>().map_err(|_| PropertyError::BadIndex { position: start })?;
            self.pos += len;
            if !self.eat("]") {
                return Err(self.error("expected `]`"));
            }
            Var::X(index)
        } else if self.eat("y") {
            Var::Y
        } else {
            return Err(self.error("expected `x[k]`, `y`, `!` or `(`"));
        };
        self.skip_ws();
        let cmp = [
            ("<=", Cmp::Le),
            (">=", Cmp::Ge),
            ("==", Cmp::Eq),
            ("!=", Cmp::Ne),
            ("<", Cmp::Lt),
            (">", Cmp::Gt),
        ]
        .into_iter()
        .find(|(tok, _)| self.rest().starts_with(tok));
        let Some((tok, cmp)) = cmp else {
            return Err(self.error("expected comparison operator"));
        };
        self.pos += tok.len();
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E' | '/')))
            .unwrap_or(self.rest().len());
        let constant = parse_rational(&self.rest()[..len])
            .map_err(|_| PropertyError::Syntax { position: start, message: "expected decimal constant".to_string() })?;
        self.pos += len;
        Ok(Property::atom(var, cmp, constant))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::int;
    use alloc::format;

    fn atom(var: Var, cmp: Cmp, c: i64) -> Property {
        Property::atom(var, cmp, int(c))
    }

    #[test]
    fn parses_case_study_properties() {
        assert_eq!(
            parse_property("x[0] >= 7000 => y >= 500000").unwrap(),
            Property::Implies(Box::new(atom(Var::X(0), Cmp::Ge, 7000)), Box::new(atom(Var::Y, Cmp::Ge, 500000)))
        );
        assert_eq!(parse_property("y > 50000").unwrap(), atom(Var::Y, Cmp::Gt, 50000));
        assert_eq!(parse_property("y < 10000000").unwrap(), atom(Var::Y, Cmp::Lt, 10000000));
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse_property("x[2 >= 1"), Err(PropertyError::Syntax { .. })));
        assert!(matches!(parse_property("x[1.5] > 0"), Err(PropertyError::BadIndex { position: 2 })));
        assert!(matches!(parse_property("y >"), Err(PropertyError::Syntax { .. })));
        assert!(matches!(parse_property("y > 1 &&"), Err(PropertyError::Syntax { .. })));
        assert!(matches!(parse_property("(y > 1"), Err(PropertyError::Syntax { .. })));
        assert!(matches!(parse_property("y > 1 z"), Err(PropertyError::Syntax { position: 6, .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        let p = parse_property("y > 0 || y < -5 && x[1] != 2 => y == 1 => x[0] <= 3").unwrap();
        let expected = Property::Implies(
            Box::new(Property::Or(
                Box::new(atom(Var::Y, Cmp::Gt, 0)),
                Box::new(Property::And(Box::new(atom(Var::Y, Cmp::Lt, -5)), Box::new(atom(Var::X(1), Cmp::Ne, 2)))),
            )),
            Box::new(Property::Implies(Box::new(atom(Var::Y, Cmp::Eq, 1)), Box::new(atom(Var::X(0), Cmp::Le, 3)))),
        );
        assert_eq!(p, expected);
        let n = parse_property("!!y > 0").unwrap();
        assert_eq!(n, atom(Var::Y, Cmp::Gt, 0).negate().negate());
    }

    #[test]
    fn evaluation() {
        let eq5 = parse_property("x[0] >= 7000 => y >= 500000").unwrap();
        assert!(!eq5.evaluate(&[int(8000)], &int(400000)).unwrap());
        assert!(eq5.evaluate(&[int(100)], &int(0)).unwrap());
        let eq6 = parse_property("y > 50000").unwrap();
        assert!(!eq6.evaluate(&[], &int(50000)).unwrap());
        assert_eq!(
            parse_property("x[3] > 0").unwrap().evaluate(&[int(1)], &int(0)),
            Err(PropertyError::UnboundIndex { index: 3, features: 1 })
        );
    }

    #[test]
    fn binding() {
        let p = parse_property("x[0] > 1 && (y < 2 || x[4] == 1)").unwrap();
        assert_eq!(p.max_feature(), Some(4));
        assert!(p.bind(5).is_ok());
        assert_eq!(p.bind(4), Err(PropertyError::UnboundIndex { index: 4, features: 4 }));
    }

    #[test]
    fn display_round_trips() {
        for text in ["x[0] >= 7000 => y >= 500000", "!(y < -1.25) || x[2] != 3 && y > 1/3"] {
            let p = parse_property(text).unwrap();
            assert_eq!(parse_property(&format!("{p}")).unwrap(), p);
        }
    }

    proptest::proptest! {
        #[test]
        fn negation_flips(yv in -20i64..20, xv in -20i64..20, c in -10i64..10, d in -10i64..10) {
            let phi = parse_property(&format!("x[0] >= {c} => y < {d} || y == {c}")).unwrap();
            let x = [int(xv)];
            let y = int(yv);
            proptest::prop_assert_eq!(phi.clone().negate().evaluate(&x, &y).unwrap(), !phi.evaluate(&x, &y).unwrap());
        }
    }
}
