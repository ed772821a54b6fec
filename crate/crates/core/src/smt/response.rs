//! Reading the solver's answer: the verdict line and the `get-value` list.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Zero;

use crate::num::{parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = alloc::vec![Vec::new()];
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().ok_or_else(|| unbalanced(i))?;
                stack.last_mut().ok_or_else(|| unbalanced(i))?.push(Sexp::List(done));
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '"')) if matches!(chars.peek(), Some((_, '"'))) => {
                            chars.next();
                            s.push('"');
                        }
                        Some((_, '"')) => break,
                        Some((_, ch)) => s.push(ch),
                        None => return Err("unterminated string literal".to_string()),
                    }
                }
                stack.last_mut().ok_or_else(|| unbalanced(i))?.push(Sexp::Atom(s));
            }
            ';' => {
                for (_, ch) in chars.by_ref() {
                    if ch == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {}
            _ => {
                let mut s = String::new();
                s.push(c);
                while let Some(&(_, ch)) = chars.peek() {
                    if ch.is_whitespace() || ch == '(' || ch == ')' || ch == '"' {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                stack.last_mut().ok_or_else(|| unbalanced(i))?.push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced parentheses at end of output".to_string());
    }
    Ok(stack.pop().unwrap_or_default())
}

fn unbalanced(at: usize) -> String {
    alloc::format!("unbalanced `)` at byte {at}")
}

/// Value syntax solvers print for reals and integers: numerals, decimals,
/// `(- v)`, `(/ a b)` and nestings of these.
pub fn parse_value(e: &Sexp) -> Result<Rational, String> {
    match e {
        Sexp::Atom(a) => parse_rational(a).map_err(|err| err.to_string()),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), v] if op == "-" => Ok(-parse_value(v)?),
            [Sexp::Atom(op), a, b] if op == "/" => {
                let den = parse_value(b)?;
                if den.is_zero() {
                    return Err("division by zero in solver value".to_string());
                }
                Ok(parse_value(a)? / den)
            }
            [Sexp::Atom(op), a, b] if op == "-" => Ok(parse_value(a)? - parse_value(b)?),
            _ => Err(alloc::format!("unsupported value form {e:?}")),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Sat(BTreeMap<String, Rational>),
    Unsat,
    Unknown,
}

/// Interprets the full standard output of one solver run.
pub fn parse_response(output: &str) -> Result<Verdict, String> {
    let exprs = parse_sexps(output)?;
    let mut iter = exprs.into_iter();
    loop {
        match iter.next() {
            None => return Err("solver produced no verdict".to_string()),
            Some(Sexp::Atom(a)) if a == "sat" => break,
            Some(Sexp::Atom(a)) if a == "unsat" => return Ok(Verdict::Unsat),
            Some(Sexp::Atom(a)) if a == "unknown" => return Ok(Verdict::Unknown),
            Some(Sexp::Atom(a)) if a == "success" => continue,
            Some(Sexp::List(items)) => {
                if let Some(Sexp::Atom(head)) = items.first() {
                    if head == "error" {
                        let msg = match items.get(1) {
                            Some(Sexp::Atom(m)) => m.clone(),
                            _ => String::from("unspecified"),
                        };
                        return Err(alloc::format!("solver error: {msg}"));
                    }
                }
                return Err("unexpected list before verdict".to_string());
            }
            Some(Sexp::Atom(other)) => return Err(alloc::format!("unexpected token `{other}` before verdict")),
        }
    }
    let values = match iter.next() {
        Some(Sexp::List(pairs)) => pairs,
        _ => return Err("missing get-value response after sat".to_string()),
    };
    let mut model = BTreeMap::new();
    for pair in values {
        match pair {
            Sexp::List(kv) if kv.len() == 2 => {
                let mut kv = kv.into_iter();
                let (Some(Sexp::Atom(name)), Some(value)) = (kv.next(), kv.next()) else {
                    return Err("malformed get-value entry".to_string());
                };
                model.insert(name, parse_value(&value)?);
            }
            Sexp::List(items) if items.first() == Some(&Sexp::Atom("error".to_string())) => {
                return Err("solver error in get-value".to_string());
            }
            _ => return Err("malformed get-value entry".to_string()),
        }
    }
    Ok(Verdict::Sat(model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, ratio};

    #[test]
    fn value_shapes() {
        let v = |t: &str| parse_value(&parse_sexps(t).unwrap()[0]).unwrap();
        assert_eq!(v("3"), int(3));
        assert_eq!(v("2.5"), ratio(5, 2));
        assert_eq!(v("(- 4)"), int(-4));
        assert_eq!(v("(/ 1.0 3.0)"), ratio(1, 3));
        assert_eq!(v("(- (/ 7 2))"), ratio(-7, 2));
        assert_eq!(v("(/ (- 7) 2)"), ratio(-7, 2));
        assert!(parse_value(&parse_sexps("(/ 1 0)").unwrap()[0]).is_err());
        assert!(parse_value(&parse_sexps("(root-obj (+ x 1) 1)").unwrap()[0]).is_err());
    }

    #[test]
    fn sat_response() {
        let out = "sat\n((x0 (- 3))\n (x1 (/ 1.0 4.0))\n (y (- 1.0)))\n";
        let Verdict::Sat(m) = parse_response(out).unwrap() else { panic!() };
        assert_eq!(m["x0"], int(-3));
        assert_eq!(m["x1"], ratio(1, 4));
        assert_eq!(m["y"], int(-1));
    }

    #[test]
    fn other_verdicts() {
        assert_eq!(
            parse_response("unsat\n(error \"line 9 column 10: model is not available\")\n").unwrap(),
            Verdict::Unsat
        );
        assert_eq!(parse_response("unknown\n").unwrap(), Verdict::Unknown);
        assert!(parse_response("(error \"unknown logic\")\nsat\n").is_err());
        assert!(parse_response("").is_err());
        assert!(parse_response("sat\n").is_err());
        assert!(parse_response("sat\n((x0 1)").is_err());
    }
}
