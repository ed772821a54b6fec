//! Exact rational numbers and their text forms.
//!
//! Thresholds, leaf values, property constants and box bounds are all kept as
//! arbitrary-precision rationals so that prediction, the brute-force oracle and
//! the solver agree bit for bit.

use alloc::format;
use alloc::string::{String, ToString};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumberError {
    #[error("invalid number literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("exponent out of range in `{0}`")]
    Exponent(String),
    #[error("{0} is not a finite number")]
    NotFinite(f64),
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses a decimal literal (`-12`, `3.25`, `1e-3`, `+4.5E2`) or an exact
/// quotient `p/q`, without going through binary floating point.
pub fn parse_rational(text: &str) -> Result<Rational, NumberError> {
    let t = text.trim();
    if let Some((num, den)) = t.split_once('/') {
        let n = parse_decimal(num.trim()).ok_or_else(|| NumberError::Invalid(t.to_string()))?;
        let d = parse_decimal(den.trim()).ok_or_else(|| NumberError::Invalid(t.to_string()))?;
        let (n, d) = (n?, d?);
        if d.is_zero() {
            return Err(NumberError::ZeroDenominator(t.to_string()));
        }
        return Ok(n / d);
    }
    parse_decimal(t).ok_or_else(|| NumberError::Invalid(t.to_string()))?
}

fn parse_decimal(t: &str) -> Option<Result<Rational, NumberError>> {
    let (negative, body) = match t.as_bytes().first()? {
        b'-' => (true, &t[1..]),
        b'+' => (false, &t[1..]),
        _ => (false, t),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let (whole, frac) = match mantissa.split_once('.') {
        Some((w, f)) => (w, f),
        None => (mantissa, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut exp: i64 = 0;
    if let Some(e) = exponent {
        let (sign, digits) = match e.as_bytes().first()? {
            b'-' => (-1, &e[1..]),
            b'+' => (1, &e[1..]),
            _ => (1, e),
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        exp = match digits.parse::<i64>() {
            Ok(v) if v <= 4096 => sign * v,
            _ => return Some(Err(NumberError::Exponent(t.to_string()))),
        };
    }
    let mut digits = String::with_capacity(whole.len() + frac.len());
    digits.push_str(whole);
    digits.push_str(frac);
    let mut value = Rational::from_integer(digits.parse::<BigInt>().ok()?);
    exp -= frac.len() as i64;
    let scale = Rational::from_integer(BigInt::from(10u32).pow(exp.unsigned_abs() as u32));
    if exp >= 0 {
        value *= scale;
    } else {
        value /= scale;
    }
    Some(Ok(if negative { -value } else { value }))
}

/// Exact conversion of a finite `f64` into a rational.
pub fn from_f64(value: f64) -> Result<Rational, NumberError> {
    Rational::from_float(value).ok_or(NumberError::NotFinite(value))
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// If the denominator is of the form 2^a·5^b, returns the number of decimal
/// places needed to write the value exactly.
fn terminating_places(value: &Rational) -> Option<u32> {
    let mut den = value.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0u32, 0u32);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    den.is_one().then_some(twos.max(fives))
}

fn decimal_digits(value: &Rational, places: u32) -> String {
    let scaled = (value.abs() * Rational::from_integer(BigInt::from(10u32).pow(places))).to_integer();
    let mut s = scaled.to_string();
    if places > 0 {
        let places = places as usize;
        if s.len() <= places {
            s = format!("{}{}", "0".repeat(places + 1 - s.len()), s);
        }
        s.insert(s.len() - places, '.');
    }
    s
}

/// Canonical text form used in every file the tools write: a plain decimal
/// when the value has a terminating expansion, `p/q` otherwise.
pub fn format_rational(value: &Rational) -> String {
    match terminating_places(value) {
        Some(places) => {
            let digits = decimal_digits(value, places);
            if value.is_negative() {
                format!("-{digits}")
            } else {
                digits
            }
        }
        None => format!("{}/{}", value.numer(), value.denom()),
    }
}

/// SMT-LIB real literal, e.g. `3.5`, `(- 2.0)`, `(/ 1.0 3.0)`.
pub fn smt_real(value: &Rational) -> String {
    let magnitude = match terminating_places(value) {
        Some(places) => {
            let mut d = decimal_digits(value, places);
            if places == 0 {
                d.push_str(".0");
            }
            d
        }
        None => format!("(/ {}.0 {}.0)", value.numer().abs(), value.denom()),
    };
    if value.is_negative() {
        format!("(- {magnitude})")
    } else {
        magnitude
    }
}

/// Rational from an integer ratio, for tests and generators.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_forms() {
        assert_eq!(parse_rational("7000").unwrap(), int(7000));
        assert_eq!(parse_rational("-2.5").unwrap(), ratio(-5, 2));
        assert_eq!(parse_rational("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_rational("1e-3").unwrap(), ratio(1, 1000));
        assert_eq!(parse_rational("+4.5E2").unwrap(), int(450));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("3.").unwrap(), int(3));
        assert_eq!(parse_rational("1/3").unwrap(), ratio(1, 3));
        assert_eq!(parse_rational("-7/21").unwrap(), ratio(-1, 3));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "-", ".", "1.2.3", "abc", "1e", "0x10", "1/0", "nan"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_rational(&int(5)), "5");
        assert_eq!(format_rational(&ratio(-5, 2)), "-2.5");
        assert_eq!(format_rational(&ratio(1, 40)), "0.025");
        assert_eq!(format_rational(&ratio(-1, 3)), "-1/3");
        assert_eq!(format_rational(&int(0)), "0");
    }

    #[test]
    fn smt_literals() {
        assert_eq!(smt_real(&int(5)), "5.0");
        assert_eq!(smt_real(&ratio(7, 2)), "3.5");
        assert_eq!(smt_real(&int(-2)), "(- 2.0)");
        assert_eq!(smt_real(&ratio(-1, 3)), "(- (/ 1.0 3.0))");
        assert_eq!(smt_real(&ratio(-1, 20)), "(- 0.05)");
    }

    #[test]
    fn f64_conversion_is_exact() {
        assert_eq!(from_f64(0.5).unwrap(), ratio(1, 2));
        assert_eq!(from_f64(100.0).unwrap(), int(100));
        assert!(from_f64(f64::NAN).is_err());
    }

    proptest::proptest! {
        #[test]
        fn format_parse_round_trip(n in -1_000_000i64..1_000_000, d in 1i64..5000) {
            let v = ratio(n, d);
            proptest::prop_assert_eq!(parse_rational(&format_rational(&v)).unwrap(), v);
        }
    }
}
