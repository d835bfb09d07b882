//! Exact rational helpers shared by the symbolic modules.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Q = BigRational;

/// Denominator bound used when a float has to be ingested as a rational.
pub const APPROX_DENOMINATOR: i64 = 1_000_000;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    match x.to_f64() {
        Some(v) if v.is_finite() => v,
        _ => {
            // Very large numerators/denominators: divide in pieces.
            let n = x.numer().to_f64().unwrap_or(f64::NAN);
            let d = x.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Prints `p/q`, or just `p` for integers.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.625` (exactly).
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Argument(format!("malformed rational `{s}`"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let d = num::pow(BigInt::from(10), frac.len());
    let v = Q::new(n, d);
    Ok(if neg { -v } else { v })
}

/// Best rational approximation with denominator at most `max_den`, by continued
/// fractions.  The flag reports whether the approximation is exact in f64.
pub fn approximate(x: f64, max_den: i64) -> Result<(Q, bool)> {
    if !x.is_finite() {
        return Err(Error::Argument(format!("non-finite value {x}")));
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut r = x.abs();
    loop {
        let a = r.floor();
        if a > 1e15 {
            break;
        }
        let a = a as i128;
        let p2 = a * p1 + p0;
        let q2 = a * q1 + q0;
        if q2 > max_den as i128 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = r - a as f64;
        if frac < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    if q1 == 0 {
        p1 = x.abs().round() as i128;
        q1 = 1;
    }
    let v = Q::new(BigInt::from(p1), BigInt::from(q1));
    let v = if x < 0.0 { -v } else { v };
    let exact = to_f64(&v) == x;
    Ok((v, exact))
}

pub fn is_positive(x: &Q) -> bool {
    x.is_positive()
}

pub fn abs(x: &Q) -> Q {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_q("3/4").unwrap(), q(3, 4));
        assert_eq!(parse_q("0.625").unwrap(), q(5, 8));
        assert_eq!(parse_q("-2").unwrap(), qi(-2));
        assert_eq!(parse_q(".5").unwrap(), q(1, 2));
        for bad in ["0.x", "", "1/0", "a/b", "1.2.3", "--1"] {
            assert!(parse_q(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn format_roundtrip() {
        for s in ["3/4", "-7/9", "5"] {
            assert_eq!(fmt_q(&parse_q(s).unwrap()), s);
        }
    }

    #[test]
    fn continued_fraction() {
        let (v, exact) = approximate(0.6, APPROX_DENOMINATOR).unwrap();
        assert_eq!(v, q(3, 5));
        assert!(exact);
        let (v, exact) = approximate(std::f64::consts::SQRT_2 / 2.0, APPROX_DENOMINATOR).unwrap();
        assert!(!exact);
        assert!((to_f64(&v) - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-11);
        assert!(*v.denom() <= BigInt::from(APPROX_DENOMINATOR));
    }
}
