//! Exact rational helpers on top of `num_rational::BigRational`.

use alloc::string::String;
use core::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::ParseError;

/// Exact rational number used for every norm, weight and threshold.
pub type Q = BigRational;

/// `num / den` as an exact rational. Panics when `den == 0`.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `p`, `-p` or `p/q` (lowest terms are not required on input).
pub fn parse_q(s: &str) -> Result<Q, ParseError> {
    let s = s.trim();
    let bad = || ParseError::Rational(String::from(s));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(n, d))
        }
        None => BigInt::from_str(s).map(Q::from_integer).map_err(|_| bad()),
    }
}

/// Canonical lowest-terms text: `p` for integers, `p/q` otherwise.
pub fn fmt_q(x: &Q) -> String {
    alloc::format!("{}", x)
}

/// `x^k` for a non-negative integer exponent.
pub fn pow(x: &Q, k: u32) -> Q {
    let mut acc = Q::one();
    for _ in 0..k {
        acc *= x;
    }
    acc
}

fn exact_isqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &(&r * &r) == n {
        Some(r)
    } else {
        None
    }
}

/// The rational square root of `x` when `x` is the square of a rational.
pub fn exact_sqrt(x: &Q) -> Option<Q> {
    let n = exact_isqrt(x.numer())?;
    let d = exact_isqrt(x.denom())?;
    Some(Q::new(n, d))
}

/// A rational `r >= sqrt(x)` with `r - sqrt(x) <= 1/scale`, for `x >= 0`.
pub fn sqrt_upper(x: &Q, scale: u64) -> Q {
    if let Some(r) = exact_sqrt(x) {
        return r;
    }
    // ceil(sqrt(x) * scale) / scale
    let s = BigInt::from(scale);
    let scaled = x * Q::from_integer(&s * &s);
    let fl = scaled.floor().to_integer();
    let mut r = fl.sqrt();
    while Q::from_integer(&r * &r) < scaled {
        r += 1;
    }
    Q::new(r, s)
}

pub fn min_q<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a <= b {
        a
    } else {
        b
    }
}
