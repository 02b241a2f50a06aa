//! Exact rational arithmetic helpers.
//!
//! All recorded constants and ledger values are arbitrary-precision rationals;
//! nothing in a report is ever rounded. The canonical text rendering is
//! `"n"` for integers and `"n/d"` (reduced, positive denominator) otherwise.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational.
pub type Rat = num_rational::BigRational;

pub fn rat_u(n: u64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_u128(n: u128) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `n / d` with `d > 0`.
pub fn rat_frac(n: u64, d: u64) -> Rat {
    assert!(d > 0, "denominator must be positive");
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// `r^k` for small nonnegative exponents.
pub fn rat_pow(r: &Rat, k: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..k {
        acc *= r;
    }
    acc
}

/// Canonical rendering: `"27"` or `"27/4"`.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `"3"`, `"-3"`, `"1/4"`, or a plain decimal like `"0.25"` exactly.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let num: BigInt = n.trim().parse().ok()?;
        let den: BigInt = d.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Rat::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int.trim_start().starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().ok()?
        };
        let frac_num: BigInt = frac.parse().ok()?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_rat = Rat::new(frac_num, scale);
        let whole = Rat::from_integer(int_part);
        return Some(if negative { whole - frac_rat } else { whole + frac_rat });
    }
    let n: BigInt = s.parse().ok()?;
    Some(Rat::from_integer(n))
}

/// Largest integer `<= r`, for nonnegative `r` that fits in `u64`.
pub fn floor_u64(r: &Rat) -> u64 {
    assert!(!r.is_negative());
    r.floor().to_integer().to_u64().expect("floor fits in u64")
}

/// Smallest integer `>= r`, for nonnegative `r` that fits in `u64`.
pub fn ceil_u64(r: &Rat) -> u64 {
    assert!(!r.is_negative());
    r.ceil().to_integer().to_u64().expect("ceil fits in u64")
}
