//! Exact arithmetic in `F_p` and dense set algebra.
//!
//! Elements are `u64` values in `[0, p)`. Sets are dense bit indicators of
//! length `p` with a cached cardinality, which makes membership O(1) and keeps
//! every set operation an exact double loop. Target primes are desk-scale
//! (roughly `p <= 10^7`); nothing here is constant-time or cryptographic.

use crate::{Error, Result};
use std::fmt;

/// An odd prime modulus `p >= 3`, validated at construction by a
/// deterministic Miller-Rabin check (the 12-base set that is exact for all
/// 64-bit integers).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prime(u64);

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality check for `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n.is_multiple_of(q) {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl Prime {
    pub fn new(p: u64) -> Result<Prime> {
        if p < 3 || !is_prime_u64(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Prime(p))
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.0
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.0 && b < self.0);
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.0 && b < self.0);
        if a >= b {
            a - b
        } else {
            self.0 - (b - a)
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        debug_assert!(a < self.0);
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(a < self.0 && b < self.0);
        mul_mod_u64(a, b, self.0)
    }

    pub fn pow(&self, a: u64, e: u64) -> u64 {
        pow_mod_u64(a, e, self.0)
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        debug_assert!(a < self.0);
        let (mut r0, mut r1) = (self.0 as i128, a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert!(r0 == 1, "gcd(a, p) must be 1 for prime p");
        let p = self.0 as i128;
        Ok((((t0 % p) + p) % p) as u64)
    }

    pub fn div(&self, a: u64, b: u64) -> Result<u64> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Table of inverses for all of `[1, p)`, built by the linear sieve.
    /// Worth the O(p) cost for ratio-heavy operations on small primes.
    fn inverse_table(&self) -> Vec<u64> {
        let p = self.0;
        let mut inv = vec![0u64; p as usize];
        inv[1] = 1;
        for i in 2..p {
            // inv[i] = -(p / i) * inv[p mod i]
            inv[i as usize] = self.mul(p - p / i, inv[(p % i) as usize]);
        }
        inv
    }

    fn check_element(&self, value: u64) -> Result<()> {
        if value >= self.0 {
            return Err(Error::OutOfRange { value, prime: self.0 });
        }
        Ok(())
    }
}

/// Threshold below which ratio-heavy operations precompute a full inverse
/// table instead of running extended Euclid per element.
const INVERSE_TABLE_LIMIT: u64 = 1 << 16;

/// Strategy for inversion shared by the ratio-type operations.
enum Inverter {
    Table(Vec<u64>),
    Euclid(Prime),
}

impl Inverter {
    fn new(p: Prime) -> Inverter {
        if p.value() <= INVERSE_TABLE_LIMIT {
            Inverter::Table(p.inverse_table())
        } else {
            Inverter::Euclid(p)
        }
    }

    fn inv(&self, a: u64) -> u64 {
        match self {
            Inverter::Table(t) => t[a as usize],
            Inverter::Euclid(p) => p.inv(a).expect("nonzero by construction"),
        }
    }
}

/// A finite subset of `F_p`, stored as a dense bit indicator plus a cached
/// cardinality.
///
/// `0` is representable; constructors that model subsets of the
/// multiplicative group reject it explicitly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementSet {
    prime: Prime,
    words: Vec<u64>,
    card: usize,
}

impl ElementSet {
    pub fn empty(prime: Prime) -> ElementSet {
        let words = vec![0u64; (prime.value() as usize).div_ceil(64)];
        ElementSet { prime, words, card: 0 }
    }

    /// Build from arbitrary members in `[0, p)`; duplicates collapse.
    pub fn from_members(prime: Prime, members: &[u64]) -> Result<ElementSet> {
        let mut set = ElementSet::empty(prime);
        for &m in members {
            prime.check_element(m)?;
            set.insert(m);
        }
        Ok(set)
    }

    /// Build a subset of the multiplicative group: `0` is rejected.
    pub fn from_nonzero_members(prime: Prime, members: &[u64]) -> Result<ElementSet> {
        if members.contains(&0) {
            return Err(Error::ZeroMember);
        }
        ElementSet::from_members(prime, members)
    }

    #[inline]
    pub fn prime(&self) -> Prime {
        self.prime
    }

    #[inline]
    pub fn cardinality(&self) -> usize {
        self.card
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.card == 0
    }

    #[inline]
    pub fn contains(&self, value: u64) -> bool {
        debug_assert!(value < self.prime.value());
        self.words[(value >> 6) as usize] >> (value & 63) & 1 == 1
    }

    /// Insert; returns true if the element was new.
    pub fn insert(&mut self, value: u64) -> bool {
        debug_assert!(value < self.prime.value());
        let w = &mut self.words[(value >> 6) as usize];
        let bit = 1u64 << (value & 63);
        if *w & bit == 0 {
            *w |= bit;
            self.card += 1;
            true
        } else {
            false
        }
    }

    /// Remove; returns true if the element was present.
    pub fn remove(&mut self, value: u64) -> bool {
        debug_assert!(value < self.prime.value());
        let w = &mut self.words[(value >> 6) as usize];
        let bit = 1u64 << (value & 63);
        if *w & bit != 0 {
            *w &= !bit;
            self.card -= 1;
            true
        } else {
            false
        }
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros();
                    w &= w - 1;
                    Some((i as u64) << 6 | b as u64)
                }
            })
        })
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }

    pub fn min_element(&self) -> Option<u64> {
        self.iter().next()
    }

    fn check_same_prime(&self, other: &ElementSet) -> Result<()> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch {
                left: self.prime.value(),
                right: other.prime.value(),
            });
        }
        Ok(())
    }

    /// `{a + b : a in self, b in other}`.
    pub fn sumset(&self, other: &ElementSet) -> Result<ElementSet> {
        self.check_same_prime(other)?;
        let p = self.prime;
        let mut out = ElementSet::empty(p);
        for a in self.iter() {
            for b in other.iter() {
                out.insert(p.add(a, b));
            }
        }
        Ok(out)
    }

    /// `{a - b : a in self, b in other}`.
    pub fn difference_set(&self, other: &ElementSet) -> Result<ElementSet> {
        self.check_same_prime(other)?;
        let p = self.prime;
        let mut out = ElementSet::empty(p);
        for a in self.iter() {
            for b in other.iter() {
                out.insert(p.sub(a, b));
            }
        }
        Ok(out)
    }

    /// `{a * b : a in self, b in other}`.
    pub fn product_set(&self, other: &ElementSet) -> Result<ElementSet> {
        self.check_same_prime(other)?;
        let p = self.prime;
        let mut out = ElementSet::empty(p);
        for a in self.iter() {
            for b in other.iter() {
                out.insert(p.mul(a, b));
            }
        }
        Ok(out)
    }

    /// `{a / b : a in self, b in other}`; requires `0` not in `other`.
    pub fn ratio_set(&self, other: &ElementSet) -> Result<ElementSet> {
        self.check_same_prime(other)?;
        if other.contains(0) {
            return Err(Error::ZeroDivisor);
        }
        let p = self.prime;
        let inverter = Inverter::new(p);
        let mut out = ElementSet::empty(p);
        for b in other.iter() {
            let ib = inverter.inv(b);
            for a in self.iter() {
                out.insert(p.mul(a, ib));
            }
        }
        Ok(out)
    }

    /// `{r * a}`; cardinality-preserving, `r != 0`.
    pub fn dilate(&self, r: u64) -> Result<ElementSet> {
        if r == 0 {
            return Err(Error::ZeroDilation);
        }
        self.prime.check_element(r)?;
        let mut out = ElementSet::empty(self.prime);
        for a in self.iter() {
            out.insert(self.prime.mul(r, a));
        }
        debug_assert_eq!(out.card, self.card);
        Ok(out)
    }

    /// `{a + t}`; cardinality-preserving.
    pub fn translate(&self, t: u64) -> Result<ElementSet> {
        self.prime.check_element(t)?;
        let mut out = ElementSet::empty(self.prime);
        for a in self.iter() {
            out.insert(self.prime.add(a, t));
        }
        debug_assert_eq!(out.card, self.card);
        Ok(out)
    }

    pub fn intersection(&self, other: &ElementSet) -> Result<ElementSet> {
        self.check_same_prime(other)?;
        let words: Vec<u64> = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        let card = words.iter().map(|w| w.count_ones() as usize).sum();
        Ok(ElementSet { prime: self.prime, words, card })
    }

    pub fn intersection_size(&self, other: &ElementSet) -> usize {
        debug_assert_eq!(self.prime, other.prime);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn union(&self, other: &ElementSet) -> Result<ElementSet> {
        self.check_same_prime(other)?;
        let words: Vec<u64> = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a | b)
            .collect();
        let card = words.iter().map(|w| w.count_ones() as usize).sum();
        Ok(ElementSet { prime: self.prime, words, card })
    }

    /// Set difference `self \ other`.
    pub fn minus(&self, other: &ElementSet) -> Result<ElementSet> {
        self.check_same_prime(other)?;
        let words: Vec<u64> = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & !b)
            .collect();
        let card = words.iter().map(|w| w.count_ones() as usize).sum();
        Ok(ElementSet { prime: self.prime, words, card })
    }

    pub fn is_subset_of(&self, other: &ElementSet) -> bool {
        debug_assert_eq!(self.prime, other.prime);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }
}

/// Multiplicative inverse of `a` modulo `p`, as a standalone operation.
pub fn mod_inverse(prime: Prime, a: u64) -> Result<u64> {
    prime.check_element(a)?;
    prime.inv(a)
}

/// The ratio-of-differences set `{(u - v) / (s - t)}` over `u != v` in `s1`
/// and `s != t` in `s2`. Never contains zero. Both sets need at least two
/// elements.
pub fn ratio_of_differences(s1: &ElementSet, s2: &ElementSet) -> Result<ElementSet> {
    s1.check_same_prime(s2)?;
    if s1.cardinality() < 2 {
        return Err(Error::SetTooSmall { need: 2, got: s1.cardinality() });
    }
    if s2.cardinality() < 2 {
        return Err(Error::SetTooSmall { need: 2, got: s2.cardinality() });
    }
    let p = s1.prime();
    // Nonzero pairwise differences of each set, then their exact quotient set.
    let mut num = ElementSet::empty(p);
    for u in s1.iter() {
        for v in s1.iter() {
            if u != v {
                num.insert(p.sub(u, v));
            }
        }
    }
    let mut den = ElementSet::empty(p);
    for s in s2.iter() {
        for t in s2.iter() {
            if s != t {
                den.insert(p.sub(s, t));
            }
        }
    }
    num.ratio_set(&den)
}

impl fmt::Display for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_set_literal(self))
    }
}

/// Render a set in the literal format `p=7:{1,2,4}`.
pub fn format_set_literal(set: &ElementSet) -> String {
    let members: Vec<String> = set.iter().map(|m| m.to_string()).collect();
    format!("p={}:{{{}}}", set.prime().value(), members.join(","))
}

/// Parse the literal format `p=<prime>:{e1,e2,...}`. Reports a zero-based
/// column with each error.
pub fn parse_set_literal(input: &str) -> Result<ElementSet> {
    let s = input.trim();
    let base = input.len() - input.trim_start().len();
    let err = |pos: usize, msg: &str| Error::Parse { pos: base + pos, msg: msg.to_string() };

    let rest = s
        .strip_prefix("p=")
        .ok_or_else(|| err(0, "expected literal to start with `p=`"))?;
    let colon = rest
        .find(':')
        .ok_or_else(|| err(s.len(), "expected `:` after the prime"))?;
    let p_str = &rest[..colon];
    let p_val: u64 = p_str
        .parse()
        .map_err(|_| err(2, "prime must be a positive integer"))?;
    let prime = Prime::new(p_val)?;

    let body = &rest[colon + 1..];
    let body_off = 2 + colon + 1;
    let inner = body
        .strip_prefix('{')
        .ok_or_else(|| err(body_off, "expected `{` to open the member list"))?;
    let inner = inner
        .strip_suffix('}')
        .ok_or_else(|| err(s.len().saturating_sub(1), "expected `}` to close the member list"))?;

    let mut set = ElementSet::empty(prime);
    if inner.trim().is_empty() {
        return Ok(set);
    }
    let mut pos = body_off + 1;
    for piece in inner.split(',') {
        let trimmed = piece.trim();
        let value: u64 = trimmed
            .parse()
            .map_err(|_| err(pos, "set member must be a nonnegative integer"))?;
        if value >= prime.value() {
            return Err(err(pos, "set member must be smaller than the prime"));
        }
        set.insert(value);
        pos += piece.len() + 1;
    }
    Ok(set)
}
