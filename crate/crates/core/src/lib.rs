//! Exact computational toolkit for sum-product set arithmetic in prime fields.
//!
//! The crate is organized around exact, deterministic primitives:
//!
//! * [`fp`] — arithmetic in `F_p` and dense set algebra (sum/difference/
//!   product/ratio sets, dilates, translates, ratio-of-differences sets);
//! * [`energy`] — multiplicative energy, per-slope line incidence statistics
//!   of `A x A`, dyadic slope groups, and fiber sets;
//! * [`lemma`] — constructive refinement routines: greedy translate covers,
//!   iterated minimal-ratio subset refinement, and the popular-pair focus
//!   selection;
//! * [`trace`] — a case-dispatched pipeline that runs the whole inequality
//!   chain on a concrete set and records every step as an exact ledger entry;
//! * [`search`] — exhaustive / randomized / annealed extremal-set search and
//!   log-log exponent fitting.
//!
//! Everything outside [`search`]'s floating-point fits is computed in exact
//! integer or rational arithmetic.

pub mod energy;
pub mod fp;
pub mod lemma;
pub mod rat;
pub mod rng;
pub mod search;
pub mod trace;

use std::fmt;

pub use fp::{ElementSet, Prime};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by all modules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// The modulus is not an odd prime `>= 3`.
    NotPrime(u64),
    /// Two operands live in different prime fields.
    PrimeMismatch { left: u64, right: u64 },
    /// An element is outside `[0, p)`.
    OutOfRange { value: u64, prime: u64 },
    /// Multiplicative inverse of zero requested.
    ZeroInverse,
    /// Dilation by zero requested.
    ZeroDilation,
    /// Division-style set operation with `0` in the divisor set.
    ZeroDivisor,
    /// A set that must avoid `0` contains it.
    ZeroMember,
    /// An operation requires a nonempty set.
    EmptySet,
    /// An operation requires a larger set.
    SetTooSmall { need: usize, got: usize },
    /// A parameter violates its documented range.
    Invalid(String),
    /// Text input could not be parsed; `pos` is a zero-based column.
    Parse { pos: usize, msg: String },
    /// The standing size hypothesis is violated.
    Hypothesis(String),
    /// An enumeration would exceed the configured budget.
    Budget { required: u128, budget: u128 },
    /// A pipeline stage degenerated below its configured floors.
    Degenerate(String),
    /// Exponent fitting needs more distinct sizes.
    TooFewSizes { need: usize, got: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotPrime(p) => write!(f, "{p} is not an odd prime >= 3"),
            Error::PrimeMismatch { left, right } => {
                write!(f, "prime mismatch: p={left} vs p={right}")
            }
            Error::OutOfRange { value, prime } => {
                write!(f, "element {value} is outside [0, {prime})")
            }
            Error::ZeroInverse => write!(f, "zero has no multiplicative inverse"),
            Error::ZeroDilation => write!(f, "dilation factor must be nonzero"),
            Error::ZeroDivisor => write!(f, "divisor set contains zero"),
            Error::ZeroMember => write!(f, "set must not contain zero"),
            Error::EmptySet => write!(f, "operation requires a nonempty set"),
            Error::SetTooSmall { need, got } => {
                write!(f, "set too small: need at least {need} elements, got {got}")
            }
            Error::Invalid(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Parse { pos, msg } => write!(f, "parse error at column {pos}: {msg}"),
            Error::Hypothesis(msg) => write!(f, "hypothesis violated: {msg}"),
            Error::Budget { required, budget } => {
                write!(f, "enumeration of {required} states exceeds budget {budget}")
            }
            Error::Degenerate(msg) => write!(f, "degenerate instance: {msg}"),
            Error::TooFewSizes { need, got } => {
                write!(f, "need at least {need} distinct sizes, got {got}")
            }
        }
    }
}

impl std::error::Error for Error {}
