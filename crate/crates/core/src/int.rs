//! Unbounded integers with an inline fast path.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Small(i64),
    // Invariant: never representable as i64.
    Big(Arc<BigInt>),
}

/// An arbitrary-precision integer. Values that fit in an `i64` stay inline.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Int(Repr);

impl Int {
    pub fn to_big(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n) => BigInt::from(*n),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn from_big(b: BigInt) -> Int {
        match b.to_i64() {
            Some(n) => Int(Repr::Small(n)),
            None => Int(Repr::Big(Arc::new(b))),
        }
    }

    pub fn to_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small(n) => Some(*n),
            Repr::Big(_) => None,
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n) => *n < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0))
    }

    /// Index into a sequence of length `len`, if in range.
    pub fn as_index(&self, len: usize) -> Option<usize> {
        match self.0 {
            Repr::Small(n) if n >= 0 && (n as u64) < len as u64 => Some(n as usize),
            _ => None,
        }
    }

    fn binop(
        &self,
        other: &Int,
        small: fn(i64, i64) -> Option<i64>,
        big: fn(&BigInt, &BigInt) -> BigInt,
    ) -> Int {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &other.0) {
            if let Some(r) = small(*a, *b) {
                return Int(Repr::Small(r));
            }
        }
        Int::from_big(big(&self.to_big(), &other.to_big()))
    }

    pub fn add(&self, other: &Int) -> Int {
        self.binop(other, i64::checked_add, |a, b| a + b)
    }

    pub fn sub(&self, other: &Int) -> Int {
        self.binop(other, i64::checked_sub, |a, b| a - b)
    }

    pub fn mul(&self, other: &Int) -> Int {
        self.binop(other, i64::checked_mul, |a, b| a * b)
    }

    /// Euclidean quotient; division by zero yields zero.
    pub fn div(&self, other: &Int) -> Int {
        if other.is_zero() {
            return Int::from(0);
        }
        self.binop(other, i64::checked_div_euclid, |a, b| {
            let (q, r) = (a / b, a % b);
            if r.is_negative() {
                if b.is_positive() {
                    q - 1
                } else {
                    q + 1
                }
            } else {
                q
            }
        })
    }

    /// Euclidean remainder, always non-negative; modulo zero yields zero.
    pub fn rem(&self, other: &Int) -> Int {
        if other.is_zero() {
            return Int::from(0);
        }
        self.binop(other, i64::checked_rem_euclid, |a, b| {
            let r = a % b;
            if r.is_negative() {
                r + b.abs()
            } else {
                r
            }
        })
    }
}

impl From<i64> for Int {
    fn from(n: i64) -> Int {
        Int(Repr::Small(n))
    }
}

impl From<BigInt> for Int {
    fn from(b: BigInt) -> Int {
        Int::from_big(b)
    }
}

impl Ord for Int {
    fn cmp(&self, other: &Int) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a.cmp(b),
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Int {
    fn partial_cmp(&self, other: &Int) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Int {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n) => write!(f, "{n}"),
            Repr::Big(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Debug for Int {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl std::str::FromStr for Int {
    type Err = num_bigint::ParseBigIntError;

    fn from_str(s: &str) -> Result<Int, Self::Err> {
        match s.parse::<i64>() {
            Ok(n) => Ok(Int::from(n)),
            Err(_) => s.parse::<BigInt>().map(Int::from_big),
        }
    }
}
