//! Minimal exact rationals on checked i128 arithmetic.
//!
//! The polynomial basis transforms and body geometry need exactness with
//! mod-1 semantics under control; overflow surfaces as a capacity error
//! instead of a silent wrap or a panic.

use crate::error::{Error, Result};
use serde::Serialize;
use std::cmp::Ordering;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Rat {
    num: i128,
    den: i128,
}

fn gcd128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl Rat {
    pub const ZERO: Rat = Rat { num: 0, den: 1 };
    pub const ONE: Rat = Rat { num: 1, den: 1 };

    pub fn new(num: i128, den: i128) -> Result<Rat> {
        if den == 0 {
            return Err(Error::domain("rational with zero denominator"));
        }
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd128(num, den);
        Ok(Rat {
            num: sign * num / g,
            den: (den / g).abs(),
        })
    }

    pub fn from_int(n: i64) -> Rat {
        Rat {
            num: n as i128,
            den: 1,
        }
    }

    pub fn num(&self) -> i128 {
        self.num
    }

    pub fn den(&self) -> i128 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn overflow() -> Error {
        Error::capacity("rational arithmetic overflows i128".to_string())
    }

    pub fn checked_add(&self, other: &Rat) -> Result<Rat> {
        let num = self
            .num
            .checked_mul(other.den)
            .and_then(|a| other.num.checked_mul(self.den).and_then(|b| a.checked_add(b)))
            .ok_or_else(Self::overflow)?;
        let den = self.den.checked_mul(other.den).ok_or_else(Self::overflow)?;
        Rat::new(num, den)
    }

    pub fn checked_sub(&self, other: &Rat) -> Result<Rat> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Rat) -> Result<Rat> {
        // Cross-reduce first to keep intermediates small.
        let g1 = gcd128(self.num, other.den);
        let g2 = gcd128(other.num, self.den);
        let num = (self.num / g1)
            .checked_mul(other.num / g2)
            .ok_or_else(Self::overflow)?;
        let den = (self.den / g2)
            .checked_mul(other.den / g1)
            .ok_or_else(Self::overflow)?;
        Rat::new(num, den)
    }

    pub fn checked_div(&self, other: &Rat) -> Result<Rat> {
        if other.num == 0 {
            return Err(Error::domain("division by zero rational"));
        }
        self.checked_mul(&Rat {
            num: other.den * other.num.signum(),
            den: other.num.abs(),
        })
    }

    pub fn neg(&self) -> Rat {
        Rat {
            num: -self.num,
            den: self.den,
        }
    }

    /// Representative in `[0, 1)`.
    pub fn mod1(&self) -> Rat {
        Rat {
            num: self.num.rem_euclid(self.den),
            den: self.den,
        }
    }

    /// Distance to the nearest integer, as an exact rational.
    pub fn dist_to_integer(&self) -> Rat {
        let frac = self.mod1();
        let complement = Rat {
            num: frac.den - frac.num,
            den: frac.den,
        };
        if frac <= complement {
            frac
        } else {
            complement
        }
    }

    pub fn checked_cmp(&self, other: &Rat) -> Result<Ordering> {
        let lhs = self.num.checked_mul(other.den).ok_or_else(Self::overflow)?;
        let rhs = other.num.checked_mul(self.den).ok_or_else(Self::overflow)?;
        Ok(lhs.cmp(&rhs))
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.checked_cmp(other).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_reduction() {
        let a = Rat::new(6, 4).unwrap();
        assert_eq!((a.num(), a.den()), (3, 2));
        let b = Rat::new(1, -3).unwrap();
        assert_eq!((b.num(), b.den()), (-1, 3));
        let s = a.checked_add(&b).unwrap();
        assert_eq!((s.num(), s.den()), (7, 6));
        let p = a.checked_mul(&b).unwrap();
        assert_eq!((p.num(), p.den()), (-1, 2));
        assert!(Rat::new(1, 0).is_err());
    }

    #[test]
    fn mod1_and_distance() {
        let x = Rat::new(-1, 3).unwrap();
        assert_eq!(x.mod1(), Rat::new(2, 3).unwrap());
        assert_eq!(x.dist_to_integer(), Rat::new(1, 3).unwrap());
        let y = Rat::new(7, 2).unwrap();
        assert_eq!(y.dist_to_integer(), Rat::new(1, 2).unwrap());
        assert_eq!(Rat::from_int(5).dist_to_integer(), Rat::ZERO);
    }

    #[test]
    fn overflow_is_reported() {
        let big = Rat::new(i128::MAX / 2, 1).unwrap();
        assert!(big.checked_mul(&big).is_err());
    }
}
