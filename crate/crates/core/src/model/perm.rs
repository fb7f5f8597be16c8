//! Dyadic permission fractions `k / 2^n`.
//!
//! Permission tables range over `[0, 1]`; arithmetic is exact. The only
//! permission literals expressible in source are `1` and its repeated
//! halves, but tables may hold any dyadic (e.g. `3/4` after joining `1/2`
//! and `1/4`).

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::ast::SpecVal;

/// A non-negative dyadic rational `num / 2^den_log`, kept normalized
/// (`num` odd or zero; zero has `den_log == 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Perm {
    num: u64,
    den_log: u32,
}

impl Perm {
    pub const ZERO: Perm = Perm { num: 0, den_log: 0 };
    pub const ONE: Perm = Perm { num: 1, den_log: 0 };

    pub fn new(num: u64, den_log: u32) -> Perm {
        let mut p = Perm { num, den_log };
        p.normalize();
        p
    }

    /// `1 / 2^k`.
    pub fn pow2(k: u32) -> Perm {
        Perm { num: 1, den_log: k }
    }

    fn normalize(&mut self) {
        if self.num == 0 {
            self.den_log = 0;
            return;
        }
        while self.num % 2 == 0 && self.den_log > 0 {
            self.num /= 2;
            self.den_log -= 1;
        }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den_log(&self) -> u32 {
        self.den_log
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_one(&self) -> bool {
        *self == Perm::ONE
    }

    /// Numerator when written over the common denominator `2^den_log`.
    pub fn scaled_num(&self, den_log: u32) -> Option<u64> {
        if den_log < self.den_log {
            return None;
        }
        self.num.checked_shl(den_log - self.den_log)
    }

    pub fn add(&self, other: &Perm) -> Perm {
        let d = self.den_log.max(other.den_log);
        Perm::new(
            self.scaled_num(d).unwrap() + other.scaled_num(d).unwrap(),
            d,
        )
    }

    /// `self - other`, or `None` when the result would be negative.
    pub fn sub(&self, other: &Perm) -> Option<Perm> {
        let d = self.den_log.max(other.den_log);
        let a = self.scaled_num(d).unwrap();
        let b = other.scaled_num(d).unwrap();
        a.checked_sub(b).map(|n| Perm::new(n, d))
    }

    pub fn half(&self) -> Perm {
        Perm::new(self.num, self.den_log + 1)
    }

    /// Convert to a specification value when expressible (`0` is not a
    /// permission literal; only `1` and `1/2^k` exist in the syntax).
    pub fn to_specval(&self) -> Option<SpecVal> {
        if self.num == 1 {
            Some(SpecVal::pow2_frac(self.den_log))
        } else {
            None
        }
    }
}

impl PartialOrd for Perm {
    fn partial_cmp(&self, other: &Perm) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Perm {
    fn cmp(&self, other: &Perm) -> Ordering {
        let d = self.den_log.max(other.den_log);
        self.scaled_num(d).unwrap().cmp(&other.scaled_num(d).unwrap())
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den_log == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, 1u64 << self.den_log)
        }
    }
}

/// Interpret a closed specification value as a permission: `1` or a
/// `split` chain over `1`.
pub fn sem_perm(v: &SpecVal) -> Option<Perm> {
    match v {
        SpecVal::Int(1) => Some(Perm::ONE),
        SpecVal::Split(inner) => sem_perm(inner).map(|p| p.half()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_and_ordering() {
        assert_eq!(Perm::new(2, 2), Perm::new(1, 1));
        assert_eq!(Perm::new(0, 5), Perm::ZERO);
        assert!(Perm::new(1, 2) < Perm::new(3, 2));
        assert!(Perm::new(1, 1) < Perm::ONE);
        assert!(Perm::new(3, 2) < Perm::ONE);
    }

    #[test]
    fn arithmetic() {
        let half = Perm::pow2(1);
        assert_eq!(half.add(&half), Perm::ONE);
        assert_eq!(half.add(&Perm::pow2(2)), Perm::new(3, 2));
        assert_eq!(Perm::ONE.sub(&Perm::pow2(2)), Some(Perm::new(3, 2)));
        assert_eq!(half.sub(&Perm::ONE), None);
        assert_eq!(half.half(), Perm::pow2(2));
    }

    #[test]
    fn specval_round_trip() {
        assert_eq!(sem_perm(&SpecVal::full()), Some(Perm::ONE));
        assert_eq!(sem_perm(&SpecVal::pow2_frac(3)), Some(Perm::pow2(3)));
        assert_eq!(sem_perm(&SpecVal::Int(2)), None);
        assert_eq!(Perm::pow2(2).to_specval(), Some(SpecVal::pow2_frac(2)));
        assert_eq!(Perm::new(3, 2).to_specval(), None);
    }
}
