//! Binary fractions: symbolic permission amounts used when splitting
//! group predicates.
//!
//! A binary fraction is either `all` (the whole permission) or a finite
//! bit list read most-significant-first after the binary point, so
//! `[1,0,1]` denotes `1/2 + 1/8 = 5/8`. Scalar multiplication rewrites a
//! permission-carrying atom into one conjunct per set bit, which is how a
//! group held at `5/8` is represented as the star of the `1/2` and `1/8`
//! tickets.

use serde::{Deserialize, Serialize};

use crate::model::perm::Perm;
use crate::syntax::ast::{Formula, SpecVal};

/// A binary fraction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinFrac {
    /// The full permission.
    All,
    /// Bits after the binary point, most significant first.
    Bits(Vec<bool>),
}

impl BinFrac {
    pub fn bits(bs: &[u8]) -> BinFrac {
        BinFrac::Bits(bs.iter().map(|&b| b != 0).collect())
    }
}

/// The permission amount a binary fraction denotes: `sem(all) = 1`,
/// `sem([]) = 0`, and each bit at depth `i` contributes `1/2^(i+1)`.
pub fn sem_binfrac(fr: &BinFrac) -> Perm {
    match fr {
        BinFrac::All => Perm::ONE,
        BinFrac::Bits(bs) => {
            let mut total = Perm::ZERO;
            for (i, &b) in bs.iter().enumerate() {
                if b {
                    total = total.add(&Perm::pow2(i as u32 + 1));
                }
            }
            total
        }
    }
}

/// Scalar-multiply a permission-carrying atom by a list of binary
/// fractions. `atom` instantiates the atom at a given permission value;
/// each `all` contributes the full atom, each bit list contributes one
/// conjunct per set bit at permission `1/2^(i+1)`, and the empty list is
/// the empty conjunction `true`.
pub fn scalar_mult(frs: &[BinFrac], atom: &dyn Fn(SpecVal) -> Formula) -> Formula {
    let mut parts = Vec::new();
    for fr in frs {
        match fr {
            BinFrac::All => parts.push(atom(SpecVal::full())),
            BinFrac::Bits(bs) => {
                for (i, &b) in bs.iter().enumerate() {
                    if b {
                        parts.push(atom(SpecVal::pow2_frac(i as u32 + 1)));
                    }
                }
            }
        }
    }
    Formula::star_all(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sem_examples() {
        assert_eq!(sem_binfrac(&BinFrac::All), Perm::ONE);
        assert_eq!(sem_binfrac(&BinFrac::bits(&[])), Perm::ZERO);
        assert_eq!(sem_binfrac(&BinFrac::bits(&[1, 0, 1])), Perm::new(5, 3));
        assert_eq!(sem_binfrac(&BinFrac::bits(&[1, 1])), Perm::new(3, 2));
    }

    #[test]
    fn scalar_mult_expands_set_bits() {
        let atom = |p: SpecVal| Formula::pred(SpecVal::var("r"), "P", vec![p]);
        let got = scalar_mult(&[BinFrac::bits(&[1, 0, 1])], &atom);
        let want = Formula::star(
            atom(SpecVal::pow2_frac(1)),
            atom(SpecVal::pow2_frac(3)),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn scalar_mult_all_and_empty() {
        let atom = |p: SpecVal| Formula::pred(SpecVal::var("r"), "P", vec![p]);
        assert_eq!(scalar_mult(&[BinFrac::All], &atom), atom(SpecVal::full()));
        assert_eq!(scalar_mult(&[], &atom), Formula::truth());
    }
}
