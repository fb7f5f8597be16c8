//! Augmented heaps: the resource-sensitive models formulas are forced
//! against.
//!
//! An augmented heap combines a partial object heap (each object carries
//! its dynamic type and a partial field store), a permission table over
//! field cells and join tickets, a join-fraction table `J` (defaulting to
//! the full permission), a lock table mapping thread objects to the bag
//! of locks they hold, a fresh set, and an initialized set.
//!
//! Well-formedness ties the components together: every defined field cell
//! carries positive permission, permissions vanish off-heap, the join
//! permission of an object never exceeds `J`, the fresh and initialized
//! sets are disjoint, and locked objects are initialized.
//!
//! Two heaps are compatible when shared objects agree on their type and
//! on shared field values, permissions sum to at most `J` (with `J`
//! itself and the initialized set shared), lock tables claim disjoint
//! threads and disjoint locks, and fresh sets are disjoint. Joining takes
//! component-wise unions and pointwise permission sums.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::lookup::specval_equiv;
use crate::model::perm::Perm;
use crate::syntax::ast::{Ident, ObjId, SpecVal, TypeExpr};

/// A permission-table key: a named field cell or the join ticket.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CellKey {
    Field(Ident),
    Join,
}

impl CellKey {
    pub fn field(name: &str) -> CellKey {
        CellKey::Field(name.into())
    }
}

/// An allocated object: its closed dynamic type and a partial field
/// store of closed specification values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjRec {
    pub ty: TypeExpr,
    pub fields: BTreeMap<Ident, SpecVal>,
}

/// An augmented heap.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AugHeap {
    /// The object heap.
    pub h: BTreeMap<ObjId, ObjRec>,
    /// Permission table; absent entries are zero.
    pub p: BTreeMap<(ObjId, CellKey), Perm>,
    /// Join fractions; absent entries are the full permission.
    pub j: BTreeMap<ObjId, Perm>,
    /// Lock table: thread object to the sorted bag of locks it holds.
    pub l: BTreeMap<ObjId, Vec<ObjId>>,
    /// Freshly allocated objects.
    pub fset: BTreeSet<ObjId>,
    /// Initialized (committed) objects.
    pub iset: BTreeSet<ObjId>,
}

impl Default for ObjRec {
    fn default() -> ObjRec {
        ObjRec {
            ty: TypeExpr::object(),
            fields: BTreeMap::new(),
        }
    }
}

impl AugHeap {
    pub fn perm(&self, o: ObjId, key: &CellKey) -> Perm {
        self.p
            .get(&(o, key.clone()))
            .copied()
            .unwrap_or(Perm::ZERO)
    }

    pub fn join_fraction(&self, o: ObjId) -> Perm {
        self.j.get(&o).copied().unwrap_or(Perm::ONE)
    }

    pub fn dyn_type(&self, o: ObjId) -> Option<&TypeExpr> {
        self.h.get(&o).map(|r| &r.ty)
    }

    pub fn field_val(&self, o: ObjId, field: &str) -> Option<&SpecVal> {
        self.h.get(&o).and_then(|r| r.fields.get(field))
    }

    /// All locks held by any thread, as a bag.
    pub fn all_locks(&self) -> Vec<ObjId> {
        let mut out: Vec<ObjId> = self.l.values().flatten().copied().collect();
        out.sort();
        out
    }

    /// Check the well-formedness axioms; returns a description of the
    /// first violation.
    pub fn check_wf(&self) -> Result<(), String> {
        for (o, rec) in &self.h {
            for f in rec.fields.keys() {
                if self.perm(*o, &CellKey::Field(f.clone())).is_zero() {
                    return Err(format!("defined cell #{o}.{f} has zero permission"));
                }
            }
        }
        for ((o, key), perm) in &self.p {
            if perm.is_zero() {
                continue;
            }
            if *perm > Perm::ONE {
                return Err(format!("permission above 1 at #{o}"));
            }
            match key {
                CellKey::Field(f) => {
                    let defined = self.field_val(*o, f).is_some();
                    if !defined {
                        return Err(format!(
                            "positive permission on undefined cell #{o}.{f}"
                        ));
                    }
                }
                CellKey::Join => {
                    if !self.h.contains_key(o) {
                        return Err(format!("join permission on unallocated #{o}"));
                    }
                    if *perm > self.join_fraction(*o) {
                        return Err(format!("join permission of #{o} exceeds its J"));
                    }
                }
            }
        }
        for (o, j) in &self.j {
            if *j > Perm::ONE {
                return Err(format!("join fraction above 1 at #{o}"));
            }
        }
        if let Some(o) = self.fset.intersection(&self.iset).next() {
            return Err(format!("#{o} is both fresh and initialized"));
        }
        for (t, bag) in &self.l {
            for o in bag {
                if !self.iset.contains(o) {
                    return Err(format!("#{o} locked by #{t} but not initialized"));
                }
            }
        }
        Ok(())
    }

    pub fn is_wf(&self) -> bool {
        self.check_wf().is_ok()
    }

    /// Whether `self` and `other` can be joined.
    pub fn compatible(&self, other: &AugHeap) -> bool {
        // Shared objects agree on type and shared field values.
        for (o, rec) in &self.h {
            if let Some(rec2) = other.h.get(o) {
                if rec.ty != rec2.ty {
                    return false;
                }
                for (f, v) in &rec.fields {
                    if let Some(v2) = rec2.fields.get(f) {
                        if !specval_equiv(v, v2) {
                            return false;
                        }
                    }
                }
            }
        }
        // Permissions sum within bounds; join tickets stay below `J`.
        let keys: BTreeSet<_> = self.p.keys().chain(other.p.keys()).collect();
        for k in keys {
            let total = self.perm(k.0, &k.1).add(&other.perm(k.0, &k.1));
            let bound = match &k.1 {
                CellKey::Field(_) => Perm::ONE,
                CellKey::Join => self.join_fraction(k.0).min(other.join_fraction(k.0)),
            };
            if total > bound {
                return false;
            }
        }
        // `J` and the initialized set are shared knowledge.
        let objs: BTreeSet<_> = self
            .j
            .keys()
            .chain(other.j.keys())
            .chain(self.h.keys())
            .chain(other.h.keys())
            .collect();
        if objs
            .into_iter()
            .any(|o| self.join_fraction(*o) != other.join_fraction(*o))
        {
            return false;
        }
        if self.iset != other.iset {
            return false;
        }
        // Lock tables claim disjoint threads and disjoint locks.
        if self.l.keys().any(|t| other.l.contains_key(t)) {
            return false;
        }
        let mine: BTreeSet<_> = self.all_locks().into_iter().collect();
        if other.all_locks().iter().any(|o| mine.contains(o)) {
            return false;
        }
        // Fresh sets are disjoint.
        if self.fset.intersection(&other.fset).next().is_some() {
            return false;
        }
        true
    }

    /// Join two compatible heaps.
    pub fn join(&self, other: &AugHeap) -> AugHeap {
        debug_assert!(self.compatible(other));
        let mut h = self.h.clone();
        for (o, rec) in &other.h {
            let entry = h.entry(*o).or_insert_with(|| ObjRec {
                ty: rec.ty.clone(),
                fields: BTreeMap::new(),
            });
            for (f, v) in &rec.fields {
                entry.fields.entry(f.clone()).or_insert_with(|| v.clone());
            }
        }
        let mut p = self.p.clone();
        for (k, perm) in &other.p {
            let slot = p.entry(k.clone()).or_insert(Perm::ZERO);
            *slot = slot.add(perm);
        }
        let mut j = self.j.clone();
        for (o, v) in &other.j {
            j.entry(*o).or_insert(*v);
        }
        let mut l = self.l.clone();
        for (t, bag) in &other.l {
            l.insert(*t, bag.clone());
        }
        AugHeap {
            h,
            p,
            j,
            l,
            fset: self.fset.union(&other.fset).copied().collect(),
            iset: self.iset.clone(),
        }
    }

    /// The resource ordering: `self <= other` iff some heap joins with
    /// `self` to give `other`.
    pub fn leq(&self, other: &AugHeap) -> bool {
        for (o, rec) in &self.h {
            match other.h.get(o) {
                None => return false,
                Some(rec2) => {
                    if rec.ty != rec2.ty {
                        return false;
                    }
                    for (f, v) in &rec.fields {
                        match rec2.fields.get(f) {
                            Some(v2) if specval_equiv(v, v2) => {}
                            _ => return false,
                        }
                    }
                }
            }
        }
        for ((o, k), perm) in &self.p {
            if *perm > other.perm(*o, k) {
                return false;
            }
        }
        let objs: BTreeSet<_> = self.j.keys().chain(other.j.keys()).collect();
        if objs
            .into_iter()
            .any(|o| self.join_fraction(*o) != other.join_fraction(*o))
        {
            return false;
        }
        for (t, bag) in &self.l {
            if other.l.get(t) != Some(bag) {
                return false;
            }
        }
        self.fset.is_subset(&other.fset) && self.iset == other.iset
    }

    /// Enumerate splits of this heap into two compatible halves whose
    /// join is the original, invoking `k` on each until it returns true.
    ///
    /// Permission cells are divided on the dyadic grid `2^-grid_log`
    /// (refined per cell when the cell's own denominator is finer), lock
    /// entries and fresh objects go wholly to one side, and both halves
    /// keep the full object-type domain with field stores restricted to
    /// the cells they own.
    pub fn for_splits(
        &self,
        grid_log: u32,
        k: &mut dyn FnMut(&AugHeap, &AugHeap) -> bool,
    ) -> bool {
        let cells: Vec<((ObjId, CellKey), Perm)> =
            self.p.iter().map(|(c, v)| (c.clone(), *v)).collect();
        let lthreads: Vec<ObjId> = self.l.keys().copied().collect();
        let fresh: Vec<ObjId> = self.fset.iter().copied().collect();
        let mut left = self.skeleton();
        self.split_cells(&cells, &lthreads, &fresh, grid_log, &mut left, k)
    }

    /// A copy with empty permission/lock/fresh components but shared
    /// object types, `J`, and initialized set.
    fn skeleton(&self) -> AugHeap {
        AugHeap {
            h: self
                .h
                .iter()
                .map(|(o, rec)| {
                    (
                        *o,
                        ObjRec {
                            ty: rec.ty.clone(),
                            fields: BTreeMap::new(),
                        },
                    )
                })
                .collect(),
            p: BTreeMap::new(),
            j: self.j.clone(),
            l: BTreeMap::new(),
            fset: BTreeSet::new(),
            iset: self.iset.clone(),
        }
    }

    fn split_cells(
        &self,
        cells: &[((ObjId, CellKey), Perm)],
        lthreads: &[ObjId],
        fresh: &[ObjId],
        grid_log: u32,
        left: &mut AugHeap,
        k: &mut dyn FnMut(&AugHeap, &AugHeap) -> bool,
    ) -> bool {
        match cells.split_first() {
            Some((((o, key), total), rest)) => {
                let d = grid_log.max(total.den_log());
                let steps = total.scaled_num(d).unwrap();
                for share in 0..=steps {
                    let mine = Perm::new(share, d);
                    if !mine.is_zero() {
                        left.p.insert((*o, key.clone()), mine);
                        if let CellKey::Field(f) = key {
                            let v = self.field_val(*o, f).unwrap().clone();
                            left.h.get_mut(o).unwrap().fields.insert(f.clone(), v);
                        }
                    }
                    let done = self.split_cells(rest, lthreads, fresh, grid_log, left, k);
                    left.p.remove(&(*o, key.clone()));
                    if let CellKey::Field(f) = key {
                        left.h.get_mut(o).unwrap().fields.remove(f);
                    }
                    if done {
                        return true;
                    }
                }
                false
            }
            None => match lthreads.split_first() {
                Some((t, rest)) => {
                    if self.split_cells(&[], rest, fresh, grid_log, left, k) {
                        return true;
                    }
                    left.l.insert(*t, self.l[t].clone());
                    let done = self.split_cells(&[], rest, fresh, grid_log, left, k);
                    left.l.remove(t);
                    done
                }
                None => match fresh.split_first() {
                    Some((o, rest)) => {
                        if self.split_cells(&[], &[], rest, grid_log, left, k) {
                            return true;
                        }
                        left.fset.insert(*o);
                        let done = self.split_cells(&[], &[], rest, grid_log, left, k);
                        left.fset.remove(o);
                        done
                    }
                    None => {
                        let right = self.subtract(left);
                        k(left, &right)
                    }
                },
            },
        }
    }

    /// The complement of a sub-heap (permissions subtracted, lock and
    /// fresh entries removed, field stores restricted to owned cells).
    fn subtract(&self, part: &AugHeap) -> AugHeap {
        let mut out = self.skeleton();
        for ((o, key), total) in &self.p {
            let rest = total.sub(&part.perm(*o, key)).unwrap();
            if !rest.is_zero() {
                out.p.insert((*o, key.clone()), rest);
                if let CellKey::Field(f) = key {
                    let v = self.field_val(*o, f).unwrap().clone();
                    out.h.get_mut(o).unwrap().fields.insert(f.clone(), v);
                }
            }
        }
        for (t, bag) in &self.l {
            if !part.l.contains_key(t) {
                out.l.insert(*t, bag.clone());
            }
        }
        out.fset = self.fset.difference(&part.fset).copied().collect();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_cell(o: ObjId, f: &str, perm: Perm, v: SpecVal) -> AugHeap {
        let mut ah = AugHeap::default();
        ah.h.insert(
            o,
            ObjRec {
                ty: TypeExpr::object(),
                fields: BTreeMap::from([(f.to_string(), v)]),
            },
        );
        ah.p.insert((o, CellKey::field(f)), perm);
        ah
    }

    #[test]
    fn wf_accepts_and_rejects() {
        let ah = one_cell(1, "f", Perm::pow2(1), SpecVal::Int(7));
        assert!(ah.is_wf());

        let mut bad = ah.clone();
        bad.p.clear();
        assert!(bad.check_wf().unwrap_err().contains("zero permission"));

        let mut bad = ah.clone();
        bad.p.insert((2, CellKey::field("f")), Perm::pow2(1));
        assert!(bad.check_wf().unwrap_err().contains("undefined cell"));

        let mut bad = ah.clone();
        bad.p.insert((1, CellKey::Join), Perm::ONE);
        bad.j.insert(1, Perm::pow2(1));
        assert!(bad.check_wf().unwrap_err().contains("exceeds its J"));

        let mut bad = ah.clone();
        bad.fset.insert(3);
        bad.iset.insert(3);
        assert!(bad.check_wf().unwrap_err().contains("fresh and initialized"));

        let mut bad = ah;
        bad.l.insert(9, vec![4]);
        assert!(bad.check_wf().unwrap_err().contains("not initialized"));
    }

    #[test]
    fn half_plus_half_joins_to_one() {
        let a = one_cell(1, "f", Perm::pow2(1), SpecVal::Int(7));
        let b = one_cell(1, "f", Perm::pow2(1), SpecVal::Int(7));
        assert!(a.compatible(&b));
        let joined = a.join(&b);
        assert_eq!(joined.perm(1, &CellKey::field("f")), Perm::ONE);
        assert!(joined.is_wf());
        assert!(a.leq(&joined));
    }

    #[test]
    fn one_plus_half_is_incompatible() {
        let a = one_cell(1, "f", Perm::ONE, SpecVal::Int(7));
        let b = one_cell(1, "f", Perm::pow2(1), SpecVal::Int(7));
        assert!(!a.compatible(&b));
    }

    #[test]
    fn disagreeing_values_are_incompatible() {
        let a = one_cell(1, "f", Perm::pow2(1), SpecVal::Int(7));
        let b = one_cell(1, "f", Perm::pow2(1), SpecVal::Int(8));
        assert!(!a.compatible(&b));
    }

    #[test]
    fn overlapping_lock_bags_are_incompatible() {
        let mut a = AugHeap::default();
        a.iset.insert(5);
        a.l.insert(1, vec![5]);
        let mut b = AugHeap::default();
        b.iset.insert(5);
        b.l.insert(2, vec![5]);
        assert!(!a.compatible(&b));

        // Distinct locks on distinct threads are fine.
        let mut c = AugHeap::default();
        c.iset.insert(5);
        c.iset.insert(6);
        c.l.insert(2, vec![6]);
        let mut a2 = a.clone();
        a2.iset.insert(6);
        assert!(a2.compatible(&c));
    }

    #[test]
    fn same_thread_in_both_lock_tables_is_incompatible() {
        let mut a = AugHeap::default();
        a.iset.insert(5);
        a.iset.insert(6);
        a.l.insert(1, vec![5]);
        let mut b = AugHeap::default();
        b.iset = a.iset.clone();
        b.l.insert(1, vec![6]);
        assert!(!a.compatible(&b));
    }

    #[test]
    fn splits_partition_permissions() {
        let ah = one_cell(1, "f", Perm::ONE, SpecVal::Int(7));
        let mut n = 0;
        ah.for_splits(1, &mut |a, b| {
            assert!(a.compatible(b), "split halves must be compatible");
            assert_eq!(&a.join(b), &ah, "split halves must rejoin");
            assert!(a.is_wf() && b.is_wf());
            n += 1;
            false
        });
        // Shares 0, 1/2, 1 of the single cell.
        assert_eq!(n, 3);
    }

    #[test]
    fn splits_move_locks_and_fresh_wholesale() {
        let mut ah = AugHeap::default();
        ah.iset.insert(5);
        ah.l.insert(1, vec![5]);
        ah.fset.insert(9);
        let mut n = 0;
        ah.for_splits(1, &mut |a, b| {
            assert!(a.compatible(b));
            assert_eq!(&a.join(b), &ah);
            n += 1;
            false
        });
        // Lock entry 2 ways x fresh object 2 ways.
        assert_eq!(n, 4);
    }
}
