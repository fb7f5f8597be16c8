//! Exhaustive enumeration of small augmented heaps, and the finite value
//! universe used to bound quantifiers and wands.
//!
//! Model enumeration walks the independent components — allocation,
//! per-field permission and value, join tickets, ghost sets, lock
//! assignment — so the model count is the product of the admissible
//! choices per component. The bounds keep the families small enough for
//! exhaustive oracles (a few objects, a few fields, a coarse permission
//! grid).

use std::collections::BTreeMap;

use itertools::Itertools;

use crate::lookup::{ms_rebuild, Lookup};
use crate::model::heap::{AugHeap, CellKey, ObjRec};
use crate::model::perm::Perm;
use crate::syntax::ast::{ObjId, SpecVal, TypeExpr};

/// Bounds for model enumeration.
#[derive(Debug, Clone)]
pub struct ModelBounds {
    /// Candidate objects with their closed dynamic types.
    pub objects: Vec<(ObjId, TypeExpr)>,
    /// Candidate lock-holding threads (ids from `objects`).
    pub threads: Vec<ObjId>,
    /// Non-zero permission choices for field cells and join tickets.
    pub perm_grid: Vec<Perm>,
    /// Integer values for `int`-typed fields and quantifiers.
    pub ints: Vec<i64>,
    /// Maximum reentrancy level per held lock.
    pub max_lock_mult: u8,
    /// Enumerate join-ticket permissions on Thread-typed objects.
    pub with_join: bool,
    /// Enumerate fresh/initialized sets and lock assignments.
    pub with_ghost_sets: bool,
}

impl Default for ModelBounds {
    fn default() -> ModelBounds {
        ModelBounds {
            objects: Vec::new(),
            threads: Vec::new(),
            perm_grid: vec![
                Perm::pow2(2),
                Perm::pow2(1),
                Perm::new(3, 2),
                Perm::ONE,
            ],
            ints: vec![0, 1],
            max_lock_mult: 1,
            with_join: false,
            with_ghost_sets: false,
        }
    }
}

impl ModelBounds {
    /// Candidate values for a field (or quantified variable) of a type.
    pub fn values_of_type(&self, lk: &Lookup, ty: &TypeExpr, max_lockset: usize) -> Vec<SpecVal> {
        match ty {
            TypeExpr::Int => self.ints.iter().map(|&n| SpecVal::Int(n)).collect(),
            TypeExpr::Bool => vec![SpecVal::Bool(false), SpecVal::Bool(true)],
            TypeExpr::Perm => (0..=2).map(SpecVal::pow2_frac).collect(),
            TypeExpr::Void => vec![SpecVal::Null],
            TypeExpr::Lockset => {
                let ids: Vec<ObjId> = self.objects.iter().map(|(o, _)| *o).collect();
                let mut out = Vec::new();
                for size in 0..=max_lockset {
                    for bag in ids.iter().combinations_with_replacement(size) {
                        let atoms: Vec<SpecVal> =
                            bag.into_iter().map(|&o| SpecVal::Obj(o)).collect();
                        out.push(ms_rebuild(&atoms));
                    }
                }
                out
            }
            TypeExpr::Ref(..) => {
                let mut out = vec![SpecVal::Null];
                for (o, oty) in &self.objects {
                    if lk.subtype(oty, ty) {
                        out.push(SpecVal::Obj(*o));
                    }
                }
                out
            }
        }
    }
}

/// Enumerate every well-formed augmented heap within the bounds. With no
/// candidate objects this is exactly the empty heap (all join fractions
/// full).
pub fn enumerate_models(lk: &Lookup, bounds: &ModelBounds) -> Vec<AugHeap> {
    let mut out = Vec::new();
    alloc_step(lk, bounds, 0, &AugHeap::default(), &mut out);
    out
}

fn alloc_step(lk: &Lookup, bounds: &ModelBounds, i: usize, acc: &AugHeap, out: &mut Vec<AugHeap>) {
    if i == bounds.objects.len() {
        ghost_step(bounds, acc, out);
        return;
    }
    let (o, ty) = &bounds.objects[i];
    // Unallocated.
    alloc_step(lk, bounds, i + 1, acc, out);
    // Allocated: choose permission and value per declared field.
    let fields = lk.fields(ty).unwrap_or_default();
    let mut base = acc.clone();
    base.h.insert(
        *o,
        ObjRec {
            ty: ty.clone(),
            fields: BTreeMap::new(),
        },
    );
    let heaps = field_step(lk, bounds, *o, &fields, 0, base);
    for h in heaps {
        if bounds.with_join && lk.subtype(ty, &TypeExpr::thread()) {
            for p in &bounds.perm_grid {
                let mut hj = h.clone();
                hj.p.insert((*o, CellKey::Join), *p);
                alloc_step(lk, bounds, i + 1, &hj, out);
            }
        }
        alloc_step(lk, bounds, i + 1, &h, out);
    }
}

fn field_step(
    lk: &Lookup,
    bounds: &ModelBounds,
    o: ObjId,
    fields: &[(String, TypeExpr)],
    i: usize,
    acc: AugHeap,
) -> Vec<AugHeap> {
    if i == fields.len() {
        return vec![acc];
    }
    let (f, fty) = &fields[i];
    let mut out = Vec::new();
    // Field cell absent from this partial store.
    out.extend(field_step(lk, bounds, o, fields, i + 1, acc.clone()));
    for p in &bounds.perm_grid {
        for v in bounds.values_of_type(lk, fty, 1) {
            let mut h = acc.clone();
            h.p.insert((o, CellKey::field(f)), *p);
            h.h.get_mut(&o).unwrap().fields.insert(f.clone(), v);
            out.extend(field_step(lk, bounds, o, fields, i + 1, h));
        }
    }
    out
}

fn ghost_step(bounds: &ModelBounds, acc: &AugHeap, out: &mut Vec<AugHeap>) {
    if !bounds.with_ghost_sets {
        debug_assert!(acc.is_wf(), "{:?}", acc.check_wf());
        out.push(acc.clone());
        return;
    }
    let allocated: Vec<ObjId> = acc.h.keys().copied().collect();
    for iset in allocated.iter().copied().powerset() {
        let mut h1 = acc.clone();
        h1.iset = iset.into_iter().collect();
        let free: Vec<ObjId> = allocated
            .iter()
            .copied()
            .filter(|o| !h1.iset.contains(o))
            .collect();
        for fset in free.iter().copied().powerset() {
            let mut h2 = h1.clone();
            h2.fset = fset.into_iter().collect();
            let threads: Vec<ObjId> = bounds
                .threads
                .iter()
                .copied()
                .filter(|t| h2.h.contains_key(t))
                .collect();
            // Every candidate thread has an explicit (possibly empty)
            // lockset entry; initialized objects are assigned to at most
            // one holder.
            let locks: Vec<ObjId> = h2.iset.iter().copied().collect();
            let mut base = h2.clone();
            for t in &threads {
                base.l.insert(*t, Vec::new());
            }
            lock_step(bounds, &threads, &locks, 0, &base, out);
        }
    }
}

fn lock_step(
    bounds: &ModelBounds,
    threads: &[ObjId],
    locks: &[ObjId],
    i: usize,
    acc: &AugHeap,
    out: &mut Vec<AugHeap>,
) {
    if i == locks.len() || threads.is_empty() {
        debug_assert!(acc.is_wf(), "{:?}", acc.check_wf());
        out.push(acc.clone());
        return;
    }
    let o = locks[i];
    // Unheld.
    lock_step(bounds, threads, locks, i + 1, acc, out);
    for t in threads {
        for mult in 1..=bounds.max_lock_mult {
            let mut h = acc.clone();
            let bag = h.l.get_mut(t).unwrap();
            for _ in 0..mult {
                bag.push(o);
            }
            bag.sort();
            lock_step(bounds, threads, locks, i + 1, &h, out);
        }
    }
}

/// The finite universe for bounded quantifiers and wand extensions.
#[derive(Debug, Clone)]
pub struct Universe {
    pub bounds: ModelBounds,
    /// Candidate extension heaps for wands and universal heap
    /// quantification.
    pub heaps: Vec<AugHeap>,
    /// Maximum size of quantified lockset values.
    pub max_lockset: usize,
}

impl Universe {
    /// Build a universe whose extension heaps are all models within the
    /// bounds.
    pub fn new(lk: &Lookup, bounds: ModelBounds) -> Universe {
        let heaps = enumerate_models(lk, &bounds);
        Universe {
            bounds,
            heaps,
            max_lockset: 2,
        }
    }

    /// An empty universe (no extensions, no objects): wands degenerate
    /// to implications over the empty extension only.
    pub fn empty() -> Universe {
        Universe {
            bounds: ModelBounds {
                objects: Vec::new(),
                ..ModelBounds::default()
            },
            heaps: vec![AugHeap::default()],
            max_lockset: 2,
        }
    }

    pub fn values_of_type(&self, lk: &Lookup, ty: &TypeExpr) -> Vec<SpecVal> {
        self.bounds.values_of_type(lk, ty, self.max_lockset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::syntax::ast::ClassTable;

    fn cell_table() -> ClassTable {
        parse_program("class Cell ext Object { int f; }")
            .unwrap()
            .table
            .with_builtins()
    }

    #[test]
    fn zero_objects_is_exactly_the_empty_heap() {
        let table = ClassTable::builtins();
        let lk = Lookup::new(&table).unwrap();
        let models = enumerate_models(&lk, &ModelBounds::default());
        assert_eq!(models, vec![AugHeap::default()]);
    }

    #[test]
    fn model_count_is_product_of_components() {
        let table = cell_table();
        let lk = Lookup::new(&table).unwrap();
        let bounds = ModelBounds {
            objects: vec![(1, TypeExpr::simple("Cell"))],
            perm_grid: vec![Perm::pow2(1), Perm::ONE],
            ints: vec![0, 1],
            ..ModelBounds::default()
        };
        let models = enumerate_models(&lk, &bounds);
        // Unallocated, or allocated with the cell absent or 2 perms x 2
        // values: 1 + (1 + 2*2) = 6.
        assert_eq!(models.len(), 6);
        assert!(models.iter().all(|m| m.is_wf()));
    }

    #[test]
    fn join_is_commutative_and_associative_on_enumerated_models() {
        let table = cell_table();
        let lk = Lookup::new(&table).unwrap();
        let bounds = ModelBounds {
            objects: vec![(1, TypeExpr::simple("Cell")), (2, TypeExpr::thread())],
            perm_grid: vec![Perm::pow2(1), Perm::ONE],
            ints: vec![0],
            with_ghost_sets: true,
            threads: vec![2],
            ..ModelBounds::default()
        };
        let models = enumerate_models(&lk, &bounds);
        assert!(models.len() > 10);
        for a in &models {
            for b in &models {
                if a.compatible(b) {
                    assert!(b.compatible(a), "compatibility must be symmetric");
                    assert_eq!(a.join(b), b.join(a), "join must be commutative");
                }
            }
        }
        // Associativity on a sample of triples.
        for a in models.iter().step_by(3) {
            for b in models.iter().step_by(5) {
                for c in models.iter().step_by(7) {
                    let ab = if a.compatible(b) { Some(a.join(b)) } else { None };
                    let bc = if b.compatible(c) { Some(b.join(c)) } else { None };
                    let left = ab.as_ref().filter(|h| h.compatible(c)).map(|h| h.join(c));
                    let right = bc.as_ref().filter(|h| a.compatible(h)).map(|h| a.join(h));
                    if let (Some(l), Some(r)) = (&left, &right) {
                        assert_eq!(l, r, "join must be associative");
                    }
                }
            }
        }
    }

    #[test]
    fn values_of_type_cover_the_universe() {
        let table = cell_table();
        let lk = Lookup::new(&table).unwrap();
        let bounds = ModelBounds {
            objects: vec![(1, TypeExpr::simple("Cell"))],
            ints: vec![0, 7],
            ..ModelBounds::default()
        };
        assert_eq!(
            bounds.values_of_type(&lk, &TypeExpr::Int, 1),
            vec![SpecVal::Int(0), SpecVal::Int(7)]
        );
        let refs = bounds.values_of_type(&lk, &TypeExpr::object(), 1);
        assert_eq!(refs, vec![SpecVal::Null, SpecVal::Obj(1)]);
        let cells = bounds.values_of_type(&lk, &TypeExpr::simple("Cell"), 1);
        assert_eq!(cells, vec![SpecVal::Null, SpecVal::Obj(1)]);
        let sets = bounds.values_of_type(&lk, &TypeExpr::Lockset, 2);
        assert!(sets.contains(&SpecVal::Nil));
        assert!(sets.contains(&SpecVal::Obj(1)));
        assert!(sets.contains(&SpecVal::union(SpecVal::Obj(1), SpecVal::Obj(1))));
    }
}
