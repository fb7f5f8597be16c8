//! The forcing relation: whether an augmented heap and stack satisfy a
//! formula.
//!
//! The semantics is intuitionistic and resource-sensitive. Separating
//! conjunction splits the heap (permissions divided on a dyadic grid,
//! lock entries and fresh objects moved wholesale, object types shared);
//! magic wand and universal quantification range over extension heaps
//! drawn from a finite universe, so they are *bounded*: a formula judged
//! true under a bounded connective holds of the inspected extensions
//! only. The `bounded` flag records when such a connective was
//! evaluated.
//!
//! Predicate applications unfold their definition chain through the
//! class hierarchy with a finite depth budget; at depth zero every
//! application is false, giving the bounded approximant of the least
//! fixpoint (monotone in the budget). Applications at a `null` receiver
//! are vacuously true, and missing trailing arguments are existentially
//! quantified over the universe.

use std::cell::Cell;

use crate::lookup::{ms_normalize, specval_equiv, Lookup};
use crate::model::enumerate::Universe;
use crate::model::eval::{eval_expr, eval_specval, value_has_type, Stack};
use crate::model::heap::{AugHeap, CellKey};
use crate::model::perm::sem_perm;
use crate::syntax::ast::*;

/// Parameters of the bounded forcing relation.
pub struct ForceCfg<'a> {
    pub lk: &'a Lookup<'a>,
    pub universe: &'a Universe,
    /// Predicate unfolding budget.
    pub depth: u32,
    /// Star-split granularity `2^-grid_log`.
    pub grid_log: u32,
    /// Set when a bounded connective (wand or universal quantifier) was
    /// evaluated.
    pub bounded: Cell<bool>,
}

impl<'a> ForceCfg<'a> {
    pub fn new(lk: &'a Lookup<'a>, universe: &'a Universe) -> ForceCfg<'a> {
        ForceCfg {
            lk,
            universe,
            depth: 8,
            grid_log: 2,
            bounded: Cell::new(false),
        }
    }

    pub fn with_depth(mut self, depth: u32) -> ForceCfg<'a> {
        self.depth = depth;
        self
    }
}

/// Whether the heap and stack force the formula.
pub fn holds(cfg: &ForceCfg, ah: &AugHeap, s: &Stack, f: &Formula) -> bool {
    holds_d(cfg, cfg.depth, ah, s, f)
}

fn obj_of(v: &SpecVal) -> Option<ObjId> {
    match v {
        SpecVal::Obj(o) => Some(*o),
        _ => None,
    }
}

fn holds_d(cfg: &ForceCfg, depth: u32, ah: &AugHeap, s: &Stack, f: &Formula) -> bool {
    match f {
        Formula::Pure(e) => {
            eval_expr(cfg.lk, ah, s, e) == Some(SpecVal::Bool(true))
        }
        Formula::PointsTo {
            target,
            field,
            perm,
            value,
        } => points_to(cfg, ah, s, target, field, perm).is_some_and(|stored| {
            eval_expr(cfg.lk, ah, s, value).is_some_and(|v| specval_equiv(&stored, &v))
        }),
        Formula::PointsToTy {
            target,
            field,
            perm,
            ty,
        } => points_to(cfg, ah, s, target, field, perm)
            .is_some_and(|stored| value_has_type(cfg.lk, ah, &stored, ty)),
        Formula::PermAtom {
            target,
            field,
            perm,
        } => points_to(cfg, ah, s, target, field, perm).is_some(),
        Formula::PredApp {
            recv,
            name,
            at,
            args,
        } => {
            let Some(r) = eval_specval(recv, s) else {
                return false;
            };
            if r == SpecVal::Null {
                return true;
            }
            let Some(o) = obj_of(&r) else {
                return false;
            };
            let Some(vals) = args
                .iter()
                .map(|a| eval_specval(a, s))
                .collect::<Option<Vec<_>>>()
            else {
                return false;
            };
            force_pred(cfg, depth, ah, o, name, at.as_deref(), &vals)
        }
        Formula::Star(f1, f2) => ah.for_splits(cfg.grid_log, &mut |a, b| {
            holds_d(cfg, depth, a, s, f1) && holds_d(cfg, depth, b, s, f2)
        }),
        Formula::Wand(f1, f2) => {
            cfg.bounded.set(true);
            for ext in extensions(cfg, ah) {
                if holds_d(cfg, depth, &ext, s, f1) && !holds_d(cfg, depth, &ah.join(&ext), s, f2)
                {
                    return false;
                }
            }
            true
        }
        Formula::Iff(f1, f2) => {
            let fwd = Formula::wand((**f1).clone(), (**f2).clone());
            let bwd = Formula::wand((**f2).clone(), (**f1).clone());
            holds_d(cfg, depth, ah, s, &fwd) && holds_d(cfg, depth, ah, s, &bwd)
        }
        Formula::Assures(f1, f2) => {
            let w = Formula::wand(
                (**f1).clone(),
                Formula::star((**f1).clone(), (**f2).clone()),
            );
            holds_d(cfg, depth, ah, s, &w)
        }
        Formula::IsPartOf(f1, f2) => {
            let w = Formula::wand(
                (**f2).clone(),
                Formula::star(
                    (**f1).clone(),
                    Formula::wand((**f1).clone(), (**f2).clone()),
                ),
            );
            holds_d(cfg, depth, ah, s, &w)
        }
        Formula::And(f1, f2) => {
            holds_d(cfg, depth, ah, s, f1) && holds_d(cfg, depth, ah, s, f2)
        }
        Formula::Or(f1, f2) => {
            holds_d(cfg, depth, ah, s, f1) || holds_d(cfg, depth, ah, s, f2)
        }
        Formula::Quant {
            kind: QuantKind::Ex,
            var,
            ty,
            body,
        } => cfg.universe.values_of_type(cfg.lk, ty).into_iter().any(|v| {
            let mut s2 = s.clone();
            s2.insert(var.clone(), v);
            holds_d(cfg, depth, ah, &s2, body)
        }),
        Formula::Quant {
            kind: QuantKind::Fa,
            var,
            ty,
            body,
        } => {
            cfg.bounded.set(true);
            let mut larger: Vec<AugHeap> = vec![ah.clone()];
            larger.extend(extensions(cfg, ah).into_iter().map(|e| ah.join(&e)));
            let vals = cfg.universe.values_of_type(cfg.lk, ty);
            larger.iter().all(|h| {
                vals.iter().all(|v| {
                    let mut s2 = s.clone();
                    s2.insert(var.clone(), v.clone());
                    holds_d(cfg, depth, h, &s2, body)
                })
            })
        }
        Formula::Join { thread, perm } => {
            let Some(o) = eval_expr(cfg.lk, ah, s, thread).as_ref().and_then(obj_of) else {
                return false;
            };
            match eval_specval(perm, s).as_ref().and_then(sem_perm) {
                Some(p) => !p.is_zero() && p <= ah.perm(o, &CellKey::Join),
                None => false,
            }
        }
        Formula::Lockset(v) => {
            let Some(val) = eval_specval(v, s) else {
                return false;
            };
            let Some(mut bag) = ms_normalize(&val)
                .iter()
                .map(obj_of)
                .collect::<Option<Vec<_>>>()
            else {
                return false;
            };
            bag.sort();
            ah.l.values().any(|held| *held == bag)
        }
        Formula::Contains { set, elem } => {
            let Some(val) = eval_specval(set, s) else {
                return false;
            };
            let Some(e) = eval_expr(cfg.lk, ah, s, elem) else {
                return false;
            };
            ms_normalize(&val).iter().any(|a| specval_equiv(a, &e))
        }
        Formula::Fresh(e) => eval_expr(cfg.lk, ah, s, e)
            .as_ref()
            .and_then(obj_of)
            .is_some_and(|o| ah.fset.contains(&o)),
        Formula::Initialized(e) => eval_expr(cfg.lk, ah, s, e)
            .as_ref()
            .and_then(obj_of)
            .is_some_and(|o| ah.iset.contains(&o)),
    }
}

/// Evaluate a points-to atom's receiver, permission, and heap cell:
/// returns the stored value when the cell is defined and the permission
/// is held.
fn points_to(
    cfg: &ForceCfg,
    ah: &AugHeap,
    s: &Stack,
    target: &Expr,
    field: &str,
    perm: &SpecVal,
) -> Option<SpecVal> {
    let o = eval_expr(cfg.lk, ah, s, target).as_ref().and_then(obj_of)?;
    let p = eval_specval(perm, s).as_ref().and_then(sem_perm)?;
    if p.is_zero() || p > ah.perm(o, &CellKey::field(field)) {
        return None;
    }
    ah.field_val(o, field).cloned()
}

/// Unfold a predicate application at an object through the class chain.
fn force_pred(
    cfg: &ForceCfg,
    depth: u32,
    ah: &AugHeap,
    o: ObjId,
    name: &str,
    at: Option<&str>,
    args: &[SpecVal],
) -> bool {
    if depth == 0 {
        return false;
    }
    let Some(dyn_ty) = ah.dyn_type(o) else {
        return false;
    };
    // The class whose definition chain is unfolded: the qualifier's
    // instance among the supertypes, or the dynamic class itself.
    let ty_at = match at {
        None => dyn_ty.clone(),
        Some(class) => {
            let Ok(supers) = cfg.lk.supertypes(dyn_ty) else {
                return false;
            };
            match supers.into_iter().find(|t| t.ref_name() == Some(class)) {
                Some(t) => t,
                None => return false,
            }
        }
    };
    let Ok(rp) = cfg.lk.plkup(name, &ty_at) else {
        return false;
    };
    if args.len() > rp.params.len() {
        return false;
    }
    // Existentially complete missing trailing arguments.
    let missing: Vec<&(TypeExpr, Ident)> = rp.params[args.len()..].iter().collect();
    let mut full = args.to_vec();
    complete_args(cfg, depth, ah, o, &rp, &missing, &mut full)
}

fn complete_args(
    cfg: &ForceCfg,
    depth: u32,
    ah: &AugHeap,
    o: ObjId,
    rp: &crate::lookup::ResolvedPred,
    missing: &[&(TypeExpr, Ident)],
    full: &mut Vec<SpecVal>,
) -> bool {
    match missing.split_first() {
        Some(((ty, _), rest)) => {
            for v in cfg.universe.values_of_type(cfg.lk, ty) {
                full.push(v);
                if complete_args(cfg, depth, ah, o, rp, rest, full) {
                    full.pop();
                    return true;
                }
                full.pop();
            }
            false
        }
        None => {
            let mut s = Stack::new();
            s.insert("this".into(), SpecVal::Obj(o));
            for ((_, p), v) in rp.params.iter().zip(full.iter()) {
                s.insert(p.clone(), v.clone());
            }
            let mut body = rp.body.clone();
            if let Some(sup) = &rp.ext {
                let Some(sup_name) = sup.ref_name() else {
                    return false;
                };
                let prefix_len = match cfg.lk.ptype(&rp.name, sup) {
                    Ok(ps) => ps.len(),
                    Err(_) => 0,
                };
                let up = Formula::PredApp {
                    recv: SpecVal::Obj(o),
                    name: rp.name.clone(),
                    at: Some(sup_name.to_string()),
                    args: full.iter().take(prefix_len).cloned().collect(),
                };
                body = Formula::star(body, up);
            }
            holds_d(cfg, depth - 1, ah, &s, &body)
        }
    }
}

/// Universe extension heaps adapted to the base: the initialized set and
/// join fractions are shared knowledge, so candidates are aligned with
/// the base before the compatibility check.
fn extensions(cfg: &ForceCfg, ah: &AugHeap) -> Vec<AugHeap> {
    let mut out = Vec::new();
    for cand in &cfg.universe.heaps {
        let mut ext = cand.clone();
        ext.iset = ah.iset.clone();
        ext.j = ah.j.clone();
        if ext.is_wf() && ah.compatible(&ext) {
            out.push(ext);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::enumerate::ModelBounds;
    use crate::model::heap::ObjRec;
    use crate::model::perm::Perm;
    use crate::parser::{parse_formula, parse_program};
    use crate::syntax::ast::ClassTable;
    use std::collections::BTreeMap;

    fn cell_table() -> ClassTable {
        parse_program(
            "class Cell ext Object {
               int f;
               pred state<int n> = PointsTo(this.f, 1, n);
             }",
        )
        .unwrap()
        .table
        .with_builtins()
    }

    fn cell_heap(perm: Perm, val: i64) -> AugHeap {
        let mut ah = AugHeap::default();
        ah.h.insert(
            1,
            ObjRec {
                ty: TypeExpr::simple("Cell"),
                fields: BTreeMap::from([("f".to_string(), SpecVal::Int(val))]),
            },
        );
        ah.p.insert((1, CellKey::field("f")), perm);
        ah
    }

    fn stack_x() -> Stack {
        Stack::from([("x".to_string(), SpecVal::Obj(1))])
    }

    fn check(table: &ClassTable, ah: &AugHeap, s: &Stack, src: &str) -> bool {
        let lk = Lookup::new(table).unwrap();
        let bounds = ModelBounds {
            objects: vec![(1, TypeExpr::simple("Cell"))],
            ints: vec![0, 5],
            ..ModelBounds::default()
        };
        let universe = Universe::new(&lk, bounds);
        let cfg = ForceCfg::new(&lk, &universe);
        let f = parse_formula(src).unwrap();
        holds(&cfg, ah, s, &f)
    }

    #[test]
    fn points_to_needs_enough_permission() {
        let table = cell_table();
        let ah = cell_heap(Perm::pow2(2), 5);
        let s = stack_x();
        assert!(check(&table, &ah, &s, "PointsTo(x.f, 1/4, 5)"));
        assert!(!check(&table, &ah, &s, "PointsTo(x.f, 1/2, 5)"));
        assert!(!check(&table, &ah, &s, "PointsTo(x.f, 1/4, 6)"));
        assert!(check(&table, &ah, &s, "Perm(x.f, 1/4)"));
        assert!(!check(&table, &ah, &s, "Perm(x.g, 1/4)"));
    }

    #[test]
    fn star_splits_permissions() {
        let table = cell_table();
        let ah = cell_heap(Perm::ONE, 5);
        let s = stack_x();
        assert!(check(
            &table,
            &ah,
            &s,
            "PointsTo(x.f, 1/2, 5) * PointsTo(x.f, 1/2, 5)"
        ));
        assert!(!check(
            &table,
            &ah,
            &s,
            "PointsTo(x.f, 1, 5) * PointsTo(x.f, 1, 5)"
        ));
        // Star is not additive conjunction.
        assert!(check(&table, &ah, &s, "PointsTo(x.f, 1, 5) & PointsTo(x.f, 1, 5)"));
    }

    #[test]
    fn pure_and_quantifiers() {
        let table = cell_table();
        let ah = cell_heap(Perm::ONE, 5);
        let s = stack_x();
        assert!(check(&table, &ah, &s, "x != null"));
        assert!(check(&table, &ah, &s, "ex int n. PointsTo(x.f, 1, n)"));
        assert!(!check(&table, &ah, &s, "ex int n. PointsTo(x.f, 1, n) * n == 3"));
        assert!(check(&table, &ah, &s, "x isclassof Cell"));
        assert!(check(&table, &ah, &s, "x instanceof Object"));
    }

    #[test]
    fn predicate_unfolding_and_depth() {
        let table = cell_table();
        let lk = Lookup::new(&table).unwrap();
        let ah = cell_heap(Perm::ONE, 5);
        let s = stack_x();
        assert!(check(&table, &ah, &s, "x.state<5>"));
        assert!(!check(&table, &ah, &s, "x.state<0>"));
        assert!(check(&table, &ah, &s, "x.state@Cell<5>"));
        // Missing argument: existentially completed from the universe.
        assert!(check(&table, &ah, &s, "x.state"));
        // Null receivers are vacuous.
        let s2 = Stack::from([("x".to_string(), SpecVal::Null)]);
        assert!(check(&table, &ah, &s2, "x.state<5>"));

        // Depth zero refutes every application.
        let bounds = ModelBounds {
            objects: vec![(1, TypeExpr::simple("Cell"))],
            ints: vec![5],
            ..ModelBounds::default()
        };
        let universe = Universe::new(&lk, bounds);
        let cfg = ForceCfg::new(&lk, &universe).with_depth(0);
        let f = parse_formula("x.state<5>").unwrap();
        assert!(!holds(&cfg, &ah, &s, &f));
    }

    #[test]
    fn init_predicate_holds_on_default_fields() {
        let table = cell_table();
        let ah = cell_heap(Perm::ONE, 0);
        let s = stack_x();
        assert!(check(&table, &ah, &s, "x.init"));
        let ah_bad = cell_heap(Perm::ONE, 5);
        assert!(!check(&table, &ah_bad, &s, "x.init"));
    }

    #[test]
    fn wand_is_bounded_and_sound_on_the_universe() {
        let table = cell_table();
        let lk = Lookup::new(&table).unwrap();
        let bounds = ModelBounds {
            objects: vec![(1, TypeExpr::simple("Cell"))],
            ints: vec![5],
            perm_grid: vec![Perm::pow2(1), Perm::ONE],
            ..ModelBounds::default()
        };
        let universe = Universe::new(&lk, bounds);
        let cfg = ForceCfg::new(&lk, &universe);
        let s = stack_x();

        // Holding one half, the other half gets you the whole.
        let ah = cell_heap(Perm::pow2(1), 5);
        let f = parse_formula("PointsTo(x.f, 1/2, 5) -* PointsTo(x.f, 1, 5)").unwrap();
        assert!(!cfg.bounded.get());
        assert!(holds(&cfg, &ah, &s, &f));
        assert!(cfg.bounded.get(), "wands must flag boundedness");

        // With nothing in hand the same wand fails.
        let empty_cfg = ForceCfg::new(&lk, &universe);
        let mut empty = AugHeap::default();
        empty.h.insert(
            1,
            ObjRec {
                ty: TypeExpr::simple("Cell"),
                fields: BTreeMap::new(),
            },
        );
        assert!(!holds(&empty_cfg, &empty, &s, &f));
    }

    #[test]
    fn ghost_atoms() {
        let table = cell_table();
        let mut ah = cell_heap(Perm::ONE, 5);
        ah.fset.insert(1);
        let s = stack_x();
        assert!(check(&table, &ah, &s, "fresh(x)"));
        assert!(!check(&table, &ah, &s, "initialized(x)"));

        let mut ah2 = cell_heap(Perm::ONE, 5);
        ah2.iset.insert(1);
        ah2.l.insert(7, vec![1]);
        assert!(check(&table, &ah2, &s, "initialized(x)"));
        assert!(check(&table, &ah2, &s, "Lockset(x)"));
        assert!(!check(&table, &ah2, &s, "Lockset(nil)"));
        assert!(check(&table, &ah2, &s, "x + nil contains x"));

        let mut ah3 = cell_heap(Perm::ONE, 5);
        ah3.l.insert(7, Vec::new());
        assert!(check(&table, &ah3, &s, "Lockset(nil)"));
    }

    #[test]
    fn join_atom() {
        let table = parse_program("class W ext Thread { }")
            .unwrap()
            .table
            .with_builtins();
        let mut ah = AugHeap::default();
        ah.h.insert(
            1,
            ObjRec {
                ty: TypeExpr::simple("W"),
                fields: BTreeMap::new(),
            },
        );
        ah.p.insert((1, CellKey::Join), Perm::pow2(1));
        let s = stack_x();
        let lk = Lookup::new(&table).unwrap();
        let universe = Universe::empty();
        let cfg = ForceCfg::new(&lk, &universe);
        let f = parse_formula("Join(x, 1/2)").unwrap();
        assert!(holds(&cfg, &ah, &s, &f));
        let f = parse_formula("Join(x, 1)").unwrap();
        assert!(!holds(&cfg, &ah, &s, &f));
    }

    #[test]
    fn weakening_for_monotone_formulas() {
        // Formulas without fresh or Lockset atoms are preserved by heap
        // extension.
        let table = cell_table();
        let lk = Lookup::new(&table).unwrap();
        let bounds = ModelBounds {
            objects: vec![(1, TypeExpr::simple("Cell")), (2, TypeExpr::object())],
            ints: vec![0, 5],
            perm_grid: vec![Perm::pow2(1), Perm::ONE],
            ..ModelBounds::default()
        };
        let models = crate::model::enumerate::enumerate_models(&lk, &bounds);
        let universe = Universe::new(&lk, bounds);
        let cfg = ForceCfg::new(&lk, &universe);
        let s = stack_x();
        let formulas: Vec<Formula> = [
            "PointsTo(x.f, 1/2, 5)",
            "Perm(x.f, 1/2)",
            "x.state<5>",
            "x != null & x.init",
            "ex int n. PointsTo(x.f, 1/2, n)",
        ]
        .iter()
        .map(|src| parse_formula(src).unwrap())
        .collect();
        for a in &models {
            for b in &models {
                if !a.compatible(b) {
                    continue;
                }
                let joined = a.join(b);
                for f in &formulas {
                    if holds(&cfg, a, &s, f) {
                        assert!(
                            holds(&cfg, &joined, &s, f),
                            "weakening failed for {f:?}"
                        );
                    }
                }
            }
        }
    }
}
