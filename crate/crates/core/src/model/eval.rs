//! Evaluation of specification values, operators, and expressions over a
//! stack and an augmented heap.
//!
//! Evaluation is partial: reading an unbound variable, applying an
//! operator to ill-typed values, or asking for the dynamic type of an
//! unallocated object is undefined (`None`). The class tests are strict
//! in allocation but not in nullness: `null isclassof C` and
//! `null instanceof T` are both `false`.

use std::collections::BTreeMap;

use crate::lookup::{ms_normalize, specval_equiv, Lookup};
use crate::model::heap::AugHeap;
use crate::syntax::ast::{Expr, Ident, Op, SpecVal, TypeExpr};

/// A stack: both read-only and read-write variables bound to closed
/// values.
pub type Stack = BTreeMap<Ident, SpecVal>;

/// Resolve the variables of a specification value through the stack.
pub fn eval_specval(v: &SpecVal, s: &Stack) -> Option<SpecVal> {
    match v {
        SpecVal::Var(x) => s.get(x).cloned(),
        SpecVal::Split(inner) => Some(eval_specval(inner, s)?.split()),
        SpecVal::Union(a, b) => Some(SpecVal::union(eval_specval(a, s)?, eval_specval(b, s)?)),
        closed => Some(closed.clone()),
    }
}

fn as_int(v: &SpecVal) -> Option<i64> {
    match v {
        SpecVal::Int(n) => Some(*n),
        _ => None,
    }
}

fn as_bool(v: &SpecVal) -> Option<bool> {
    match v {
        SpecVal::Bool(b) => Some(*b),
        _ => None,
    }
}

/// Apply an operator to closed values.
pub fn eval_op(lk: &Lookup, ah: &AugHeap, op: &Op, vals: &[SpecVal]) -> Option<SpecVal> {
    match op {
        Op::Eq => Some(SpecVal::Bool(specval_equiv(&vals[0], &vals[1]))),
        Op::Not => Some(SpecVal::Bool(!as_bool(&vals[0])?)),
        Op::And => Some(SpecVal::Bool(as_bool(&vals[0])? && as_bool(&vals[1])?)),
        Op::Or => Some(SpecVal::Bool(as_bool(&vals[0])? || as_bool(&vals[1])?)),
        Op::Add => match (&vals[0], &vals[1]) {
            (SpecVal::Int(a), SpecVal::Int(b)) => Some(SpecVal::Int(a.checked_add(*b)?)),
            // Multiset union on lockset-typed values.
            (a, b) if !matches!(a, SpecVal::Bool(_)) && !matches!(b, SpecVal::Bool(_)) => {
                Some(SpecVal::union(a.clone(), b.clone()))
            }
            _ => None,
        },
        Op::Sub => Some(SpecVal::Int(as_int(&vals[0])?.checked_sub(as_int(&vals[1])?)?)),
        Op::Mul => Some(SpecVal::Int(as_int(&vals[0])?.checked_mul(as_int(&vals[1])?)?)),
        Op::Lt => Some(SpecVal::Bool(as_int(&vals[0])? < as_int(&vals[1])?)),
        Op::Le => Some(SpecVal::Bool(as_int(&vals[0])? <= as_int(&vals[1])?)),
        Op::Gt => Some(SpecVal::Bool(as_int(&vals[0])? > as_int(&vals[1])?)),
        Op::Ge => Some(SpecVal::Bool(as_int(&vals[0])? >= as_int(&vals[1])?)),
        Op::IsClassOf(class) => match &vals[0] {
            SpecVal::Null => Some(SpecVal::Bool(false)),
            SpecVal::Obj(o) => {
                let ty = ah.dyn_type(*o)?;
                Some(SpecVal::Bool(ty.ref_name() == Some(class.as_str())))
            }
            _ => None,
        },
        Op::InstanceOf(ty) => match &vals[0] {
            SpecVal::Null => Some(SpecVal::Bool(false)),
            SpecVal::Obj(o) => {
                let dt = ah.dyn_type(*o)?;
                Some(SpecVal::Bool(lk.subtype(dt, ty)))
            }
            _ => None,
        },
    }
}

/// Evaluate an expression to a closed value.
pub fn eval_expr(lk: &Lookup, ah: &AugHeap, s: &Stack, e: &Expr) -> Option<SpecVal> {
    match e {
        Expr::Spec(v) => eval_specval(v, s),
        Expr::Var(x) => s.get(x).cloned(),
        Expr::Op(op, args) => {
            let vals: Vec<SpecVal> = args
                .iter()
                .map(|a| eval_expr(lk, ah, s, a))
                .collect::<Option<_>>()?;
            eval_op(lk, ah, op, &vals)
        }
    }
}

/// Whether a closed value inhabits a type.
pub fn value_has_type(lk: &Lookup, ah: &AugHeap, v: &SpecVal, ty: &TypeExpr) -> bool {
    match v {
        SpecVal::Int(n) => match ty {
            TypeExpr::Int => true,
            // The literal `1` is also the full permission.
            TypeExpr::Perm => *n == 1,
            _ => false,
        },
        SpecVal::Bool(_) => *ty == TypeExpr::Bool,
        SpecVal::Split(inner) => {
            *ty == TypeExpr::Perm && value_has_type(lk, ah, inner, &TypeExpr::Perm)
        }
        SpecVal::Null => matches!(ty, TypeExpr::Ref(..) | TypeExpr::Void | TypeExpr::Lockset),
        SpecVal::Obj(o) => match ah.dyn_type(*o) {
            Some(dt) => lk.subtype(dt, ty),
            None => false,
        },
        SpecVal::Nil => *ty == TypeExpr::Lockset,
        SpecVal::Union(_, _) => {
            *ty == TypeExpr::Lockset
                && ms_normalize(v)
                    .iter()
                    .all(|a| value_has_type(lk, ah, a, &TypeExpr::Lockset))
        }
        SpecVal::Var(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::heap::ObjRec;
    use crate::syntax::ast::ClassTable;

    fn table() -> ClassTable {
        ClassTable::builtins()
    }

    #[test]
    fn arithmetic_and_comparison() {
        let table = table();
        let lk = Lookup::new(&table).unwrap();
        let ah = AugHeap::default();
        let mut s = Stack::new();
        s.insert("x".into(), SpecVal::Int(4));
        let e = Expr::Op(
            Op::Lt,
            vec![
                Expr::Op(Op::Add, vec![Expr::var("x"), Expr::int(1)]),
                Expr::int(6),
            ],
        );
        assert_eq!(eval_expr(&lk, &ah, &s, &e), Some(SpecVal::Bool(true)));
        assert_eq!(eval_expr(&lk, &ah, &s, &Expr::var("y")), None);
    }

    #[test]
    fn isclassof_null_is_false_and_off_heap_is_undef() {
        let table = table();
        let lk = Lookup::new(&table).unwrap();
        let mut ah = AugHeap::default();
        ah.h.insert(1, ObjRec::default());
        let s = Stack::new();

        let of_null = Expr::Op(Op::IsClassOf("Object".into()), vec![Expr::null()]);
        assert_eq!(eval_expr(&lk, &ah, &s, &of_null), Some(SpecVal::Bool(false)));

        let of_obj = Expr::Op(
            Op::IsClassOf("Object".into()),
            vec![Expr::Spec(SpecVal::Obj(1))],
        );
        assert_eq!(eval_expr(&lk, &ah, &s, &of_obj), Some(SpecVal::Bool(true)));

        let off_heap = Expr::Op(
            Op::IsClassOf("Object".into()),
            vec![Expr::Spec(SpecVal::Obj(2))],
        );
        assert_eq!(eval_expr(&lk, &ah, &s, &off_heap), None);
    }

    #[test]
    fn instanceof_uses_subtyping() {
        let table = table();
        let lk = Lookup::new(&table).unwrap();
        let mut ah = AugHeap::default();
        ah.h.insert(
            1,
            ObjRec {
                ty: TypeExpr::thread(),
                fields: BTreeMap::new(),
            },
        );
        let s = Stack::new();
        let e = Expr::Op(
            Op::InstanceOf(Box::new(TypeExpr::object())),
            vec![Expr::Spec(SpecVal::Obj(1))],
        );
        assert_eq!(eval_expr(&lk, &ah, &s, &e), Some(SpecVal::Bool(true)));
        let e = Expr::Op(
            Op::InstanceOf(Box::new(TypeExpr::thread())),
            vec![Expr::null()],
        );
        assert_eq!(eval_expr(&lk, &ah, &s, &e), Some(SpecVal::Bool(false)));
    }

    #[test]
    fn typing_of_values() {
        let table = table();
        let lk = Lookup::new(&table).unwrap();
        let ah = AugHeap::default();
        assert!(value_has_type(&lk, &ah, &SpecVal::Int(1), &TypeExpr::Perm));
        assert!(value_has_type(&lk, &ah, &SpecVal::Int(2), &TypeExpr::Int));
        assert!(!value_has_type(&lk, &ah, &SpecVal::Int(2), &TypeExpr::Perm));
        assert!(value_has_type(
            &lk,
            &ah,
            &SpecVal::pow2_frac(2),
            &TypeExpr::Perm
        ));
        assert!(value_has_type(&lk, &ah, &SpecVal::Null, &TypeExpr::object()));
        assert!(value_has_type(&lk, &ah, &SpecVal::Nil, &TypeExpr::Lockset));
    }
}
