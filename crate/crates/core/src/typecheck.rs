//! Typing judgments: good environments and types, well-typed values,
//! expressions, and formulas, well-typed heaps and stacks, and
//! class-table well-formedness.
//!
//! Formula checking tracks polarity: `fresh` and `initialized` are
//! transient facts and may only occur positively (they are consumed by
//! commit and never re-established by reasoning alone). Class checking
//! enforces the structural sanity conditions — superclasses are classes
//! and implemented types are interfaces, inherited fields are not
//! redeclared, `init` is reserved, predicates may only extend inherited
//! arities, overriding respects method subtyping, `run` in Thread
//! subclasses keeps its fixed contract — and the restriction that object
//! creation commands never mention logical method parameters.
//!
//! Method subtyping is semantic in general; the default decider here is
//! syntactic identity of contracts modulo renaming of logical parameters
//! and formals, which is sound. A caller may supply a stronger decider
//! (e.g. one backed by the entailment prover).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lookup::Lookup;
use crate::model::eval::Stack;
use crate::model::heap::AugHeap;
use crate::syntax::ast::*;
use crate::syntax::builtins::{is_primitive_method, thread_decl};
use crate::syntax::fv;
use crate::syntax::subst::{FreshSupply, Subst};

/// A diagnostic with a location path (`Class.member` or a judgment
/// description).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeError {
    pub at: String,
    pub msg: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.at, self.msg)
    }
}

impl std::error::Error for TypeError {}

fn err<T>(at: &str, msg: impl Into<String>) -> Result<T, TypeError> {
    Err(TypeError {
        at: at.to_string(),
        msg: msg.into(),
    })
}

/// A typing environment: variables and object identifiers to types.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeEnv {
    pub vars: BTreeMap<Ident, TypeExpr>,
    pub objs: BTreeMap<ObjId, TypeExpr>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn bind(&mut self, name: &str, ty: TypeExpr) {
        self.vars.insert(name.to_string(), ty);
    }

    pub fn bind_obj(&mut self, o: ObjId, ty: TypeExpr) {
        self.objs.insert(o, ty);
    }

    pub fn with(&self, name: &str, ty: TypeExpr) -> TypeEnv {
        let mut e = self.clone();
        e.bind(name, ty);
        e
    }

    /// The (Env) judgment: every binding has a good type, and object
    /// bindings are reference types.
    pub fn check(&self, lk: &Lookup) -> Result<(), TypeError> {
        for (x, t) in &self.vars {
            check_type(lk, self, t).map_err(|e| TypeError {
                at: format!("env var {x}"),
                msg: e.msg,
            })?;
        }
        for (o, t) in &self.objs {
            if !t.is_ref() {
                return err(&format!("env object #{o}"), "bound to a non-reference type");
            }
            check_type(lk, self, t).map_err(|e| TypeError {
                at: format!("env object #{o}"),
                msg: e.msg,
            })?;
        }
        Ok(())
    }
}

/// The good-types judgment: primitives are always good; reference types
/// must name a declared class or interface and instantiate its
/// parameters at the declared types.
pub fn check_type(lk: &Lookup, env: &TypeEnv, ty: &TypeExpr) -> Result<(), TypeError> {
    let TypeExpr::Ref(name, args) = ty else {
        return Ok(());
    };
    let params: Vec<(TypeExpr, Ident)> = if let Some(c) = lk.table.class(name) {
        c.params.clone()
    } else if let Some(i) = lk.table.interface(name) {
        i.params.clone()
    } else {
        return err(&format!("type {name}"), "unknown class or interface");
    };
    if params.len() != args.len() {
        return err(
            &format!("type {name}"),
            format!("expects {} parameter(s), got {}", params.len(), args.len()),
        );
    }
    let sigma = Subst::from_pairs(
        params
            .iter()
            .zip(args.iter())
            .map(|((_, n), a)| (n.as_str(), a.clone())),
    );
    for ((pt, pn), a) in params.iter().zip(args.iter()) {
        let want = sigma.type_expr(pt);
        if !specval_has_type(lk, env, a, &want) {
            return err(
                &format!("type {name}"),
                format!("parameter {pn} expects type {want:?}"),
            );
        }
    }
    Ok(())
}

/// Checking judgment for specification values, with subsumption.
pub fn specval_has_type(lk: &Lookup, env: &TypeEnv, v: &SpecVal, ty: &TypeExpr) -> bool {
    match v {
        SpecVal::Var(x) => match env.vars.get(x) {
            Some(t) => lk.subtype(t, ty),
            None => false,
        },
        SpecVal::Obj(o) => match env.objs.get(o) {
            Some(t) => lk.subtype(t, ty),
            None => false,
        },
        SpecVal::Null => matches!(ty, TypeExpr::Ref(..) | TypeExpr::Void),
        SpecVal::Int(n) => {
            *ty == TypeExpr::Int || (*n == 1 && *ty == TypeExpr::Perm)
        }
        SpecVal::Bool(_) => *ty == TypeExpr::Bool,
        SpecVal::Split(inner) => {
            *ty == TypeExpr::Perm && specval_has_type(lk, env, inner, &TypeExpr::Perm)
        }
        SpecVal::Nil => *ty == TypeExpr::Lockset,
        SpecVal::Union(a, b) => {
            *ty == TypeExpr::Lockset
                && specval_has_type(lk, env, a, &TypeExpr::Lockset)
                && specval_has_type(lk, env, b, &TypeExpr::Lockset)
        }
    }
}

fn op_result(lk: &Lookup, env: &TypeEnv, op: &Op, args: &[Expr]) -> Result<TypeExpr, TypeError> {
    let at = "operator";
    let bool_args = |n: usize| -> Result<(), TypeError> {
        for a in &args[..n] {
            if !expr_has_type(lk, env, a, &TypeExpr::Bool) {
                return err(at, "expects boolean operand(s)");
            }
        }
        Ok(())
    };
    let int_args = |n: usize| -> Result<(), TypeError> {
        for a in &args[..n] {
            if !expr_has_type(lk, env, a, &TypeExpr::Int) {
                return err(at, "expects integer operand(s)");
            }
        }
        Ok(())
    };
    match op {
        Op::Eq => {
            // Both sides must type at some common type.
            let l = check_expr(lk, env, &args[0]);
            let r = check_expr(lk, env, &args[1]);
            match (l, r) {
                (Ok(a), Ok(b)) => {
                    if lk.subtype(&a, &b) || lk.subtype(&b, &a) {
                        Ok(TypeExpr::Bool)
                    } else {
                        err(at, "incomparable operand types for ==")
                    }
                }
                // `null` and permission literals only check against a
                // type from the other side.
                (Ok(a), Err(_)) => {
                    if expr_has_type(lk, env, &args[1], &a) {
                        Ok(TypeExpr::Bool)
                    } else {
                        err(at, "right operand of == does not type")
                    }
                }
                (Err(_), Ok(b)) => {
                    if expr_has_type(lk, env, &args[0], &b) {
                        Ok(TypeExpr::Bool)
                    } else {
                        err(at, "left operand of == does not type")
                    }
                }
                (Err(e), Err(_)) => Err(e),
            }
        }
        Op::Not => {
            bool_args(1)?;
            Ok(TypeExpr::Bool)
        }
        Op::And | Op::Or => {
            bool_args(2)?;
            Ok(TypeExpr::Bool)
        }
        Op::Add | Op::Sub | Op::Mul => {
            int_args(2)?;
            Ok(TypeExpr::Int)
        }
        Op::Lt | Op::Le | Op::Gt | Op::Ge => {
            int_args(2)?;
            Ok(TypeExpr::Bool)
        }
        Op::IsClassOf(class) => {
            if !lk.table.is_class(class) {
                return err(at, format!("unknown class {class} in isclassof"));
            }
            if !expr_has_type(lk, env, &args[0], &TypeExpr::object()) {
                return err(at, "isclassof expects a reference operand");
            }
            Ok(TypeExpr::Bool)
        }
        Op::InstanceOf(ty) => {
            check_type(lk, env, ty)?;
            if !expr_has_type(lk, env, &args[0], &TypeExpr::object()) {
                return err(at, "instanceof expects a reference operand");
            }
            Ok(TypeExpr::Bool)
        }
    }
}

/// Synthesize the type of an expression. Literals without a principal
/// type (`null`) do not synthesize; use [`expr_has_type`] against an
/// expected type instead.
pub fn check_expr(lk: &Lookup, env: &TypeEnv, e: &Expr) -> Result<TypeExpr, TypeError> {
    match e {
        Expr::Spec(v) => match v {
            SpecVal::Var(x) => match env.vars.get(x) {
                Some(t) => Ok(t.clone()),
                None => err(&format!("variable {x}"), "unbound"),
            },
            SpecVal::Obj(o) => match env.objs.get(o) {
                Some(t) => Ok(t.clone()),
                None => err(&format!("object #{o}"), "unbound"),
            },
            SpecVal::Null => err("null", "has no principal type; check against an expected type"),
            SpecVal::Int(_) => Ok(TypeExpr::Int),
            SpecVal::Bool(_) => Ok(TypeExpr::Bool),
            SpecVal::Split(inner) => {
                if specval_has_type(lk, env, inner, &TypeExpr::Perm) {
                    Ok(TypeExpr::Perm)
                } else {
                    err("split", "operand is not a permission")
                }
            }
            SpecVal::Nil => Ok(TypeExpr::Lockset),
            SpecVal::Union(_, _) => {
                if specval_has_type(lk, env, v, &TypeExpr::Lockset) {
                    Ok(TypeExpr::Lockset)
                } else {
                    err("multiset union", "operands are not locksets")
                }
            }
        },
        Expr::Var(x) => match env.vars.get(x) {
            Some(t) => Ok(t.clone()),
            None => err(&format!("variable {x}"), "unbound"),
        },
        Expr::Op(op, args) => {
            if args.len() != op.arity() {
                return err("operator", "wrong arity");
            }
            op_result(lk, env, op, args)
        }
    }
}

/// Checking judgment for expressions, with subsumption and the literal
/// special cases (`null` at reference types, `1` at `perm`).
pub fn expr_has_type(lk: &Lookup, env: &TypeEnv, e: &Expr, ty: &TypeExpr) -> bool {
    if let Expr::Spec(v) = e {
        return specval_has_type(lk, env, v, ty);
    }
    match check_expr(lk, env, e) {
        Ok(t) => lk.subtype(&t, ty),
        Err(_) => false,
    }
}

/// Occurrence polarity, for the positivity restriction on transient
/// atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pol {
    Pos,
    Neg,
    Both,
}

impl Pol {
    fn flip(self) -> Pol {
        match self {
            Pol::Pos => Pol::Neg,
            Pol::Neg => Pol::Pos,
            Pol::Both => Pol::Both,
        }
    }
}

/// The well-typed-formulas judgment.
pub fn check_formula(lk: &Lookup, env: &TypeEnv, f: &Formula) -> Result<(), TypeError> {
    check_formula_pol(lk, env, f, Pol::Pos)
}

fn points_to_field_type(
    lk: &Lookup,
    env: &TypeEnv,
    target: &Expr,
    field: &str,
) -> Result<TypeExpr, TypeError> {
    let u = check_expr(lk, env, target)?;
    if !u.is_ref() {
        return err(field, "points-to target is not a reference");
    }
    lk.field_type(&u, field).map_err(|e| TypeError {
        at: format!("field {field}"),
        msg: e.to_string(),
    })
}

fn check_perm_val(lk: &Lookup, env: &TypeEnv, perm: &SpecVal) -> Result<(), TypeError> {
    if specval_has_type(lk, env, perm, &TypeExpr::Perm) {
        Ok(())
    } else {
        err("permission", "not a permission-typed value")
    }
}

/// Field names used in points-to position within a formula (for the
/// no-quantification-over-field-names restriction).
fn field_positions(f: &Formula, out: &mut BTreeSet<Ident>) {
    match f {
        Formula::PointsTo { field, .. }
        | Formula::PointsToTy { field, .. }
        | Formula::PermAtom { field, .. } => {
            out.insert(field.clone());
        }
        Formula::Star(a, b)
        | Formula::Wand(a, b)
        | Formula::Iff(a, b)
        | Formula::Assures(a, b)
        | Formula::IsPartOf(a, b)
        | Formula::And(a, b)
        | Formula::Or(a, b) => {
            field_positions(a, out);
            field_positions(b, out);
        }
        Formula::Quant { body, .. } => field_positions(body, out),
        _ => {}
    }
}

fn check_formula_pol(lk: &Lookup, env: &TypeEnv, f: &Formula, pol: Pol) -> Result<(), TypeError> {
    match f {
        Formula::Pure(e) => {
            if expr_has_type(lk, env, e, &TypeExpr::Bool) {
                Ok(())
            } else {
                err("pure formula", "expression is not boolean")
            }
        }
        Formula::PointsTo {
            target,
            field,
            perm,
            value,
        } => {
            let t = points_to_field_type(lk, env, target, field)?;
            check_perm_val(lk, env, perm)?;
            if expr_has_type(lk, env, value, &t) {
                Ok(())
            } else {
                err(&format!("field {field}"), "value does not match the field type")
            }
        }
        Formula::PointsToTy {
            target,
            field,
            perm,
            ty,
        } => {
            let t = points_to_field_type(lk, env, target, field)?;
            check_perm_val(lk, env, perm)?;
            check_type(lk, env, ty)?;
            if lk.subtype(ty, &t) {
                Ok(())
            } else {
                err(&format!("field {field}"), "annotated type does not match the field type")
            }
        }
        Formula::PermAtom {
            target,
            field,
            perm,
        } => {
            points_to_field_type(lk, env, target, field)?;
            check_perm_val(lk, env, perm)
        }
        Formula::PredApp {
            recv,
            name,
            at,
            args,
        } => {
            if *recv == SpecVal::Null {
                return Ok(());
            }
            let u = check_expr(lk, env, &Expr::Spec(recv.clone()))?;
            if !u.is_ref() {
                return err(name, "predicate receiver is not a reference");
            }
            let lookup_ty = match at {
                None => u.clone(),
                Some(class) => {
                    let supers = lk.supertypes(&u).map_err(|e| TypeError {
                        at: name.clone(),
                        msg: e.to_string(),
                    })?;
                    match supers.into_iter().find(|t| t.ref_name() == Some(class)) {
                        Some(t) => t,
                        None => {
                            return err(
                                name,
                                format!("receiver type is not a subtype of qualifier {class}"),
                            )
                        }
                    }
                }
            };
            let params = lk.ptype(name, &lookup_ty).map_err(|e| TypeError {
                at: name.clone(),
                msg: e.to_string(),
            })?;
            if args.len() > params.len() {
                return err(
                    name,
                    format!("expects at most {} argument(s), got {}", params.len(), args.len()),
                );
            }
            for (a, (pt, pn)) in args.iter().zip(params.iter()) {
                if !specval_has_type(lk, env, a, pt) {
                    return err(name, format!("argument for {pn} has the wrong type"));
                }
            }
            Ok(())
        }
        Formula::Star(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
            check_formula_pol(lk, env, a, pol)?;
            check_formula_pol(lk, env, b, pol)
        }
        Formula::Wand(a, b) => {
            check_formula_pol(lk, env, a, pol.flip())?;
            check_formula_pol(lk, env, b, pol)
        }
        Formula::Iff(a, b) => {
            check_formula_pol(lk, env, a, Pol::Both)?;
            check_formula_pol(lk, env, b, Pol::Both)
        }
        Formula::Assures(a, b) => {
            check_formula_pol(lk, env, a, Pol::Both)?;
            check_formula_pol(lk, env, b, pol)
        }
        Formula::IsPartOf(a, b) => {
            check_formula_pol(lk, env, a, Pol::Both)?;
            check_formula_pol(lk, env, b, Pol::Both)
        }
        Formula::Quant { var, ty, body, .. } => {
            check_type(lk, env, ty)?;
            let mut fields = BTreeSet::new();
            field_positions(body, &mut fields);
            if fields.contains(var) {
                return err(
                    var,
                    "quantification over a field name is forbidden",
                );
            }
            check_formula_pol(lk, &env.with(var, ty.clone()), body, pol)
        }
        Formula::Join { thread, perm } => {
            if !expr_has_type(lk, env, thread, &TypeExpr::thread()) {
                return err("Join", "receiver must be a Thread");
            }
            check_perm_val(lk, env, perm)
        }
        Formula::Lockset(v) => {
            if specval_has_type(lk, env, v, &TypeExpr::Lockset) {
                Ok(())
            } else {
                err("Lockset", "argument is not a lockset")
            }
        }
        Formula::Contains { set, elem } => {
            if !specval_has_type(lk, env, set, &TypeExpr::Lockset) {
                return err("contains", "left operand is not a lockset");
            }
            if expr_has_type(lk, env, elem, &TypeExpr::object()) {
                Ok(())
            } else {
                err("contains", "element is not a reference")
            }
        }
        Formula::Fresh(e) => {
            if pol != Pol::Pos {
                return err("fresh", "must not occur in a negative position");
            }
            if expr_has_type(lk, env, e, &TypeExpr::object()) {
                Ok(())
            } else {
                err("fresh", "argument is not a reference")
            }
        }
        Formula::Initialized(e) => {
            if pol != Pol::Pos {
                return err("initialized", "must not occur in a negative position");
            }
            if expr_has_type(lk, env, e, &TypeExpr::object()) {
                Ok(())
            } else {
                err("initialized", "argument is not a reference")
            }
        }
    }
}

/// Well-typed heaps: the environment's object bindings agree with the
/// heap's dynamic types, and every (partial) object store is well-typed.
pub fn check_heap(lk: &Lookup, env: &TypeEnv, ah: &AugHeap) -> Result<(), TypeError> {
    env.check(lk)?;
    for (o, ty) in &env.objs {
        match ah.dyn_type(*o) {
            Some(t) if t == ty => {}
            _ => return err(&format!("object #{o}"), "environment type disagrees with the heap"),
        }
    }
    for (o, rec) in &ah.h {
        let fields = lk.fields(&rec.ty).map_err(|e| TypeError {
            at: format!("object #{o}"),
            msg: e.to_string(),
        })?;
        for (f, v) in &rec.fields {
            let Some((_, ft)) = fields.iter().find(|(n, _)| n == f) else {
                return err(&format!("object #{o}"), format!("stores undeclared field {f}"));
            };
            if !specval_has_type(lk, env, v, ft) {
                return err(&format!("object #{o}"), format!("field {f} holds an ill-typed value"));
            }
        }
    }
    Ok(())
}

/// Well-typed stacks: every bound variable holds a value of its
/// environment type.
pub fn check_stack(lk: &Lookup, env: &TypeEnv, s: &Stack) -> Result<(), TypeError> {
    env.check(lk)?;
    for (x, v) in s {
        let Some(t) = env.vars.get(x) else {
            return err(&format!("variable {x}"), "bound on the stack but not in the environment");
        };
        if !specval_has_type(lk, env, v, t) {
            return err(&format!("variable {x}"), "stack value does not match its type");
        }
    }
    Ok(())
}

/// A method-subtyping decider: does the first (overriding) signature
/// refine the second (overridden) one?
pub type MstDecider<'x> = &'x dyn Fn(&MethodSig, &MethodSig) -> bool;

/// The default decider: syntactic identity of contracts modulo renaming
/// of logical parameters and formals.
pub fn sigs_identical_mod_renaming(sub: &MethodSig, sup: &MethodSig) -> bool {
    if sub.ret != sup.ret
        || sub.logic_params.len() != sup.logic_params.len()
        || sub.formals.len() != sup.formals.len()
    {
        return false;
    }
    for ((t, _), (u, _)) in sub.logic_params.iter().zip(&sup.logic_params) {
        if t != u {
            return false;
        }
    }
    for ((t, _), (u, _)) in sub.formals.iter().zip(&sup.formals) {
        if t != u {
            return false;
        }
    }
    let pairs = sub
        .logic_params
        .iter()
        .zip(&sup.logic_params)
        .chain(sub.formals.iter().zip(&sup.formals))
        .map(|((_, a), (_, b))| (a.as_str(), SpecVal::Var(b.clone())));
    let sigma = Subst::from_pairs(pairs);
    let rename = |f: &Formula| {
        let mut supply = FreshSupply::avoiding(
            fv::fv_formula(f).iter().map(|s| s.as_str()),
        );
        sigma.formula(f, &mut supply)
    };
    rename(&sub.requires) == sup.requires && rename(&sub.ensures) == sup.ensures
}

fn push_err(errs: &mut Vec<TypeError>, prefix: &str, e: Result<(), TypeError>) {
    if let Err(mut te) = e {
        te.at = format!("{prefix}: {}", te.at);
        errs.push(te);
    }
}

/// Check a whole class table with the default method-subtyping decider.
pub fn check_class_table(lk: &Lookup) -> Vec<TypeError> {
    check_class_table_with(lk, &sigs_identical_mod_renaming)
}

/// Check a whole class table; returns all diagnostics (empty = ok).
pub fn check_class_table_with(lk: &Lookup, mst: MstDecider) -> Vec<TypeError> {
    let mut errs = Vec::new();
    for c in &lk.table.classes {
        if c.builtin {
            continue;
        }
        check_class(lk, c, mst, &mut errs);
    }
    for i in &lk.table.interfaces {
        check_interface(lk, i, &mut errs);
    }
    errs
}

fn class_env(params: &[(TypeExpr, Ident)], this_ty: TypeExpr) -> TypeEnv {
    let mut env = TypeEnv::new();
    for (t, n) in params {
        env.bind(n, t.clone());
    }
    env.bind("this", this_ty);
    env
}

fn self_type(name: &str, params: &[(TypeExpr, Ident)]) -> TypeExpr {
    TypeExpr::Ref(
        name.to_string(),
        params.iter().map(|(_, n)| SpecVal::Var(n.clone())).collect(),
    )
}

fn check_class(lk: &Lookup, c: &ClassDecl, mst: MstDecider, errs: &mut Vec<TypeError>) {
    let at = |member: &str| format!("{}.{member}", c.name);
    let this_ty = self_type(&c.name, &c.params);
    let env = class_env(&c.params, this_ty.clone());

    for (t, n) in &c.params {
        push_err(errs, &at(&format!("param {n}")), check_type(lk, &env, t));
    }

    // Superclass sanity.
    let sup = c.ext.clone().unwrap_or_else(TypeExpr::object);
    match sup.ref_name().map(|n| lk.table.is_class(n)) {
        Some(true) => push_err(errs, &at("extends"), check_type(lk, &env, &sup)),
        _ => errs.push(TypeError {
            at: at("extends"),
            msg: "superclass is not a class".into(),
        }),
    }

    // Fields: good types, no perm/lockset, no redeclaration.
    let inherited: BTreeSet<String> = lk
        .fields(&sup)
        .map(|fs| fs.into_iter().map(|(n, _)| n).collect())
        .unwrap_or_default();
    for (t, f) in &c.fields {
        if matches!(t, TypeExpr::Perm | TypeExpr::Lockset) {
            errs.push(TypeError {
                at: at(&format!("field {f}")),
                msg: "fields of type perm or lockset are not allowed".into(),
            });
        }
        push_err(errs, &at(&format!("field {f}")), check_type(lk, &env, t));
        if inherited.contains(f) {
            errs.push(TypeError {
                at: at(&format!("field {f}")),
                msg: "redeclares an inherited field".into(),
            });
        }
    }

    // Predicates: init reserved, bodies well-typed, arity extension only.
    for p in &c.preds {
        if p.name == "init" {
            errs.push(TypeError {
                at: at("pred init"),
                msg: "init is reserved and may not be declared".into(),
            });
            continue;
        }
        let mut penv = env.clone();
        for (t, n) in &p.params {
            push_err(errs, &at(&format!("pred {} param {n}", p.name)), check_type(lk, &penv, t));
            penv.bind(n, t.clone());
        }
        push_err(errs, &at(&format!("pred {}", p.name)), check_formula(lk, &penv, &p.body));
        if let Ok(sup_params) = lk.ptype(&p.name, &sup) {
            if p.params.len() < sup_params.len()
                || p.params
                    .iter()
                    .zip(sup_params.iter())
                    .any(|((t, _), (u, _))| t != u)
            {
                errs.push(TypeError {
                    at: at(&format!("pred {}", p.name)),
                    msg: "must extend the inherited parameter list (same prefix)".into(),
                });
            }
        }
    }

    // Implemented interfaces: must be interfaces; every member defined
    // and conforming.
    for v in &c.impls {
        let Some(iname) = v.ref_name() else {
            continue;
        };
        let Some(idecl) = lk.table.interface(iname) else {
            errs.push(TypeError {
                at: at("impl"),
                msg: format!("{iname} is not an interface"),
            });
            continue;
        };
        push_err(errs, &at("impl"), check_type(lk, &env, v));
        for mt in &idecl.mtypes {
            match (lk.mtype(&mt.name, &this_ty), lk.mtype(&mt.name, v)) {
                (Ok(mine), Ok(want)) => {
                    if !mst(&mine, &want) {
                        errs.push(TypeError {
                            at: at(&format!("method {}", mt.name)),
                            msg: format!("does not refine the contract of {iname}.{}", mt.name),
                        });
                    }
                }
                (Err(_), _) => errs.push(TypeError {
                    at: at(&format!("method {}", mt.name)),
                    msg: format!("required by interface {iname} but not defined"),
                }),
                (_, Err(e)) => errs.push(TypeError {
                    at: at(&format!("method {}", mt.name)),
                    msg: e.to_string(),
                }),
            }
        }
        for pt in &idecl.pred_types {
            match lk.ptype(&pt.name, &this_ty) {
                Ok(mine) => {
                    if mine.len() < pt.params.len()
                        || mine
                            .iter()
                            .zip(pt.params.iter())
                            .any(|((t, _), (u, _))| t != u)
                    {
                        errs.push(TypeError {
                            at: at(&format!("pred {}", pt.name)),
                            msg: format!("does not extend the parameter list of {iname}.{}", pt.name),
                        });
                    }
                }
                Err(_) => errs.push(TypeError {
                    at: at(&format!("pred {}", pt.name)),
                    msg: format!("required by interface {iname} but not defined"),
                }),
            }
        }
    }

    // Axioms.
    for (i, ax) in c.axioms.iter().enumerate() {
        let label = ax
            .name
            .clone()
            .unwrap_or_else(|| format!("axiom#{i}"));
        push_err(errs, &at(&label), check_formula(lk, &env, &ax.formula));
    }

    // Methods.
    let is_thread_sub = lk.subtype(&this_ty, &TypeExpr::thread());
    for m in &c.methods {
        check_method(lk, c, &env, m, &sup, is_thread_sub, mst, errs);
    }
}

#[allow(clippy::too_many_arguments)]
fn check_method(
    lk: &Lookup,
    c: &ClassDecl,
    env: &TypeEnv,
    m: &MethodDecl,
    sup: &TypeExpr,
    is_thread_sub: bool,
    mst: MstDecider,
    errs: &mut Vec<TypeError>,
) {
    let at = format!("{}.{}", c.name, m.sig.name);

    let mut menv = env.clone();
    for (t, n) in &m.sig.logic_params {
        push_err(errs, &at, check_type(lk, &menv, t));
        menv.bind(n, t.clone());
    }
    for (t, n) in &m.sig.formals {
        push_err(errs, &at, check_type(lk, &menv, t));
        menv.bind(n, t.clone());
    }
    push_err(errs, &at, check_type(lk, &menv, &m.sig.ret));
    push_err(errs, &at, check_formula(lk, &menv, &m.sig.requires));
    let penv = menv.with("result", m.sig.ret.clone());
    push_err(errs, &at, check_formula(lk, &penv, &m.sig.ensures));

    // Overriding: the superclass contract must be refined, and final
    // methods stay final.
    if let Ok(want) = lk.mtype(&m.sig.name, sup) {
        if want.is_final {
            errs.push(TypeError {
                at: at.clone(),
                msg: "overrides a final method".into(),
            });
        } else if !mst(&m.sig, &want) {
            errs.push(TypeError {
                at: at.clone(),
                msg: "does not refine the overridden contract".into(),
            });
        }
    }

    // run keeps its fixed contract in Thread subclasses.
    if is_thread_sub && m.sig.name == "run" {
        let fixed = thread_decl()
            .methods
            .into_iter()
            .find(|md| md.sig.name == "run")
            .unwrap()
            .sig;
        if !sigs_identical_mod_renaming(&m.sig, &fixed) {
            errs.push(TypeError {
                at: at.clone(),
                msg: "run must keep the fixed Thread contract".into(),
            });
        }
    }

    match &m.body {
        None => {
            if !is_primitive_method(&m.sig.name) {
                errs.push(TypeError {
                    at,
                    msg: "only built-in primitives may omit a body".into(),
                });
            }
        }
        Some(body) => {
            // Object creation commands must not mention logical method
            // parameters.
            let creation_vars = fv::cfv(body);
            for (_, n) in &m.sig.logic_params {
                if creation_vars.contains(n) {
                    errs.push(TypeError {
                        at: at.clone(),
                        msg: format!("logical parameter {n} occurs in an object creation command"),
                    });
                }
            }
        }
    }
}

fn check_interface(lk: &Lookup, i: &InterfaceDecl, errs: &mut Vec<TypeError>) {
    if i.name == "Object" || i.name == "Thread" {
        return;
    }
    let at = |member: &str| format!("{}.{member}", i.name);
    let this_ty = self_type(&i.name, &i.params);
    let env = class_env(&i.params, this_ty.clone());
    for (t, n) in &i.params {
        push_err(errs, &at(&format!("param {n}")), check_type(lk, &env, t));
    }
    for x in &i.exts {
        match x.ref_name().map(|n| lk.table.is_interface(n)) {
            Some(true) => push_err(errs, &at("ext"), check_type(lk, &env, x)),
            _ => errs.push(TypeError {
                at: at("ext"),
                msg: "extended type is not an interface".into(),
            }),
        }
    }
    for pt in &i.pred_types {
        let mut penv = env.clone();
        for (t, n) in &pt.params {
            push_err(errs, &at(&format!("pred {} param {n}", pt.name)), check_type(lk, &penv, t));
            penv.bind(n, t.clone());
        }
    }
    for mt in &i.mtypes {
        let mut menv = env.clone();
        for (t, n) in &mt.logic_params {
            push_err(errs, &at(&format!("method {}", mt.name)), check_type(lk, &menv, t));
            menv.bind(n, t.clone());
        }
        for (t, n) in &mt.formals {
            push_err(errs, &at(&format!("method {}", mt.name)), check_type(lk, &menv, t));
            menv.bind(n, t.clone());
        }
        push_err(errs, &at(&format!("method {}", mt.name)), check_type(lk, &menv, &mt.ret));
        push_err(errs, &at(&format!("method {}", mt.name)), check_formula(lk, &menv, &mt.requires));
        let penv = menv.with("result", mt.ret.clone());
        push_err(errs, &at(&format!("method {}", mt.name)), check_formula(lk, &penv, &mt.ensures));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_program};

    fn table(src: &str) -> ClassTable {
        parse_program(src).unwrap().table.with_builtins()
    }

    fn list_table() -> ClassTable {
        table(
            "class List ext Object {
               int val;
               List next;
               pred state<int n> = PointsTo(this.val, 1, n) * Perm(this.next, 1);
             }",
        )
    }

    #[test]
    fn good_types_and_environments() {
        let t = table("class Box<int n> ext Object { int v; }");
        let lk = Lookup::new(&t).unwrap();
        let env = TypeEnv::new();
        assert!(check_type(&lk, &env, &TypeExpr::Int).is_ok());
        assert!(check_type(&lk, &env, &TypeExpr::object()).is_ok());
        // Box<n> with n unbound is bad; bound at int it is good.
        let boxed = TypeExpr::Ref("Box".into(), vec![SpecVal::var("n")]);
        assert!(check_type(&lk, &env, &boxed).is_err());
        assert!(check_type(&lk, &env.with("n", TypeExpr::Int), &boxed).is_ok());
        // Arity mismatch.
        let bad = TypeExpr::Ref("Box".into(), vec![]);
        assert!(check_type(&lk, &env, &bad).is_err());
        // Unknown type.
        assert!(check_type(&lk, &env, &TypeExpr::simple("Nope")).is_err());
    }

    #[test]
    fn expression_typing_and_subsumption() {
        let t = list_table();
        let lk = Lookup::new(&t).unwrap();
        let mut env = TypeEnv::new();
        env.bind("x", TypeExpr::simple("List"));
        env.bind("n", TypeExpr::Int);
        let e = parse_formula("n + 1 == 2").unwrap();
        assert!(check_formula(&lk, &env, &e).is_ok());
        // Subsumption: a List types at Object and at lockset.
        assert!(expr_has_type(&lk, &env, &Expr::spec_var("x"), &TypeExpr::object()));
        assert!(expr_has_type(&lk, &env, &Expr::spec_var("x"), &TypeExpr::Lockset));
        assert!(!expr_has_type(&lk, &env, &Expr::spec_var("x"), &TypeExpr::Int));
        // null checks against reference types only.
        assert!(expr_has_type(&lk, &env, &Expr::null(), &TypeExpr::simple("List")));
        assert!(!expr_has_type(&lk, &env, &Expr::null(), &TypeExpr::Int));
        // The literal 1 is both int and perm.
        assert!(expr_has_type(&lk, &env, &Expr::int(1), &TypeExpr::Perm));
        assert!(!expr_has_type(&lk, &env, &Expr::int(2), &TypeExpr::Perm));
    }

    #[test]
    fn formula_typing_accepts_and_rejects() {
        let t = list_table();
        let lk = Lookup::new(&t).unwrap();
        let mut env = TypeEnv::new();
        env.bind("x", TypeExpr::simple("List"));
        env.bind("t", TypeExpr::thread());
        env.bind("p", TypeExpr::Perm);

        let ok = |src: &str| check_formula(&lk, &env, &parse_formula(src).unwrap());
        assert!(ok("PointsTo(x.val, 1, 3)").is_ok());
        assert!(ok("PointsTo(x.val, p/2, 3)").is_ok());
        assert!(ok("x.state<3>").is_ok());
        assert!(ok("x.state").is_ok());
        assert!(ok("Join(t, p)").is_ok());
        assert!(ok("Lockset(x + nil)").is_ok());
        assert!(ok("x + nil contains x").is_ok());

        // Unknown field; bad value type; receiver not Thread; arity
        // overflow.
        assert!(ok("PointsTo(x.nope, 1, 3)").is_err());
        assert!(ok("PointsTo(x.val, 1, true)").is_err());
        assert!(ok("Join(x, p)").is_err());
        assert!(ok("x.state<1, 2>").is_err());
    }

    #[test]
    fn transient_atoms_must_be_positive() {
        let t = list_table();
        let lk = Lookup::new(&t).unwrap();
        let mut env = TypeEnv::new();
        env.bind("x", TypeExpr::simple("List"));
        let ok = |src: &str| check_formula(&lk, &env, &parse_formula(src).unwrap());
        assert!(ok("initialized(x)").is_ok());
        assert!(ok("true -* initialized(x)").is_ok());
        assert!(ok("initialized(x) -* true").is_err());
        assert!(ok("fresh(x) -* true").is_err());
        assert!(ok("(true -* fresh(x)) -* true").is_err());
    }

    #[test]
    fn quantifying_over_a_field_name_is_rejected() {
        let t = list_table();
        let lk = Lookup::new(&t).unwrap();
        let mut env = TypeEnv::new();
        env.bind("x", TypeExpr::simple("List"));
        let f = parse_formula("ex int val. PointsTo(x.val, 1, val)").unwrap();
        assert!(check_formula(&lk, &env, &f).is_err());
        let g = parse_formula("ex int n. PointsTo(x.val, 1, n)").unwrap();
        assert!(check_formula(&lk, &env, &g).is_ok());
    }

    #[test]
    fn class_table_well_formedness() {
        let good = list_table();
        let lk = Lookup::new(&good).unwrap();
        assert!(check_class_table(&lk).is_empty());
    }

    #[test]
    fn redeclared_field_and_perm_field_are_rejected() {
        let t = table(
            "class A ext Object { int f; }
             class B ext A { int f; perm p; }",
        );
        let lk = Lookup::new(&t).unwrap();
        let errs = check_class_table(&lk);
        assert!(errs.iter().any(|e| e.msg.contains("redeclares")), "{errs:?}");
        assert!(errs.iter().any(|e| e.msg.contains("perm or lockset")), "{errs:?}");
    }

    #[test]
    fn init_is_reserved() {
        let t = table("class A ext Object { pred init = true; }");
        let lk = Lookup::new(&t).unwrap();
        let errs = check_class_table(&lk);
        assert!(errs.iter().any(|e| e.msg.contains("reserved")), "{errs:?}");
    }

    #[test]
    fn predicate_arity_extension_only() {
        let t = table(
            "class A ext Object { pred st<int n> = true; }
             class B ext A { pred st<bool b> = true; }
             class C ext A { pred st<int n, bool b> = true; }",
        );
        let lk = Lookup::new(&t).unwrap();
        let errs = check_class_table(&lk);
        assert!(errs.iter().any(|e| e.at.contains("B.pred st")), "{errs:?}");
        assert!(!errs.iter().any(|e| e.at.contains("C.pred st")), "{errs:?}");
    }

    #[test]
    fn run_contract_is_fixed_and_finals_stay_final() {
        let good = table(
            "class W ext Thread {
               void run()
                 requires Lockset(nil) * this.preFork;
                 ensures (ex lockset S. Lockset(S)) * this.postJoin<1>;
               { }
             }",
        );
        let lk = Lookup::new(&good).unwrap();
        assert!(check_class_table(&lk).is_empty(), "{:?}", check_class_table(&lk));

        let bad = table("class W ext Thread { void run() requires true; ensures true; { } }");
        let lk = Lookup::new(&bad).unwrap();
        let errs = check_class_table(&lk);
        assert!(errs.iter().any(|e| e.msg.contains("fixed Thread contract")), "{errs:?}");

        let final_override = table("class W ext Thread { void fork() requires true; ensures true; { } }");
        let lk = Lookup::new(&final_override).unwrap();
        let errs = check_class_table(&lk);
        assert!(errs.iter().any(|e| e.msg.contains("final")), "{errs:?}");
    }

    #[test]
    fn override_requires_identical_contract_by_default() {
        let t = table(
            "class A ext Object {
               int m() requires true; ensures result == 0; { return 0; }
             }
             class B ext A {
               int m() requires true; ensures result == 1; { return 1; }
             }
             class C ext A {
               int m() requires true; ensures result == 0; { return 0; }
             }",
        );
        let lk = Lookup::new(&t).unwrap();
        let errs = check_class_table(&lk);
        assert!(errs.iter().any(|e| e.at.contains("B.m")), "{errs:?}");
        assert!(!errs.iter().any(|e| e.at.contains("C.m")), "{errs:?}");
    }

    #[test]
    fn interface_implementation_is_checked() {
        let t = table(
            "interface Counter {
               int get() requires true; ensures true; ;
             }
             class Impl ext Object impl Counter {
               int get() requires true; ensures true; { return 0; }
             }
             class Missing ext Object impl Counter { }",
        );
        let lk = Lookup::new(&t).unwrap();
        let errs = check_class_table(&lk);
        assert!(!errs.iter().any(|e| e.at.contains("Impl.")), "{errs:?}");
        assert!(
            errs.iter()
                .any(|e| e.at.contains("Missing.method get") && e.msg.contains("not defined")),
            "{errs:?}"
        );
    }

    #[test]
    fn logic_params_cannot_reach_object_creation() {
        let t = table(
            "class A ext Object {
               void m<int n>() requires true; ensures true; {
                 A x;
                 x = new A;
               }
             }",
        );
        let lk = Lookup::new(&t).unwrap();
        assert!(check_class_table(&lk).is_empty());
        // The restriction bites only when a creation argument mentions
        // the logical parameter.
        let bad = table(
            "class B<int k> ext Object { }
             class A ext Object {
               void m<int n>() requires true; ensures true; {
                 B<n> x;
                 x = new B<n>;
               }
             }",
        );
        let lk = Lookup::new(&bad).unwrap();
        let errs = check_class_table(&lk);
        assert!(
            errs.iter().any(|e| e.msg.contains("object creation")),
            "{errs:?}"
        );
    }

    #[test]
    fn heap_and_stack_typing() {
        use crate::model::heap::ObjRec;
        use crate::model::perm::Perm;
        use crate::model::CellKey;
        use std::collections::BTreeMap;

        let t = list_table();
        let lk = Lookup::new(&t).unwrap();
        let mut env = TypeEnv::new();
        env.bind_obj(1, TypeExpr::simple("List"));
        env.bind("x", TypeExpr::simple("List"));

        let mut ah = AugHeap::default();
        ah.h.insert(
            1,
            ObjRec {
                ty: TypeExpr::simple("List"),
                fields: BTreeMap::from([("val".to_string(), SpecVal::Int(3))]),
            },
        );
        ah.p.insert((1, CellKey::field("val")), Perm::ONE);
        assert!(check_heap(&lk, &env, &ah).is_ok());

        let mut bad = ah.clone();
        bad.h.get_mut(&1).unwrap().fields.insert("val".into(), SpecVal::Bool(true));
        assert!(check_heap(&lk, &env, &bad).is_err());

        let s = Stack::from([("x".to_string(), SpecVal::Obj(1))]);
        assert!(check_stack(&lk, &env, &s).is_ok());
        let s_bad = Stack::from([("x".to_string(), SpecVal::Int(3))]);
        assert!(check_stack(&lk, &env, &s_bad).is_err());
    }
}
