//! Symbolic normal form for formulas: a prefix of opened existentials, a
//! counted multiset of spatial atoms, a set of duplicable pure atoms, and
//! at most one `Lockset` slot (two `Lockset` atoms never `*`-combine).
//!
//! Normalization is disjunctive: `|` and conditional structure split a
//! formula into cases, each of which is a [`SymFormula`]. Additive
//! conjunctions `F & G` are approximated conservatively: the left
//! conjunct's spatial atoms are kept, the right conjunct contributes its
//! pure atoms plus field-value equalities shared with the left.

use crate::lookup::{ms_normalize, specval_equiv, Lookup};
use crate::syntax::ast::*;
use crate::syntax::fv::fv_formula;
use crate::syntax::{FreshSupply, Subst};
use crate::typecheck::{check_expr, TypeEnv};

/// The base of a symbolic dyadic permission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PermBase {
    /// The full permission `1`.
    Full,
    /// A permission-typed variable.
    Var(Ident),
}

/// A symbolic permission `base / 2^halvings`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymPerm {
    pub base: PermBase,
    pub halvings: u32,
}

impl SymPerm {
    pub fn full() -> SymPerm {
        SymPerm {
            base: PermBase::Full,
            halvings: 0,
        }
    }

    /// Parse a permission-typed specification value: `1`, a variable, or
    /// a chain of `split`s over either.
    pub fn from_specval(v: &SpecVal) -> Option<SymPerm> {
        match v {
            SpecVal::Int(1) => Some(SymPerm::full()),
            SpecVal::Var(x) => Some(SymPerm {
                base: PermBase::Var(x.clone()),
                halvings: 0,
            }),
            SpecVal::Split(inner) => {
                let mut p = SymPerm::from_specval(inner)?;
                p.halvings += 1;
                Some(p)
            }
            _ => None,
        }
    }

    pub fn to_specval(&self) -> SpecVal {
        let mut v = match &self.base {
            PermBase::Full => SpecVal::full(),
            PermBase::Var(x) => SpecVal::Var(x.clone()),
        };
        for _ in 0..self.halvings {
            v = v.split();
        }
        v
    }

    /// The fraction of the base this permission denotes, as
    /// `num / 2^den_log` (always `1 / 2^halvings`).
    pub fn fraction(&self) -> (u64, u32) {
        (1, self.halvings)
    }
}

/// A counted spatial atom.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialAtom {
    PointsTo {
        target: Expr,
        field: Ident,
        perm: SymPerm,
        value: Expr,
    },
    Pred {
        recv: SpecVal,
        name: Ident,
        at: Option<Ident>,
        args: Vec<SpecVal>,
    },
    Join {
        thread: Expr,
        perm: SymPerm,
    },
    Fresh(Expr),
    /// A pure-guarded wand `b -* F`: a conditional atom, promoted to its
    /// body (or dropped) once the guard is decided.
    CondWand {
        guard: Box<Formula>,
        body: Box<Formula>,
    },
    /// A general wand, opaque: eliminated only by matching its left-hand
    /// side.
    Wand {
        lhs: Box<Formula>,
        rhs: Box<Formula>,
    },
}

impl SpatialAtom {
    pub fn to_formula(&self) -> Formula {
        match self {
            SpatialAtom::PointsTo {
                target,
                field,
                perm,
                value,
            } => Formula::points_to(target.clone(), field, perm.to_specval(), value.clone()),
            SpatialAtom::Pred {
                recv,
                name,
                at,
                args,
            } => Formula::PredApp {
                recv: recv.clone(),
                name: name.clone(),
                at: at.clone(),
                args: args.clone(),
            },
            SpatialAtom::Join { thread, perm } => Formula::Join {
                thread: thread.clone(),
                perm: perm.to_specval(),
            },
            SpatialAtom::Fresh(e) => Formula::Fresh(e.clone()),
            SpatialAtom::CondWand { guard, body } => {
                Formula::wand((**guard).clone(), (**body).clone())
            }
            SpatialAtom::Wand { lhs, rhs } => Formula::wand((**lhs).clone(), (**rhs).clone()),
        }
    }
}

/// A duplicable pure atom.
#[derive(Debug, Clone, PartialEq)]
pub enum PureAtom {
    /// A boolean expression asserted true.
    Bool(Expr),
    Contains { set: SpecVal, elem: Expr },
    NotContains { set: SpecVal, elem: Expr },
    Initialized(Expr),
}

impl PureAtom {
    pub fn to_formula(&self) -> Formula {
        match self {
            PureAtom::Bool(e) => Formula::Pure(e.clone()),
            PureAtom::Contains { set, elem } => Formula::Contains {
                set: set.clone(),
                elem: elem.clone(),
            },
            PureAtom::NotContains { set, elem } => Formula::wand(
                Formula::Contains {
                    set: set.clone(),
                    elem: elem.clone(),
                },
                Formula::Pure(Expr::Spec(SpecVal::Bool(false))),
            ),
            PureAtom::Initialized(e) => Formula::Initialized(e.clone()),
        }
    }
}

/// A formula in symbolic normal form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymFormula {
    /// Opened existential binders (freshly renamed).
    pub binders: Vec<(Ident, TypeExpr)>,
    pub spatial: Vec<SpatialAtom>,
    pub pure: Vec<PureAtom>,
    pub lockset: Option<SpecVal>,
}

impl SymFormula {
    pub fn is_pure(&self) -> bool {
        self.spatial.is_empty() && self.lockset.is_none()
    }

    /// Reassemble a formula (existentials outermost, components starred).
    pub fn to_formula(&self) -> Formula {
        let mut parts: Vec<Formula> = Vec::new();
        parts.extend(self.spatial.iter().map(|a| a.to_formula()));
        if let Some(s) = &self.lockset {
            parts.push(Formula::Lockset(s.clone()));
        }
        parts.extend(self.pure.iter().map(|a| a.to_formula()));
        let mut f = Formula::star_all(parts);
        for (x, t) in self.binders.iter().rev() {
            f = Formula::ex(x, t.clone(), f);
        }
        f
    }

    fn merge_star(mut self, other: SymFormula) -> SymFormula {
        self.binders.extend(other.binders);
        self.spatial.extend(other.spatial);
        self.pure.extend(other.pure);
        match (&self.lockset, other.lockset) {
            (Some(_), Some(_)) => {
                // Two `Lockset` atoms never `*`-combine: the case is
                // unsatisfiable.
                self.pure
                    .push(PureAtom::Bool(Expr::Spec(SpecVal::Bool(false))));
            }
            (None, Some(s)) => self.lockset = Some(s),
            _ => {}
        }
        self
    }

    /// Conservative additive conjunction: if one side is pure, the other
    /// carries the heap; otherwise the left side's spatial atoms win and
    /// the right contributes pure knowledge (including field-value
    /// equalities for cells both sides mention).
    fn merge_and(mut self, mut other: SymFormula) -> SymFormula {
        // Shared-cell values agree under `&`.
        let mut eqs = Vec::new();
        for a in &self.spatial {
            for b in &other.spatial {
                if let (
                    SpatialAtom::PointsTo {
                        target: t1,
                        field: f1,
                        value: v1,
                        ..
                    },
                    SpatialAtom::PointsTo {
                        target: t2,
                        field: f2,
                        value: v2,
                        ..
                    },
                ) = (a, b)
                {
                    if f1 == f2 && t1 == t2 && v1 != v2 {
                        eqs.push(PureAtom::Bool(Expr::eq(v1.clone(), v2.clone())));
                    }
                }
            }
        }
        if self.is_pure() {
            std::mem::swap(&mut self, &mut other);
        }
        self.binders.extend(other.binders);
        self.pure.extend(other.pure);
        self.pure.extend(eqs);
        if self.lockset.is_none() {
            self.lockset = other.lockset;
        }
        self
    }
}

/// Whether a formula is pure: no spatial atoms, no `Lockset`, no
/// quantifiers, no `fresh`, and all predicate applications absent.
pub fn is_pure_formula(f: &Formula) -> bool {
    match f {
        Formula::Pure(_) | Formula::Contains { .. } | Formula::Initialized(_) => true,
        Formula::Star(a, b)
        | Formula::And(a, b)
        | Formula::Or(a, b)
        | Formula::Wand(a, b)
        | Formula::Iff(a, b)
        | Formula::Assures(a, b)
        | Formula::IsPartOf(a, b) => is_pure_formula(a) && is_pure_formula(b),
        _ => false,
    }
}

/// Context needed by normalization: the class table (for field types of
/// `Perm` atoms) and a typing environment.
pub struct NormCtx<'a> {
    pub lk: &'a Lookup<'a>,
    pub env: &'a TypeEnv,
}

const MAX_CASES: usize = 32;

/// Normalize a formula into disjunctive cases of [`SymFormula`]s.
///
/// Errors when the formula is outside the symbolic fragment (for
/// instance a permission that is not a dyadic split of `1` or a
/// variable).
pub fn normalize_cases(
    ctx: &NormCtx,
    f: &Formula,
    supply: &mut FreshSupply,
) -> Result<Vec<SymFormula>, String> {
    let cases = norm(ctx, f, supply)?;
    if cases.len() > MAX_CASES {
        return Err(format!("formula splits into {} cases", cases.len()));
    }
    Ok(cases)
}

/// Normalize a formula expected to produce a single case.
pub fn normalize_single(
    ctx: &NormCtx,
    f: &Formula,
    supply: &mut FreshSupply,
) -> Result<SymFormula, String> {
    let mut cases = normalize_cases(ctx, f, supply)?;
    if cases.len() != 1 {
        return Err(format!(
            "formula `{f}` splits into {} cases where one is required",
            cases.len()
        ));
    }
    Ok(cases.pop().unwrap())
}

fn singleton(sf: SymFormula) -> Result<Vec<SymFormula>, String> {
    Ok(vec![sf])
}

fn pure_case(atom: PureAtom) -> Result<Vec<SymFormula>, String> {
    singleton(SymFormula {
        pure: vec![atom],
        ..SymFormula::default()
    })
}

fn spatial_case(atom: SpatialAtom) -> Result<Vec<SymFormula>, String> {
    singleton(SymFormula {
        spatial: vec![atom],
        ..SymFormula::default()
    })
}

fn parse_perm(v: &SpecVal) -> Result<SymPerm, String> {
    SymPerm::from_specval(v).ok_or_else(|| format!("`{v}` is not a symbolic dyadic permission"))
}

/// Collect the conjuncts of a boolean expression.
fn expr_conjuncts(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Op(Op::And, args) => {
            expr_conjuncts(&args[0], out);
            expr_conjuncts(&args[1], out);
        }
        Expr::Spec(SpecVal::Bool(true)) => {}
        other => out.push(other.clone()),
    }
}

fn norm(
    ctx: &NormCtx,
    f: &Formula,
    supply: &mut FreshSupply,
) -> Result<Vec<SymFormula>, String> {
    match f {
        Formula::Pure(e) => {
            let mut conj = Vec::new();
            expr_conjuncts(e, &mut conj);
            singleton(SymFormula {
                pure: conj.into_iter().map(PureAtom::Bool).collect(),
                ..SymFormula::default()
            })
        }
        Formula::Contains { set, elem } => pure_case(PureAtom::Contains {
            set: set.clone(),
            elem: elem.clone(),
        }),
        Formula::Initialized(e) => pure_case(PureAtom::Initialized(e.clone())),
        Formula::Fresh(e) => spatial_case(SpatialAtom::Fresh(e.clone())),
        Formula::Lockset(v) => singleton(SymFormula {
            lockset: Some(v.clone()),
            ..SymFormula::default()
        }),
        Formula::PointsTo {
            target,
            field,
            perm,
            value,
        } => spatial_case(SpatialAtom::PointsTo {
            target: target.clone(),
            field: field.clone(),
            perm: parse_perm(perm)?,
            value: (**value).clone(),
        }),
        Formula::PointsToTy {
            target,
            field,
            perm,
            ty,
        } => {
            let a = supply.fresh();
            norm(
                ctx,
                &Formula::ex(
                    &a,
                    ty.clone(),
                    Formula::points_to(target.clone(), field, perm.clone(), Expr::spec_var(&a)),
                ),
                supply,
            )
        }
        Formula::PermAtom {
            target,
            field,
            perm,
        } => {
            let ty = check_expr(ctx.lk, ctx.env, target)
                .map_err(|e| e.to_string())
                .and_then(|t| {
                    ctx.lk
                        .field_type(&t, field)
                        .map_err(|e| e.to_string())
                })?;
            norm(
                ctx,
                &Formula::PointsToTy {
                    target: target.clone(),
                    field: field.clone(),
                    perm: perm.clone(),
                    ty,
                },
                supply,
            )
        }
        Formula::PredApp {
            recv,
            name,
            at,
            args,
        } => {
            // A predicate at the `null` receiver is true.
            if *recv == SpecVal::Null {
                return singleton(SymFormula::default());
            }
            spatial_case(SpatialAtom::Pred {
                recv: recv.clone(),
                name: name.clone(),
                at: at.clone(),
                args: args.clone(),
            })
        }
        Formula::Join { thread, perm } => spatial_case(SpatialAtom::Join {
            thread: thread.clone(),
            perm: parse_perm(perm)?,
        }),
        Formula::Star(a, b) => {
            let la = norm(ctx, a, supply)?;
            let lb = norm(ctx, b, supply)?;
            let mut out = Vec::new();
            for ca in &la {
                for cb in &lb {
                    out.push(ca.clone().merge_star(cb.clone()));
                }
            }
            Ok(out)
        }
        Formula::And(a, b) => {
            let la = norm(ctx, a, supply)?;
            let lb = norm(ctx, b, supply)?;
            let mut out = Vec::new();
            for ca in &la {
                for cb in &lb {
                    out.push(ca.clone().merge_and(cb.clone()));
                }
            }
            Ok(out)
        }
        Formula::Or(a, b) => {
            let mut out = norm(ctx, a, supply)?;
            out.extend(norm(ctx, b, supply)?);
            Ok(out)
        }
        Formula::Quant {
            kind: QuantKind::Ex,
            var,
            ty,
            body,
        } => {
            let fresh = supply.fresh();
            let renamed = Subst::one(var, SpecVal::Var(fresh.clone())).formula(body, supply);
            let cases = norm(ctx, &renamed, supply)?;
            Ok(cases
                .into_iter()
                .map(|mut c| {
                    c.binders.insert(0, (fresh.clone(), ty.clone()));
                    c
                })
                .collect())
        }
        // A universally quantified hypothesis is weakened away: the
        // prover does not instantiate universals.
        Formula::Quant {
            kind: QuantKind::Fa,
            ..
        } => singleton(SymFormula::default()),
        Formula::Wand(a, b) => {
            if is_pure_formula(a) {
                if let (Some(ea), Some(eb)) = (pure_as_expr(a), pure_as_expr(b)) {
                    // A pure implication is itself a duplicable boolean.
                    return pure_case(PureAtom::Bool(Expr::Op(
                        Op::Or,
                        vec![Expr::not(ea), eb],
                    )));
                }
                // `(S contains e) -* false` is a negative membership atom.
                if let (Formula::Contains { set, elem }, Formula::Pure(e)) = (&**a, &**b) {
                    if *e == Expr::Spec(SpecVal::Bool(false)) {
                        return pure_case(PureAtom::NotContains {
                            set: set.clone(),
                            elem: elem.clone(),
                        });
                    }
                }
                return spatial_case(SpatialAtom::CondWand {
                    guard: a.clone(),
                    body: b.clone(),
                });
            }
            spatial_case(SpatialAtom::Wand {
                lhs: a.clone(),
                rhs: b.clone(),
            })
        }
        Formula::Iff(a, b) => norm(
            ctx,
            &Formula::and(
                Formula::wand((**a).clone(), (**b).clone()),
                Formula::wand((**b).clone(), (**a).clone()),
            ),
            supply,
        ),
        Formula::Assures(a, b) => norm(
            ctx,
            &Formula::wand(
                (**a).clone(),
                Formula::star((**a).clone(), (**b).clone()),
            ),
            supply,
        ),
        Formula::IsPartOf(a, b) => norm(
            ctx,
            &Formula::wand(
                (**b).clone(),
                Formula::star(
                    (**a).clone(),
                    Formula::wand((**a).clone(), (**b).clone()),
                ),
            ),
            supply,
        ),
    }
}

/// Express a pure formula as a single boolean expression, when possible
/// (no `contains`/`initialized` atoms).
fn pure_as_expr(f: &Formula) -> Option<Expr> {
    match f {
        Formula::Pure(e) => Some(e.clone()),
        Formula::Star(a, b) | Formula::And(a, b) => Some(Expr::Op(
            Op::And,
            vec![pure_as_expr(a)?, pure_as_expr(b)?],
        )),
        Formula::Or(a, b) => Some(Expr::Op(
            Op::Or,
            vec![pure_as_expr(a)?, pure_as_expr(b)?],
        )),
        Formula::Wand(a, b) => Some(Expr::Op(
            Op::Or,
            vec![Expr::not(pure_as_expr(a)?), pure_as_expr(b)?],
        )),
        _ => None,
    }
}

/// A fresh-name supply avoiding a formula's free variables and binders.
pub fn supply_for(fs: &[&Formula]) -> FreshSupply {
    let mut names: Vec<String> = Vec::new();
    for f in fs {
        names.extend(fv_formula(f));
        collect_binders(f, &mut names);
    }
    FreshSupply::avoiding(names.iter().map(|s| s.as_str()))
}

fn collect_binders(f: &Formula, out: &mut Vec<String>) {
    match f {
        Formula::Quant { var, body, .. } => {
            out.push(var.clone());
            collect_binders(body, out);
        }
        Formula::Star(a, b)
        | Formula::Wand(a, b)
        | Formula::Iff(a, b)
        | Formula::Assures(a, b)
        | Formula::IsPartOf(a, b)
        | Formula::And(a, b)
        | Formula::Or(a, b) => {
            collect_binders(a, out);
            collect_binders(b, out);
        }
        _ => {}
    }
}

/// Multiset equality of two specification values up to the bag axioms
/// (associativity, commutativity, `nil` unit).
pub fn bags_equal(a: &SpecVal, b: &SpecVal) -> bool {
    ms_normalize(a) == ms_normalize(b)
}

/// Syntactic equivalence of predicate-argument lists.
pub fn args_equal(a: &[SpecVal], b: &[SpecVal]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| specval_equiv(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::typecheck::TypeEnv;

    fn with_table<R>(src: &str, k: impl FnOnce(&NormCtx) -> R) -> R {
        let table = parse_program(src).unwrap().table.with_builtins();
        let lk = Lookup::new(&table).unwrap();
        let env = TypeEnv::new();
        k(&NormCtx { lk: &lk, env: &env })
    }

    const CELL: &str = "class Cell { int f; pred state<int n> = true; }";

    fn fml(src: &str) -> Formula {
        crate::parser::parse_formula(src).unwrap()
    }

    #[test]
    fn star_of_atoms_and_pure() {
        with_table(CELL, |ctx| {
            let f = fml("PointsTo(x.f, 1/2, v) * v == 3 * Lockset(nil)");
            let mut supply = supply_for(&[&f]);
            let cases = normalize_cases(ctx, &f, &mut supply).unwrap();
            assert_eq!(cases.len(), 1);
            let c = &cases[0];
            assert_eq!(c.spatial.len(), 1);
            assert_eq!(c.pure.len(), 1);
            assert_eq!(c.lockset, Some(SpecVal::Nil));
            match &c.spatial[0] {
                SpatialAtom::PointsTo { perm, .. } => {
                    assert_eq!(perm, &SymPerm {
                        base: PermBase::Full,
                        halvings: 1
                    });
                }
                other => panic!("unexpected atom {other:?}"),
            }
        });
    }

    #[test]
    fn two_locksets_become_inconsistent() {
        with_table(CELL, |ctx| {
            let f = fml("Lockset(nil) * Lockset(S)");
            let mut supply = supply_for(&[&f]);
            let cases = normalize_cases(ctx, &f, &mut supply).unwrap();
            assert!(cases[0]
                .pure
                .iter()
                .any(|p| matches!(p, PureAtom::Bool(Expr::Spec(SpecVal::Bool(false))))));
        });
    }

    #[test]
    fn or_splits_and_ex_opens() {
        with_table(CELL, |ctx| {
            let f = fml("ex int n. (n == 0 | x.state<n>)");
            let mut supply = supply_for(&[&f]);
            let cases = normalize_cases(ctx, &f, &mut supply).unwrap();
            assert_eq!(cases.len(), 2);
            assert_eq!(cases[0].binders.len(), 1);
            assert!(cases[1].spatial.len() == 1);
        });
    }

    #[test]
    fn guarded_wand_is_conditional_atom_and_pure_wand_is_boolean() {
        with_table(CELL, |ctx| {
            let f = fml("v == 0 -* PointsTo(x.f, 1, 0)");
            let mut supply = supply_for(&[&f]);
            let cases = normalize_cases(ctx, &f, &mut supply).unwrap();
            assert!(matches!(cases[0].spatial[0], SpatialAtom::CondWand { .. }));

            let g = fml("v == 0 -* w == 0");
            let mut supply = supply_for(&[&g]);
            let cases = normalize_cases(ctx, &g, &mut supply).unwrap();
            assert!(cases[0].spatial.is_empty());
            assert_eq!(cases[0].pure.len(), 1);
        });
    }

    #[test]
    fn and_keeps_left_spatial_and_derives_value_equality() {
        with_table(CELL, |ctx| {
            let f = fml("PointsTo(x.f, p, v) & PointsTo(x.f, q, w)");
            let mut supply = supply_for(&[&f]);
            let cases = normalize_cases(ctx, &f, &mut supply).unwrap();
            let c = &cases[0];
            assert_eq!(c.spatial.len(), 1);
            assert!(c
                .pure
                .iter()
                .any(|p| matches!(p, PureAtom::Bool(e) if *e == Expr::eq(Expr::spec_var("v"), Expr::spec_var("w")))));
        });
    }

    #[test]
    fn perm_atom_expands_to_typed_existential() {
        with_table(CELL, |ctx| {
            let mut env = TypeEnv::new();
            env.bind("x", TypeExpr::simple("Cell"));
            let ctx = NormCtx { lk: ctx.lk, env: &env };
            let f = fml("Perm(x.f, 1/4)");
            let mut supply = supply_for(&[&f]);
            let c = normalize_single(&ctx, &f, &mut supply).unwrap();
            assert_eq!(c.binders.len(), 1);
            assert_eq!(c.binders[0].1, TypeExpr::Int);
            assert!(matches!(
                &c.spatial[0],
                SpatialAtom::PointsTo { perm, .. } if perm.halvings == 2
            ));
        });
    }

    #[test]
    fn null_receiver_predicate_is_true() {
        with_table(CELL, |ctx| {
            let f = fml("null.state<0>");
            let mut supply = supply_for(&[&f]);
            let c = normalize_single(ctx, &f, &mut supply).unwrap();
            assert!(c.spatial.is_empty() && c.pure.is_empty());
        });
    }
}
