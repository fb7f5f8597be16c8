//! Syntactic desugarings: group predicates into predicate + split axiom,
//! and expansion of derived formula forms into core connectives.

use thiserror::Error;

use super::ast::*;
use super::subst::FreshSupply;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DesugarError {
    #[error("cannot resolve the type of field `{field}` on `{target}` while expanding Perm")]
    UnknownFieldType { target: String, field: Ident },
}

/// `split(T, x)` halves permission-typed parameters and leaves all others
/// unchanged.
fn split_arg(ty: &TypeExpr, arg: SpecVal) -> SpecVal {
    if *ty == TypeExpr::Perm {
        arg.split()
    } else {
        arg
    }
}

/// Desugar every `group P<T xs> = F` into `pred P<T xs> = F` plus the
/// splitting axiom `P<xs> *-* (P<split(T,xs)> * P<split(T,xs)>)`.
/// Idempotent: a table without groups is returned unchanged.
pub fn desugar_groups(mut ct: ClassTable) -> ClassTable {
    for class in &mut ct.classes {
        let mut new_axioms = Vec::new();
        for pred in &mut class.preds {
            if !pred.group {
                continue;
            }
            pred.group = false;
            let args: Vec<SpecVal> = pred
                .params
                .iter()
                .map(|(_, x)| SpecVal::Var(x.clone()))
                .collect();
            let split_args: Vec<SpecVal> = pred
                .params
                .iter()
                .map(|(t, x)| split_arg(t, SpecVal::Var(x.clone())))
                .collect();
            let this = SpecVal::var("this");
            let whole = Formula::pred(this.clone(), &pred.name, args);
            let half = Formula::pred(this.clone(), &pred.name, split_args);
            new_axioms.push(AxiomDecl {
                name: Some(format!("{}$split", pred.name)),
                formula: Formula::Iff(
                    Box::new(whole),
                    Box::new(Formula::star(half.clone(), half)),
                ),
            });
        }
        class.axioms.extend(new_axioms);
    }
    ct
}

/// Expand the derived formula forms into core connectives:
///
/// * `PointsTo(e.f, pi, T)`  => `ex T a. PointsTo(e.f, pi, a)`
/// * `Perm(e.f, pi)`         => same, with `T` the declared field type
///   (resolved via `field_ty`)
/// * `F *-* G`               => `(F -* G) & (G -* F)`
/// * `assures F G`           => `F -* (F * G)`
/// * `F ispartof G`          => `G -* (F * (F -* G))`
///
/// The result uses only core constructors.
pub fn expand_derived(
    f: &Formula,
    field_ty: &dyn Fn(&Expr, &str) -> Option<TypeExpr>,
    supply: &mut FreshSupply,
) -> Result<Formula, DesugarError> {
    let go = |f: &Formula, supply: &mut FreshSupply| expand_derived(f, field_ty, supply);
    Ok(match f {
        Formula::PointsToTy {
            target,
            field,
            perm,
            ty,
        } => {
            let a = supply.fresh();
            Formula::ex(
                &a,
                ty.clone(),
                Formula::points_to(
                    target.clone(),
                    field,
                    perm.clone(),
                    Expr::spec_var(&a),
                ),
            )
        }
        Formula::PermAtom {
            target,
            field,
            perm,
        } => {
            let ty = field_ty(target, field).ok_or_else(|| DesugarError::UnknownFieldType {
                target: format!("{target:?}"),
                field: field.clone(),
            })?;
            let a = supply.fresh();
            Formula::ex(
                &a,
                ty,
                Formula::points_to(
                    target.clone(),
                    field,
                    perm.clone(),
                    Expr::spec_var(&a),
                ),
            )
        }
        Formula::Iff(a, b) => {
            let a1 = go(a, supply)?;
            let b1 = go(b, supply)?;
            Formula::and(
                Formula::wand(a1.clone(), b1.clone()),
                Formula::wand(b1, a1),
            )
        }
        Formula::Assures(a, b) => {
            let a1 = go(a, supply)?;
            let b1 = go(b, supply)?;
            Formula::wand(a1.clone(), Formula::star(a1, b1))
        }
        Formula::IsPartOf(a, b) => {
            let a1 = go(a, supply)?;
            let b1 = go(b, supply)?;
            Formula::wand(
                b1.clone(),
                Formula::star(a1.clone(), Formula::wand(a1, b1)),
            )
        }
        Formula::Star(a, b) => Formula::star(go(a, supply)?, go(b, supply)?),
        Formula::Wand(a, b) => Formula::wand(go(a, supply)?, go(b, supply)?),
        Formula::And(a, b) => Formula::and(go(a, supply)?, go(b, supply)?),
        Formula::Or(a, b) => Formula::or(go(a, supply)?, go(b, supply)?),
        Formula::Quant {
            kind,
            var,
            ty,
            body,
        } => Formula::Quant {
            kind: *kind,
            var: var.clone(),
            ty: ty.clone(),
            body: Box::new(go(body, supply)?),
        },
        _ => f.clone(),
    })
}
