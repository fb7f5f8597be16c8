//! Capture-avoiding simultaneous substitution of specification values for
//! read-only and logical variables, plus the deterministic fresh-name
//! supply used for alpha-renaming.

use std::collections::BTreeMap;

use super::ast::*;
use super::fv;

/// Monotone fresh-name supply. Generated names are `_v0, _v1, ...`; user
/// identifiers may not begin with `_`, so generated names never collide
/// with source names. To stay fresh w.r.t. previously generated names,
/// seed the supply with [`FreshSupply::avoiding`].
#[derive(Debug, Clone, Default)]
pub struct FreshSupply {
    next: u64,
}

impl FreshSupply {
    pub fn new() -> FreshSupply {
        FreshSupply { next: 0 }
    }

    /// A supply whose names avoid every `_vN` occurring in `names`.
    pub fn avoiding<'a>(names: impl IntoIterator<Item = &'a str>) -> FreshSupply {
        let mut next = 0;
        for n in names {
            if let Some(rest) = n.strip_prefix("_v") {
                if let Ok(k) = rest.parse::<u64>() {
                    next = next.max(k + 1);
                }
            }
        }
        FreshSupply { next }
    }

    pub fn fresh(&mut self) -> Ident {
        let name = format!("_v{}", self.next);
        self.next += 1;
        name
    }
}

/// A substitution of specification values for variables. Applying it to a
/// read-write variable occurrence in its domain is an error (read-write
/// variables are handled by plain renaming, not substitution).
#[derive(Debug, Clone, Default)]
pub struct Subst {
    map: BTreeMap<Ident, SpecVal>,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn one(var: &str, val: SpecVal) -> Subst {
        let mut s = Subst::new();
        s.bind(var, val);
        s
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, SpecVal)>) -> Subst {
        let mut s = Subst::new();
        for (v, val) in pairs {
            s.bind(v, val);
        }
        s
    }

    pub fn bind(&mut self, var: &str, val: SpecVal) {
        self.map.insert(var.to_string(), val);
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, var: &str) -> Option<&SpecVal> {
        self.map.get(var)
    }

    /// Free variables of the substitution's range.
    fn range_fv(&self) -> Vec<Ident> {
        let mut out = Vec::new();
        for v in self.map.values() {
            fv::fv_specval(v, &mut out);
        }
        out
    }

    /// Remove a binder's variable from the substitution; if the binder
    /// captures a range variable, rename the binder via `supply` and
    /// return the new name.
    fn enter_binder(&self, var: &Ident, supply: &mut FreshSupply) -> (Subst, Option<Ident>) {
        let mut inner = self.clone();
        inner.map.remove(var);
        if inner.map.is_empty() {
            return (inner, None);
        }
        if inner.range_fv().contains(var) {
            let fresh = supply.fresh();
            inner.map.insert(var.clone(), SpecVal::Var(fresh.clone()));
            (inner, Some(fresh))
        } else {
            (inner, None)
        }
    }

    pub fn specval(&self, v: &SpecVal) -> SpecVal {
        match v {
            SpecVal::Var(x) => self.map.get(x).cloned().unwrap_or_else(|| v.clone()),
            SpecVal::Split(inner) => SpecVal::Split(Box::new(self.specval(inner))),
            SpecVal::Union(a, b) => {
                SpecVal::Union(Box::new(self.specval(a)), Box::new(self.specval(b)))
            }
            _ => v.clone(),
        }
    }

    pub fn type_expr(&self, t: &TypeExpr) -> TypeExpr {
        match t {
            TypeExpr::Ref(n, args) => {
                TypeExpr::Ref(n.clone(), args.iter().map(|a| self.specval(a)).collect())
            }
            _ => t.clone(),
        }
    }

    pub fn expr(&self, e: &Expr) -> Expr {
        match e {
            Expr::Spec(v) => Expr::Spec(self.specval(v)),
            // Read-write variables are never in the domain (checked by the
            // parser/typechecker); leave them alone.
            Expr::Var(_) => e.clone(),
            Expr::Op(op, args) => {
                let op = match op {
                    Op::InstanceOf(t) => Op::InstanceOf(Box::new(self.type_expr(t))),
                    other => other.clone(),
                };
                Expr::Op(op, args.iter().map(|a| self.expr(a)).collect())
            }
        }
    }

    pub fn formula(&self, f: &Formula, supply: &mut FreshSupply) -> Formula {
        match f {
            Formula::Pure(e) => Formula::Pure(self.expr(e)),
            Formula::PointsTo {
                target,
                field,
                perm,
                value,
            } => Formula::PointsTo {
                target: self.expr(target),
                field: field.clone(),
                perm: self.specval(perm),
                value: Box::new(self.expr(value)),
            },
            Formula::PointsToTy {
                target,
                field,
                perm,
                ty,
            } => Formula::PointsToTy {
                target: self.expr(target),
                field: field.clone(),
                perm: self.specval(perm),
                ty: self.type_expr(ty),
            },
            Formula::PermAtom {
                target,
                field,
                perm,
            } => Formula::PermAtom {
                target: self.expr(target),
                field: field.clone(),
                perm: self.specval(perm),
            },
            Formula::PredApp {
                recv,
                name,
                at,
                args,
            } => Formula::PredApp {
                recv: self.specval(recv),
                name: name.clone(),
                at: at.clone(),
                args: args.iter().map(|a| self.specval(a)).collect(),
            },
            Formula::Star(a, b) => {
                Formula::star(self.formula(a, supply), self.formula(b, supply))
            }
            Formula::Wand(a, b) => {
                Formula::wand(self.formula(a, supply), self.formula(b, supply))
            }
            Formula::Iff(a, b) => Formula::Iff(
                Box::new(self.formula(a, supply)),
                Box::new(self.formula(b, supply)),
            ),
            Formula::Assures(a, b) => Formula::Assures(
                Box::new(self.formula(a, supply)),
                Box::new(self.formula(b, supply)),
            ),
            Formula::IsPartOf(a, b) => Formula::IsPartOf(
                Box::new(self.formula(a, supply)),
                Box::new(self.formula(b, supply)),
            ),
            Formula::And(a, b) => Formula::and(self.formula(a, supply), self.formula(b, supply)),
            Formula::Or(a, b) => Formula::or(self.formula(a, supply), self.formula(b, supply)),
            Formula::Quant {
                kind,
                var,
                ty,
                body,
            } => {
                let ty = self.type_expr(ty);
                let (inner, renamed) = self.enter_binder(var, supply);
                let var = renamed.unwrap_or_else(|| var.clone());
                Formula::Quant {
                    kind: *kind,
                    var,
                    ty,
                    body: Box::new(inner.formula(body, supply)),
                }
            }
            Formula::Join { thread, perm } => Formula::Join {
                thread: self.expr(thread),
                perm: self.specval(perm),
            },
            Formula::Lockset(v) => Formula::Lockset(self.specval(v)),
            Formula::Contains { set, elem } => Formula::Contains {
                set: self.specval(set),
                elem: self.expr(elem),
            },
            Formula::Fresh(e) => Formula::Fresh(self.expr(e)),
            Formula::Initialized(e) => Formula::Initialized(self.expr(e)),
        }
    }

    pub fn hint(&self, h: &Hint) -> Hint {
        match h {
            Hint::Unfold { recv, pred, at } => Hint::Unfold {
                recv: self.expr(recv),
                pred: pred.clone(),
                at: at.clone(),
            },
            Hint::Fold {
                recv,
                pred,
                at,
                args,
            } => Hint::Fold {
                recv: self.expr(recv),
                pred: pred.clone(),
                at: at.clone(),
                args: args.iter().map(|a| self.specval(a)).collect(),
            },
            Hint::Axiom(n) => Hint::Axiom(n.clone()),
            Hint::Witness { var, val } => Hint::Witness {
                var: var.clone(),
                val: self.specval(val),
            },
        }
    }

    pub fn head_cmd(&self, hc: &HeadCmd, supply: &mut FreshSupply) -> HeadCmd {
        match hc {
            HeadCmd::VarSet(x, e) => HeadCmd::VarSet(x.clone(), self.expr(e)),
            HeadCmd::FieldGet(x, e, f) => HeadCmd::FieldGet(x.clone(), self.expr(e), f.clone()),
            HeadCmd::FieldSet(e, f, w) => {
                HeadCmd::FieldSet(self.expr(e), f.clone(), self.expr(w))
            }
            HeadCmd::New { lhs, class, args } => HeadCmd::New {
                lhs: lhs.clone(),
                class: class.clone(),
                args: args.iter().map(|a| self.specval(a)).collect(),
            },
            HeadCmd::Call {
                lhs,
                recv,
                method,
                spec_args,
                args,
            } => HeadCmd::Call {
                lhs: lhs.clone(),
                recv: self.expr(recv),
                method: method.clone(),
                spec_args: spec_args.iter().map(|a| self.specval(a)).collect(),
                args: args.iter().map(|a| self.expr(a)).collect(),
            },
            HeadCmd::If(e, c1, c2) => HeadCmd::If(
                self.expr(e),
                Box::new(self.cmd(c1, supply)),
                Box::new(self.cmd(c2, supply)),
            ),
            HeadCmd::While {
                guard,
                invariant,
                body,
            } => HeadCmd::While {
                guard: self.expr(guard),
                invariant: self.formula(invariant, supply),
                body: Box::new(self.cmd(body, supply)),
            },
            HeadCmd::Lock(e) => HeadCmd::Lock(self.expr(e)),
            HeadCmd::Unlock(e) => HeadCmd::Unlock(self.expr(e)),
            HeadCmd::Assert(f) => HeadCmd::Assert(self.formula(f, supply)),
            HeadCmd::Commit(e) => HeadCmd::Commit(self.expr(e)),
            HeadCmd::Hint(h) => HeadCmd::Hint(self.hint(h)),
            HeadCmd::Waiting { obj, level } => HeadCmd::Waiting {
                obj: self.expr(obj),
                level: *level,
            },
            HeadCmd::Resume { obj, level } => HeadCmd::Resume {
                obj: self.expr(obj),
                level: *level,
            },
        }
    }

    pub fn cmd(&self, c: &Cmd, supply: &mut FreshSupply) -> Cmd {
        match c {
            Cmd::Value(e) => Cmd::Value(self.expr(e)),
            // `T x; c` binds a read-write variable; read-write variables
            // are outside the substitution domain, so no binder handling
            // is needed beyond recursing.
            Cmd::Dcl(t, x, c) => Cmd::Dcl(
                self.type_expr(t),
                x.clone(),
                Box::new(self.cmd(c, supply)),
            ),
            Cmd::FinDcl(t, i, w, c) => {
                let t = self.type_expr(t);
                let w = self.expr(w);
                let (inner, renamed) = self.enter_binder(i, supply);
                match renamed {
                    None => Cmd::FinDcl(t, i.clone(), w, Box::new(inner.cmd(c, supply))),
                    Some(fresh) => Cmd::FinDcl(t, fresh, w, Box::new(inner.cmd(c, supply))),
                }
            }
            Cmd::Seq(hc, c) => Cmd::Seq(self.head_cmd(hc, supply), Box::new(self.cmd(c, supply))),
            Cmd::ReturnAnd(x, w, c) => {
                Cmd::ReturnAnd(x.clone(), self.expr(w), Box::new(self.cmd(c, supply)))
            }
        }
    }
}

/// Rename every occurrence (free and binding) of read-write variable
/// `old` in `c` to `new`. Used for capture avoidance in `bind`.
/// Map over every expression position of a formula. Read-write program
/// variables appear in formulas only as `Expr::Var` inside expression
/// positions, so this suffices to substitute them ([`Subst`] deliberately
/// leaves them alone).
pub fn map_formula_exprs(f: &Formula, e: &impl Fn(&Expr) -> Expr) -> Formula {
    use Formula::*;
    match f {
        Pure(x) => Pure(e(x)),
        PointsTo {
            target,
            field,
            perm,
            value,
        } => PointsTo {
            target: e(target),
            field: field.clone(),
            perm: perm.clone(),
            value: Box::new(e(value)),
        },
        PointsToTy {
            target,
            field,
            perm,
            ty,
        } => PointsToTy {
            target: e(target),
            field: field.clone(),
            perm: perm.clone(),
            ty: ty.clone(),
        },
        PermAtom {
            target,
            field,
            perm,
        } => PermAtom {
            target: e(target),
            field: field.clone(),
            perm: perm.clone(),
        },
        PredApp { .. } | Lockset(_) => f.clone(),
        Star(a, b) => Formula::star(map_formula_exprs(a, e), map_formula_exprs(b, e)),
        Wand(a, b) => Formula::wand(map_formula_exprs(a, e), map_formula_exprs(b, e)),
        Iff(a, b) => Iff(
            Box::new(map_formula_exprs(a, e)),
            Box::new(map_formula_exprs(b, e)),
        ),
        Assures(a, b) => Assures(
            Box::new(map_formula_exprs(a, e)),
            Box::new(map_formula_exprs(b, e)),
        ),
        IsPartOf(a, b) => IsPartOf(
            Box::new(map_formula_exprs(a, e)),
            Box::new(map_formula_exprs(b, e)),
        ),
        And(a, b) => Formula::and(map_formula_exprs(a, e), map_formula_exprs(b, e)),
        Or(a, b) => Formula::or(map_formula_exprs(a, e), map_formula_exprs(b, e)),
        Quant {
            kind,
            var,
            ty,
            body,
        } => Quant {
            kind: *kind,
            var: var.clone(),
            ty: ty.clone(),
            body: Box::new(map_formula_exprs(body, e)),
        },
        Join { thread, perm } => Join {
            thread: e(thread),
            perm: perm.clone(),
        },
        Contains { set, elem } => Contains {
            set: set.clone(),
            elem: e(elem),
        },
        Fresh(x) => Fresh(e(x)),
        Initialized(x) => Initialized(e(x)),
    }
}

/// Replace read-write variables by expressions throughout a formula.
pub fn subst_rw_formula(f: &Formula, map: &BTreeMap<Ident, Expr>) -> Formula {
    fn go(e: &Expr, map: &BTreeMap<Ident, Expr>) -> Expr {
        match e {
            Expr::Var(x) => map.get(x).cloned().unwrap_or_else(|| e.clone()),
            Expr::Op(op, args) => {
                Expr::Op(op.clone(), args.iter().map(|a| go(a, map)).collect())
            }
            _ => e.clone(),
        }
    }
    map_formula_exprs(f, &|x| go(x, map))
}

pub fn rename_rw(c: &Cmd, old: &str, new: &str) -> Cmd {
    fn rn_expr(e: &Expr, old: &str, new: &str) -> Expr {
        match e {
            Expr::Var(x) if x == old => Expr::Var(new.to_string()),
            Expr::Op(op, args) => Expr::Op(
                op.clone(),
                args.iter().map(|a| rn_expr(a, old, new)).collect(),
            ),
            _ => e.clone(),
        }
    }
    fn rn_formula(f: &Formula, old: &str, new: &str) -> Formula {
        map_formula_exprs(f, &|x| rn_expr(x, old, new))
    }
    fn rn_head(hc: &HeadCmd, old: &str, new: &str) -> HeadCmd {
        let rn = |x: &Ident| -> Ident {
            if x == old {
                new.to_string()
            } else {
                x.clone()
            }
        };
        match hc {
            HeadCmd::VarSet(x, e) => HeadCmd::VarSet(rn(x), rn_expr(e, old, new)),
            HeadCmd::FieldGet(x, e, f) => {
                HeadCmd::FieldGet(rn(x), rn_expr(e, old, new), f.clone())
            }
            HeadCmd::FieldSet(e, f, w) => {
                HeadCmd::FieldSet(rn_expr(e, old, new), f.clone(), rn_expr(w, old, new))
            }
            HeadCmd::New { lhs, class, args } => HeadCmd::New {
                lhs: rn(lhs),
                class: class.clone(),
                args: args.clone(),
            },
            HeadCmd::Call {
                lhs,
                recv,
                method,
                spec_args,
                args,
            } => HeadCmd::Call {
                lhs: rn(lhs),
                recv: rn_expr(recv, old, new),
                method: method.clone(),
                spec_args: spec_args.clone(),
                args: args.iter().map(|a| rn_expr(a, old, new)).collect(),
            },
            HeadCmd::If(e, c1, c2) => HeadCmd::If(
                rn_expr(e, old, new),
                Box::new(rename_rw(c1, old, new)),
                Box::new(rename_rw(c2, old, new)),
            ),
            HeadCmd::While {
                guard,
                invariant,
                body,
            } => HeadCmd::While {
                guard: rn_expr(guard, old, new),
                invariant: rn_formula(invariant, old, new),
                body: Box::new(rename_rw(body, old, new)),
            },
            HeadCmd::Lock(e) => HeadCmd::Lock(rn_expr(e, old, new)),
            HeadCmd::Unlock(e) => HeadCmd::Unlock(rn_expr(e, old, new)),
            HeadCmd::Assert(f) => HeadCmd::Assert(rn_formula(f, old, new)),
            HeadCmd::Commit(e) => HeadCmd::Commit(rn_expr(e, old, new)),
            HeadCmd::Hint(h) => HeadCmd::Hint(h.clone()),
            HeadCmd::Waiting { obj, level } => HeadCmd::Waiting {
                obj: rn_expr(obj, old, new),
                level: *level,
            },
            HeadCmd::Resume { obj, level } => HeadCmd::Resume {
                obj: rn_expr(obj, old, new),
                level: *level,
            },
        }
    }
    match c {
        Cmd::Value(e) => Cmd::Value(rn_expr(e, old, new)),
        Cmd::Dcl(t, x, body) => {
            let x2 = if x == old { new.to_string() } else { x.clone() };
            Cmd::Dcl(t.clone(), x2, Box::new(rename_rw(body, old, new)))
        }
        Cmd::FinDcl(t, i, w, body) => Cmd::FinDcl(
            t.clone(),
            i.clone(),
            rn_expr(w, old, new),
            Box::new(rename_rw(body, old, new)),
        ),
        Cmd::Seq(hc, body) => Cmd::Seq(rn_head(hc, old, new), Box::new(rename_rw(body, old, new))),
        Cmd::ReturnAnd(x, w, body) => {
            let x2 = if x == old { new.to_string() } else { x.clone() };
            Cmd::ReturnAnd(x2, rn_expr(w, old, new), Box::new(rename_rw(body, old, new)))
        }
    }
}
