//! Free-variable analysis: `fv` on values, expressions, formulas, and
//! commands; `writes` (assigned read-write variables of a head command);
//! and `cfv` (variables free in object-creation commands).

use std::collections::BTreeSet;

use super::ast::*;

pub fn fv_specval(v: &SpecVal, out: &mut Vec<Ident>) {
    match v {
        SpecVal::Var(x) => out.push(x.clone()),
        SpecVal::Split(inner) => fv_specval(inner, out),
        SpecVal::Union(a, b) => {
            fv_specval(a, out);
            fv_specval(b, out);
        }
        _ => {}
    }
}

pub fn fv_type(t: &TypeExpr, out: &mut Vec<Ident>) {
    if let TypeExpr::Ref(_, args) = t {
        for a in args {
            fv_specval(a, out);
        }
    }
}

pub fn fv_expr(e: &Expr, out: &mut Vec<Ident>) {
    match e {
        Expr::Spec(v) => fv_specval(v, out),
        Expr::Var(x) => out.push(x.clone()),
        Expr::Op(op, args) => {
            if let Op::InstanceOf(t) = op {
                fv_type(t, out);
            }
            for a in args {
                fv_expr(a, out);
            }
        }
    }
}

fn fv_formula_acc(f: &Formula, out: &mut Vec<Ident>) {
    match f {
        Formula::Pure(e) => fv_expr(e, out),
        Formula::PointsTo {
            target,
            perm,
            value,
            ..
        } => {
            fv_expr(target, out);
            fv_specval(perm, out);
            fv_expr(value, out);
        }
        Formula::PointsToTy {
            target, perm, ty, ..
        } => {
            fv_expr(target, out);
            fv_specval(perm, out);
            fv_type(ty, out);
        }
        Formula::PermAtom { target, perm, .. } => {
            fv_expr(target, out);
            fv_specval(perm, out);
        }
        Formula::PredApp { recv, args, .. } => {
            fv_specval(recv, out);
            for a in args {
                fv_specval(a, out);
            }
        }
        Formula::Star(a, b)
        | Formula::Wand(a, b)
        | Formula::Iff(a, b)
        | Formula::Assures(a, b)
        | Formula::IsPartOf(a, b)
        | Formula::And(a, b)
        | Formula::Or(a, b) => {
            fv_formula_acc(a, out);
            fv_formula_acc(b, out);
        }
        Formula::Quant { var, ty, body, .. } => {
            fv_type(ty, out);
            let mut inner = Vec::new();
            fv_formula_acc(body, &mut inner);
            out.extend(inner.into_iter().filter(|x| x != var));
        }
        Formula::Join { thread, perm } => {
            fv_expr(thread, out);
            fv_specval(perm, out);
        }
        Formula::Lockset(v) => fv_specval(v, out),
        Formula::Contains { set, elem } => {
            fv_specval(set, out);
            fv_expr(elem, out);
        }
        Formula::Fresh(e) | Formula::Initialized(e) => fv_expr(e, out),
    }
}

pub fn fv_formula(f: &Formula) -> BTreeSet<Ident> {
    let mut out = Vec::new();
    fv_formula_acc(f, &mut out);
    out.into_iter().collect()
}

fn fv_head_acc(hc: &HeadCmd, out: &mut Vec<Ident>) {
    match hc {
        HeadCmd::VarSet(x, e) => {
            out.push(x.clone());
            fv_expr(e, out);
        }
        HeadCmd::FieldGet(x, e, _) => {
            out.push(x.clone());
            fv_expr(e, out);
        }
        HeadCmd::FieldSet(e, _, w) => {
            fv_expr(e, out);
            fv_expr(w, out);
        }
        HeadCmd::New { lhs, args, .. } => {
            out.push(lhs.clone());
            for a in args {
                fv_specval(a, out);
            }
        }
        HeadCmd::Call {
            lhs,
            recv,
            spec_args,
            args,
            ..
        } => {
            out.push(lhs.clone());
            fv_expr(recv, out);
            for a in spec_args {
                fv_specval(a, out);
            }
            for a in args {
                fv_expr(a, out);
            }
        }
        HeadCmd::If(e, c1, c2) => {
            fv_expr(e, out);
            fv_cmd_acc(c1, out);
            fv_cmd_acc(c2, out);
        }
        HeadCmd::While {
            guard,
            invariant,
            body,
        } => {
            fv_expr(guard, out);
            fv_formula_acc(invariant, out);
            fv_cmd_acc(body, out);
        }
        HeadCmd::Lock(e) | HeadCmd::Unlock(e) | HeadCmd::Commit(e) => fv_expr(e, out),
        HeadCmd::Assert(f) => fv_formula_acc(f, out),
        HeadCmd::Hint(h) => match h {
            Hint::Unfold { recv, .. } => fv_expr(recv, out),
            Hint::Fold { recv, args, .. } => {
                fv_expr(recv, out);
                for a in args {
                    fv_specval(a, out);
                }
            }
            Hint::Axiom(_) => {}
            Hint::Witness { val, .. } => fv_specval(val, out),
        },
        HeadCmd::Waiting { obj, .. } | HeadCmd::Resume { obj, .. } => fv_expr(obj, out),
    }
}

fn fv_cmd_acc(c: &Cmd, out: &mut Vec<Ident>) {
    match c {
        Cmd::Value(e) => fv_expr(e, out),
        Cmd::Dcl(t, x, body) => {
            fv_type(t, out);
            let mut inner = Vec::new();
            fv_cmd_acc(body, &mut inner);
            out.extend(inner.into_iter().filter(|v| v != x));
        }
        Cmd::FinDcl(t, i, w, body) => {
            fv_type(t, out);
            fv_expr(w, out);
            let mut inner = Vec::new();
            fv_cmd_acc(body, &mut inner);
            out.extend(inner.into_iter().filter(|v| v != i));
        }
        Cmd::Seq(hc, body) => {
            fv_head_acc(hc, out);
            fv_cmd_acc(body, out);
        }
        Cmd::ReturnAnd(x, w, body) => {
            out.push(x.clone());
            fv_expr(w, out);
            fv_cmd_acc(body, out);
        }
    }
}

pub fn fv_cmd(c: &Cmd) -> BTreeSet<Ident> {
    let mut out = Vec::new();
    fv_cmd_acc(c, &mut out);
    out.into_iter().collect()
}

/// The read-write variables a head command may assign.
pub fn writes(hc: &HeadCmd) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    fn cmd_writes(c: &Cmd, out: &mut BTreeSet<Ident>) {
        match c {
            Cmd::Value(_) => {}
            Cmd::Dcl(_, x, body) => {
                let mut inner = BTreeSet::new();
                cmd_writes(body, &mut inner);
                inner.remove(x);
                out.extend(inner);
            }
            Cmd::FinDcl(_, _, _, body) => cmd_writes(body, out),
            Cmd::Seq(hc, body) => {
                out.extend(writes(hc));
                cmd_writes(body, out);
            }
            Cmd::ReturnAnd(x, _, body) => {
                out.insert(x.clone());
                cmd_writes(body, out);
            }
        }
    }
    match hc {
        HeadCmd::VarSet(x, _)
        | HeadCmd::FieldGet(x, _, _)
        | HeadCmd::New { lhs: x, .. }
        | HeadCmd::Call { lhs: x, .. } => {
            out.insert(x.clone());
        }
        HeadCmd::If(_, c1, c2) => {
            cmd_writes(c1, &mut out);
            cmd_writes(c2, &mut out);
        }
        HeadCmd::While { body, .. } => cmd_writes(body, &mut out),
        _ => {}
    }
    out
}

/// Variables occurring freely in object-creation commands of `c`.
pub fn cfv(c: &Cmd) -> BTreeSet<Ident> {
    fn head(hc: &HeadCmd, out: &mut Vec<Ident>) {
        match hc {
            HeadCmd::New { args, .. } => {
                for a in args {
                    fv_specval(a, out);
                }
            }
            HeadCmd::If(_, c1, c2) => {
                go(c1, out);
                go(c2, out);
            }
            HeadCmd::While { body, .. } => go(body, out),
            _ => {}
        }
    }
    fn go(c: &Cmd, out: &mut Vec<Ident>) {
        match c {
            Cmd::Value(_) => {}
            Cmd::Dcl(_, x, body) => {
                let mut inner = Vec::new();
                go(body, &mut inner);
                out.extend(inner.into_iter().filter(|v| v != x));
            }
            Cmd::FinDcl(_, i, _, body) => {
                let mut inner = Vec::new();
                go(body, &mut inner);
                out.extend(inner.into_iter().filter(|v| v != i));
            }
            Cmd::Seq(hc, body) => {
                head(hc, out);
                go(body, out);
            }
            Cmd::ReturnAnd(_, _, body) => go(body, out),
        }
    }
    let mut out = Vec::new();
    go(c, &mut out);
    out.into_iter().collect()
}
