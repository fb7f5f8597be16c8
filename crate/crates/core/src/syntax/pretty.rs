//! Pretty-printing back to concrete syntax. `parse . pretty . parse` is a
//! fixpoint on well-formed input (checked by round-trip tests).

use std::fmt::{self, Display, Formatter, Write as _};

use super::ast::*;

impl Display for TypeExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Void => write!(f, "void"),
            TypeExpr::Int => write!(f, "int"),
            TypeExpr::Bool => write!(f, "bool"),
            TypeExpr::Perm => write!(f, "perm"),
            TypeExpr::Lockset => write!(f, "lockset"),
            TypeExpr::Ref(name, args) => {
                write!(f, "{name}")?;
                if !args.is_empty() {
                    write!(f, "<{}>", comma(args))?;
                }
                Ok(())
            }
        }
    }
}

fn comma<T: Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Decompose a split chain into (base, halvings).
pub fn split_chain(v: &SpecVal) -> (&SpecVal, u32) {
    match v {
        SpecVal::Split(inner) => {
            let (b, k) = split_chain(inner);
            (b, k + 1)
        }
        _ => (v, 0),
    }
}

impl Display for SpecVal {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            SpecVal::Null => write!(f, "null"),
            SpecVal::Int(n) => write!(f, "{n}"),
            SpecVal::Bool(b) => write!(f, "{b}"),
            SpecVal::Obj(o) => write!(f, "#{o}"),
            SpecVal::Var(x) => write!(f, "{x}"),
            SpecVal::Split(_) => {
                let (base, k) = split_chain(self);
                if k <= 63 {
                    write!(f, "{base}/{}", 1u64 << k)
                } else {
                    // Unprintable as a fraction; fall back to nesting.
                    let (base, k) = split_chain(self);
                    let mut s = base.to_string();
                    for _ in 0..k {
                        s = format!("split({s})");
                    }
                    write!(f, "{s}")
                }
            }
            SpecVal::Nil => write!(f, "nil"),
            SpecVal::Union(a, b) => {
                let pa = matches!(**a, SpecVal::Split(_));
                let pb = matches!(**b, SpecVal::Split(_) | SpecVal::Union(..));
                let sa = if pa { format!("({a})") } else { a.to_string() };
                let sb = if pb { format!("({b})") } else { b.to_string() };
                write!(f, "{sa} + {sb}")
            }
        }
    }
}

// Expression precedence levels, loosest to tightest.
const P_OR: u8 = 0;
const P_AND: u8 = 1;
const P_CMP: u8 = 2;
const P_ADD: u8 = 3;
const P_MUL: u8 = 4;
const P_UNARY: u8 = 5;
const P_ATOM: u8 = 6;

fn op_prec(op: &Op) -> u8 {
    match op {
        Op::Or => P_OR,
        Op::And => P_AND,
        Op::Eq | Op::Lt | Op::Le | Op::Gt | Op::Ge => P_CMP,
        Op::IsClassOf(_) | Op::InstanceOf(_) => P_CMP,
        Op::Add | Op::Sub => P_ADD,
        Op::Mul => P_MUL,
        Op::Not => P_UNARY,
    }
}

fn fmt_expr(e: &Expr, min: u8, out: &mut String) {
    match e {
        Expr::Spec(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Var(x) => {
            let _ = write!(out, "{x}");
        }
        Expr::Op(op, args) => {
            // `!(a == b)` prints as `a != b`.
            if let (Op::Not, [Expr::Op(Op::Eq, inner)]) = (op, args.as_slice()) {
                let prec = P_CMP;
                let parens = prec < min;
                if parens {
                    out.push('(');
                }
                fmt_expr(&inner[0], prec + 1, out);
                out.push_str(" != ");
                fmt_expr(&inner[1], prec + 1, out);
                if parens {
                    out.push(')');
                }
                return;
            }
            let prec = op_prec(op);
            // `*` is star-conjunction at the formula level, so nested
            // multiplications always print parenthesized.
            let parens = prec < min || (matches!(op, Op::Mul) && min > 0);
            if parens {
                out.push('(');
            }
            match op {
                Op::Not => {
                    out.push('!');
                    fmt_expr(&args[0], P_ATOM, out);
                }
                Op::IsClassOf(c) => {
                    fmt_expr(&args[0], prec + 1, out);
                    let _ = write!(out, " isclassof {c}");
                }
                Op::InstanceOf(t) => {
                    fmt_expr(&args[0], prec + 1, out);
                    let _ = write!(out, " instanceof {t}");
                }
                binop => {
                    let tok = match binop {
                        Op::Eq => "==",
                        Op::And => "&",
                        Op::Or => "|",
                        Op::Add => "+",
                        Op::Sub => "-",
                        Op::Mul => "*",
                        Op::Lt => "<",
                        Op::Le => "<=",
                        Op::Gt => ">",
                        Op::Ge => ">=",
                        _ => unreachable!(),
                    };
                    fmt_expr(&args[0], prec, out);
                    let _ = write!(out, " {tok} ");
                    fmt_expr(&args[1], prec + 1, out);
                }
            }
            if parens {
                out.push(')');
            }
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_expr(self, 0, &mut s);
        write!(f, "{s}")
    }
}

// Formula precedence levels, loosest to tightest.
const F_QUANT: u8 = 0;
const F_IFF: u8 = 1;
const F_WAND: u8 = 2;
const F_OR: u8 = 3;
const F_AND: u8 = 4;
const F_STAR: u8 = 5;
const F_ATOM: u8 = 6;

fn fmt_formula(fla: &Formula, min: u8, out: &mut String) {
    let emit = |prec: u8, out: &mut String, body: &dyn Fn(&mut String)| {
        if prec < min {
            out.push('(');
            body(out);
            out.push(')');
        } else {
            body(out);
        }
    };
    match fla {
        Formula::Pure(e) => {
            // Comparisons print bare; `|`/`&` expressions need parens to
            // avoid colliding with the formula connectives.
            let needs_parens = matches!(e, Expr::Op(Op::Or | Op::And | Op::Mul, _));
            if needs_parens {
                let _ = write!(out, "({e})");
            } else {
                let _ = write!(out, "{e}");
            }
        }
        Formula::PointsTo {
            target,
            field,
            perm,
            value,
        } => {
            let _ = write!(out, "PointsTo({target}.{field}, {perm}, {value})");
        }
        Formula::PointsToTy {
            target,
            field,
            perm,
            ty,
        } => {
            let _ = write!(out, "PointsTo({target}.{field}, {perm}, type {ty})");
        }
        Formula::PermAtom {
            target,
            field,
            perm,
        } => {
            let _ = write!(out, "Perm({target}.{field}, {perm})");
        }
        Formula::PredApp {
            recv,
            name,
            at,
            args,
        } => {
            let _ = write!(out, "{recv}.{name}");
            if let Some(c) = at {
                let _ = write!(out, "@{c}");
            }
            if !args.is_empty() {
                let _ = write!(out, "<{}>", comma(args));
            }
        }
        Formula::Star(a, b) => emit(F_STAR, out, &|out| {
            fmt_formula(a, F_STAR, out);
            out.push_str(" * ");
            fmt_formula(b, F_STAR + 1, out);
        }),
        Formula::And(a, b) => emit(F_AND, out, &|out| {
            fmt_formula(a, F_AND, out);
            out.push_str(" & ");
            fmt_formula(b, F_AND + 1, out);
        }),
        Formula::Or(a, b) => emit(F_OR, out, &|out| {
            fmt_formula(a, F_OR, out);
            out.push_str(" | ");
            fmt_formula(b, F_OR + 1, out);
        }),
        Formula::Wand(a, b) => emit(F_WAND, out, &|out| {
            // Right-associative.
            fmt_formula(a, F_WAND + 1, out);
            out.push_str(" -* ");
            fmt_formula(b, F_WAND, out);
        }),
        Formula::Iff(a, b) => emit(F_IFF, out, &|out| {
            fmt_formula(a, F_IFF + 1, out);
            out.push_str(" *-* ");
            fmt_formula(b, F_IFF + 1, out);
        }),
        Formula::Assures(a, b) => emit(F_IFF, out, &|out| {
            out.push_str("assures ");
            fmt_formula(a, F_ATOM, out);
            out.push(' ');
            fmt_formula(b, F_ATOM, out);
        }),
        Formula::IsPartOf(a, b) => emit(F_IFF, out, &|out| {
            fmt_formula(a, F_IFF + 1, out);
            out.push_str(" ispartof ");
            fmt_formula(b, F_IFF + 1, out);
        }),
        Formula::Quant {
            kind,
            var,
            ty,
            body,
        } => emit(F_QUANT, out, &|out| {
            let kw = match kind {
                QuantKind::Ex => "ex",
                QuantKind::Fa => "fa",
            };
            let _ = write!(out, "{kw} {ty} {var}. ");
            fmt_formula(body, F_QUANT, out);
        }),
        Formula::Join { thread, perm } => {
            let _ = write!(out, "Join({thread}, {perm})");
        }
        Formula::Lockset(v) => {
            let _ = write!(out, "Lockset({v})");
        }
        Formula::Contains { set, elem } => emit(F_ATOM, out, &|out| {
            let _ = write!(out, "{set} contains {elem}");
        }),
        Formula::Fresh(e) => {
            let _ = write!(out, "fresh({e})");
        }
        Formula::Initialized(e) => {
            let _ = write!(out, "initialized({e})");
        }
    }
}

impl Display for Formula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_formula(self, 0, &mut s);
        write!(f, "{s}")
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn fmt_head(hc: &HeadCmd, depth: usize, out: &mut String) {
    indent(out, depth);
    match hc {
        HeadCmd::VarSet(x, e) => {
            let _ = writeln!(out, "{x} = {e};");
        }
        HeadCmd::FieldGet(x, e, f) => {
            let _ = writeln!(out, "{x} = {e}.{f};");
        }
        HeadCmd::FieldSet(e, f, w) => {
            let _ = writeln!(out, "{e}.{f} = {w};");
        }
        HeadCmd::New { lhs, class, args } => {
            if args.is_empty() {
                let _ = writeln!(out, "{lhs} = new {class};");
            } else {
                let _ = writeln!(out, "{lhs} = new {class}<{}>;", comma(args));
            }
        }
        HeadCmd::Call {
            lhs,
            recv,
            method,
            spec_args,
            args,
        } => {
            let sa = if spec_args.is_empty() {
                String::new()
            } else {
                format!("<{}>", comma(spec_args))
            };
            let _ = writeln!(out, "{lhs} = {recv}.{method}{sa}({});", comma(args));
        }
        HeadCmd::If(e, c1, c2) => {
            let _ = writeln!(out, "if ({e}) {{");
            fmt_cmd(c1, depth + 1, out);
            indent(out, depth);
            if matches!(**c2, Cmd::Value(ref v) if *v == Expr::null()) {
                let _ = writeln!(out, "}}");
            } else {
                let _ = writeln!(out, "}} else {{");
                fmt_cmd(c2, depth + 1, out);
                indent(out, depth);
                let _ = writeln!(out, "}}");
            }
        }
        HeadCmd::While {
            guard,
            invariant,
            body,
        } => {
            let _ = writeln!(out, "while ({guard}) invariant {invariant} {{");
            fmt_cmd(body, depth + 1, out);
            indent(out, depth);
            let _ = writeln!(out, "}}");
        }
        HeadCmd::Lock(e) => {
            let _ = writeln!(out, "lock({e});");
        }
        HeadCmd::Unlock(e) => {
            let _ = writeln!(out, "unlock({e});");
        }
        HeadCmd::Assert(f) => {
            let _ = writeln!(out, "assert {f};");
        }
        HeadCmd::Commit(e) => {
            let _ = writeln!(out, "commit({e});");
        }
        HeadCmd::Hint(h) => match h {
            Hint::Unfold { recv, pred, at } => {
                let at = at
                    .as_ref()
                    .map(|c| format!("@{c}"))
                    .unwrap_or_default();
                let _ = writeln!(out, "//@ unfold {recv}.{pred}{at};");
            }
            Hint::Fold {
                recv,
                pred,
                at,
                args,
            } => {
                let at = at
                    .as_ref()
                    .map(|c| format!("@{c}"))
                    .unwrap_or_default();
                if args.is_empty() {
                    let _ = writeln!(out, "//@ fold {recv}.{pred}{at};");
                } else {
                    let _ = writeln!(out, "//@ fold {recv}.{pred}{at}<{}>;", comma(args));
                }
            }
            Hint::Axiom(n) => {
                let _ = writeln!(out, "//@ axiom {n};");
            }
            Hint::Witness { var, val } => {
                let _ = writeln!(out, "//@ witness {var} := {val};");
            }
        },
        HeadCmd::Waiting { obj, level } => {
            let _ = writeln!(out, "waiting({obj}, {level});");
        }
        HeadCmd::Resume { obj, level } => {
            let _ = writeln!(out, "resume({obj}, {level});");
        }
    }
}

fn fmt_cmd(c: &Cmd, depth: usize, out: &mut String) {
    match c {
        Cmd::Value(e) => {
            // A trailing `null` is the implicit end of a void block.
            if *e != Expr::null() {
                indent(out, depth);
                let _ = writeln!(out, "return {e};");
            }
        }
        Cmd::Dcl(t, x, body) => {
            indent(out, depth);
            let _ = writeln!(out, "{t} {x};");
            fmt_cmd(body, depth, out);
        }
        Cmd::FinDcl(t, i, w, body) => {
            indent(out, depth);
            let _ = writeln!(out, "fin {t} {i} = {w};");
            fmt_cmd(body, depth, out);
        }
        Cmd::Seq(hc, body) => {
            fmt_head(hc, depth, out);
            fmt_cmd(body, depth, out);
        }
        Cmd::ReturnAnd(x, w, body) => {
            indent(out, depth);
            let _ = writeln!(out, "return-and {x} = {w};");
            fmt_cmd(body, depth, out);
        }
    }
}

impl Display for Cmd {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_cmd(self, 0, &mut s);
        write!(f, "{s}")
    }
}

fn fmt_params(params: &[(TypeExpr, Ident)]) -> String {
    params
        .iter()
        .map(|(t, x)| format!("{t} {x}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn fmt_method_sig(sig: &MethodSig, out: &mut String, depth: usize) {
    indent(out, depth);
    let fin = if sig.is_final { "final " } else { "" };
    let lps = if sig.logic_params.is_empty() {
        String::new()
    } else {
        format!("<{}>", fmt_params(&sig.logic_params))
    };
    let _ = writeln!(
        out,
        "{fin}{} {}{lps}({})",
        sig.ret,
        sig.name,
        fmt_params(&sig.formals)
    );
    indent(out, depth + 1);
    let _ = writeln!(out, "requires {};", sig.requires);
    indent(out, depth + 1);
    let _ = writeln!(out, "ensures {};", sig.ensures);
}

impl Display for ClassDecl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let params = if self.params.is_empty() {
            String::new()
        } else {
            format!("<{}>", fmt_params(&self.params))
        };
        let ext = match &self.ext {
            Some(t) => format!(" ext {t}"),
            None => String::new(),
        };
        let impls = if self.impls.is_empty() {
            String::new()
        } else {
            format!(" impl {}", comma(&self.impls))
        };
        let _ = writeln!(out, "class {}{params}{ext}{impls} {{", self.name);
        for (t, name) in &self.fields {
            let _ = writeln!(out, "  {t} {name};");
        }
        for p in &self.preds {
            let vis = if p.public { "public " } else { "" };
            let kw = if p.group { "group" } else { "pred" };
            let ps = if p.params.is_empty() {
                String::new()
            } else {
                format!("<{}>", fmt_params(&p.params))
            };
            let _ = writeln!(out, "  {vis}{kw} {}{ps} = {};", p.name, p.body);
        }
        for ax in &self.axioms {
            match &ax.name {
                Some(n) => {
                    let _ = writeln!(out, "  axiom {n}: {};", ax.formula);
                }
                None => {
                    let _ = writeln!(out, "  axiom {};", ax.formula);
                }
            }
        }
        for m in &self.methods {
            fmt_method_sig(&m.sig, &mut out, 1);
            match &m.body {
                Some(body) => {
                    let _ = writeln!(out, "  {{");
                    fmt_cmd(body, 2, &mut out);
                    let _ = writeln!(out, "  }}");
                }
                None => {
                    let _ = writeln!(out, "  primitive;");
                }
            }
        }
        let _ = write!(out, "}}");
        write!(f, "{out}")
    }
}

impl Display for InterfaceDecl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let params = if self.params.is_empty() {
            String::new()
        } else {
            format!("<{}>", fmt_params(&self.params))
        };
        let exts = if self.exts.is_empty() {
            String::new()
        } else {
            format!(" ext {}", comma(&self.exts))
        };
        let _ = writeln!(out, "interface {}{params}{exts} {{", self.name);
        for p in &self.pred_types {
            let ps = if p.params.is_empty() {
                String::new()
            } else {
                format!("<{}>", fmt_params(&p.params))
            };
            let _ = writeln!(out, "  pred {}{ps};", p.name);
        }
        for ax in &self.axioms {
            match &ax.name {
                Some(n) => {
                    let _ = writeln!(out, "  axiom {n}: {};", ax.formula);
                }
                None => {
                    let _ = writeln!(out, "  axiom {};", ax.formula);
                }
            }
        }
        for sig in &self.mtypes {
            fmt_method_sig(sig, &mut out, 1);
            let _ = writeln!(out, "  ;");
        }
        let _ = write!(out, "}}");
        write!(f, "{out}")
    }
}

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for i in &self.table.interfaces {
            writeln!(f, "{i}")?;
            writeln!(f)?;
        }
        for c in &self.table.classes {
            if c.builtin {
                continue;
            }
            writeln!(f, "{c}")?;
            writeln!(f)?;
        }
        if let Some(main) = &self.main {
            writeln!(f, "main {{")?;
            let mut s = String::new();
            fmt_cmd(main, 1, &mut s);
            write!(f, "{s}")?;
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}
