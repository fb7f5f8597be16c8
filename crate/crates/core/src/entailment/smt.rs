//! Export of pure proof obligations as SMT-LIB2 text (logic QF_UFLIA)
//! for cross-checking with an external solver.
//!
//! Everything is encoded over `Int`: object references are opaque
//! integers (`null` is the constant `jll.null`), booleans are SMT
//! booleans, and theory-specific atoms (`contains`, `initialized`,
//! `isclassof`, `instanceof`) become uninterpreted functions. The
//! encoding is faithful for the linear-arithmetic and congruence
//! fragment; multiset structure is abstracted by the uninterpreted
//! `jll.union` symbol, so `unsat` answers from a solver confirm the
//! obligation while `sat` answers are inconclusive.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::entailment::sym::PureAtom;
use crate::syntax::ast::*;
use crate::typecheck::TypeEnv;

/// Render `hypotheses && !goal` as an SMT-LIB2 script; `unsat` from a
/// solver means the hypotheses entail the goal.
pub fn smtlib_query(env: &TypeEnv, hyps: &[PureAtom], goal: Option<&Formula>) -> String {
    let mut enc = Encoder::default();
    let hyp_terms: Vec<String> = hyps.iter().map(|a| enc.atom(a)).collect();
    let goal_term = goal.map(|g| enc.formula(g));

    let mut out = String::new();
    out.push_str("(set-logic QF_UFLIA)\n");
    out.push_str("(declare-const jll.null Int)\n");
    for v in &enc.vars {
        let sort = match env.vars.get(v) {
            Some(TypeExpr::Bool) => "Bool",
            _ => "Int",
        };
        let _ = writeln!(out, "(declare-const {} {sort})", sym(v));
    }
    for f in &enc.funs {
        out.push_str(f);
        out.push('\n');
    }
    for h in &hyp_terms {
        let _ = writeln!(out, "(assert {h})");
    }
    if let Some(g) = goal_term {
        let _ = writeln!(out, "(assert (not {g}))");
    }
    out.push_str("(check-sat)\n");
    out
}

#[derive(Default)]
struct Encoder {
    vars: BTreeSet<String>,
    funs: BTreeSet<String>,
}

fn sym(name: &str) -> String {
    format!("|{name}|")
}

impl Encoder {
    fn fun(&mut self, decl: &str) {
        self.funs.insert(decl.to_string());
    }

    fn atom(&mut self, a: &PureAtom) -> String {
        match a {
            PureAtom::Bool(e) => self.bool_expr(e),
            PureAtom::Contains { set, elem } => {
                let s = self.specval(set);
                let e = self.expr(elem);
                self.fun("(declare-fun jll.contains (Int Int) Bool)");
                format!("(jll.contains {s} {e})")
            }
            PureAtom::NotContains { set, elem } => {
                let inner = self.atom(&PureAtom::Contains {
                    set: set.clone(),
                    elem: elem.clone(),
                });
                format!("(not {inner})")
            }
            PureAtom::Initialized(e) => {
                let t = self.expr(e);
                self.fun("(declare-fun jll.initialized (Int) Bool)");
                format!("(jll.initialized {t})")
            }
        }
    }

    fn formula(&mut self, f: &Formula) -> String {
        match f {
            Formula::Pure(e) => self.bool_expr(e),
            Formula::Contains { set, elem } => self.atom(&PureAtom::Contains {
                set: set.clone(),
                elem: elem.clone(),
            }),
            Formula::Initialized(e) => self.atom(&PureAtom::Initialized(e.clone())),
            Formula::Star(a, b) | Formula::And(a, b) => {
                format!("(and {} {})", self.formula(a), self.formula(b))
            }
            Formula::Or(a, b) => format!("(or {} {})", self.formula(a), self.formula(b)),
            Formula::Wand(a, b) => format!("(=> {} {})", self.formula(a), self.formula(b)),
            Formula::Iff(a, b) => format!("(= {} {})", self.formula(a), self.formula(b)),
            // Spatial structure has no pure content; it is abstracted
            // to `true` (the export covers pure obligations only).
            _ => "true".into(),
        }
    }

    fn bool_expr(&mut self, e: &Expr) -> String {
        match e {
            Expr::Spec(SpecVal::Bool(b)) => b.to_string(),
            Expr::Op(Op::Not, args) => format!("(not {})", self.bool_expr(&args[0])),
            Expr::Op(Op::And, args) => format!(
                "(and {} {})",
                self.bool_expr(&args[0]),
                self.bool_expr(&args[1])
            ),
            Expr::Op(Op::Or, args) => format!(
                "(or {} {})",
                self.bool_expr(&args[0]),
                self.bool_expr(&args[1])
            ),
            Expr::Op(Op::Eq, args) => {
                format!("(= {} {})", self.expr(&args[0]), self.expr(&args[1]))
            }
            Expr::Op(op @ (Op::Lt | Op::Le | Op::Gt | Op::Ge), args) => {
                let s = match op {
                    Op::Lt => "<",
                    Op::Le => "<=",
                    Op::Gt => ">",
                    _ => ">=",
                };
                format!("({s} {} {})", self.expr(&args[0]), self.expr(&args[1]))
            }
            Expr::Op(Op::IsClassOf(c), args) => {
                self.fun(&format!("(declare-fun jll.isclassof.{c} (Int) Bool)"));
                format!("(jll.isclassof.{c} {})", self.expr(&args[0]))
            }
            Expr::Op(Op::InstanceOf(t), args) => {
                let name = t.ref_name().unwrap_or("Object");
                self.fun(&format!("(declare-fun jll.instanceof.{name} (Int) Bool)"));
                format!("(jll.instanceof.{name} {})", self.expr(&args[0]))
            }
            other => {
                // An opaque boolean term: wrap as an integer equation.
                let t = self.expr(other);
                self.fun("(declare-fun jll.truthy (Int) Bool)");
                format!("(jll.truthy {t})")
            }
        }
    }

    fn expr(&mut self, e: &Expr) -> String {
        match e {
            Expr::Spec(v) => self.specval(v),
            Expr::Var(x) => {
                self.vars.insert(x.clone());
                sym(x)
            }
            Expr::Op(Op::Add, args) => {
                format!("(+ {} {})", self.expr(&args[0]), self.expr(&args[1]))
            }
            Expr::Op(Op::Sub, args) => {
                format!("(- {} {})", self.expr(&args[0]), self.expr(&args[1]))
            }
            Expr::Op(Op::Mul, args) => {
                format!("(* {} {})", self.expr(&args[0]), self.expr(&args[1]))
            }
            Expr::Op(op, args) => {
                // Boolean operators in term position become an
                // if-then-else over 0/1.
                let _ = (op, args);
                let b = self.bool_expr(e);
                format!("(ite {b} 1 0)")
            }
        }
    }

    fn specval(&mut self, v: &SpecVal) -> String {
        match v {
            SpecVal::Null => "jll.null".into(),
            SpecVal::Int(n) if *n >= 0 => n.to_string(),
            SpecVal::Int(n) => format!("(- {})", -n),
            SpecVal::Bool(b) => format!("(ite {b} 1 0)"),
            SpecVal::Obj(o) => {
                self.fun(&format!("(declare-const jll.obj.{o} Int)"));
                format!("jll.obj.{o}")
            }
            SpecVal::Var(x) => {
                self.vars.insert(x.clone());
                sym(x)
            }
            SpecVal::Split(inner) => {
                self.fun("(declare-fun jll.split (Int) Int)");
                format!("(jll.split {})", self.specval(inner))
            }
            SpecVal::Nil => {
                self.fun("(declare-const jll.nil Int)");
                "jll.nil".into()
            }
            SpecVal::Union(a, b) => {
                self.fun("(declare-fun jll.union (Int Int) Int)");
                format!("(jll.union {} {})", self.specval(a), self.specval(b))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    #[test]
    fn query_shape_is_well_formed() {
        let mut env = TypeEnv::new();
        env.bind("n", TypeExpr::Int);
        env.bind("S", TypeExpr::Lockset);
        let hyps = vec![
            PureAtom::Bool(Expr::Op(
                Op::Gt,
                vec![Expr::spec_var("n"), Expr::Spec(SpecVal::Int(2))],
            )),
            PureAtom::Contains {
                set: SpecVal::var("S"),
                elem: Expr::spec_var("o"),
            },
        ];
        let goal = parse_formula("n >= 3").unwrap();
        let text = smtlib_query(&env, &hyps, Some(&goal));
        assert!(text.starts_with("(set-logic QF_UFLIA)\n"));
        assert!(text.contains("(assert (> |n| 2))"));
        assert!(text.contains("(assert (jll.contains |S| |o|))"));
        assert!(text.contains("(assert (not (>= |n| 3)))"));
        assert!(text.trim_end().ends_with("(check-sat)"));
        // Balanced parentheses.
        let bal: i64 = text
            .chars()
            .map(|c| match c {
                '(' => 1,
                ')' => -1,
                _ => 0,
            })
            .sum();
        assert_eq!(bal, 0);
    }
}
