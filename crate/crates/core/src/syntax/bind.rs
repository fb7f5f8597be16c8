//! The `bind` auxiliary sequencing operator and sequential composition.
//!
//! `bind(x, c, k)` runs `c`, assigns its result to `x`, and continues with
//! `k`. It satisfies the equations:
//!
//! * `bind(x, v, k)            = return-and(x, v, k)`
//! * `bind(x, (T y; c), k)     = T y; bind(x, c, k)`        (y not free in k)
//! * `bind(x, (fin T i=w; c), k) = fin T i=w; bind(x, c, k)` (i not free in k)
//! * `bind(x, (hc; c), k)      = hc; bind(x, c, k)`
//!
//! The side conditions are met by alpha-renaming the binder when needed.

use super::ast::*;
use super::fv;
use super::subst::{rename_rw, FreshSupply, Subst};

/// `bind(x, c, k)`.
pub fn bind(x: &str, c: Cmd, k: Cmd, supply: &mut FreshSupply) -> Cmd {
    match c {
        Cmd::Value(v) => Cmd::ReturnAnd(x.to_string(), v, Box::new(k)),
        Cmd::Dcl(t, y, body) => {
            let (y, body) = if fv::fv_cmd(&k).contains(&y) || y == x {
                let fresh = supply.fresh();
                let renamed = rename_rw(&body, &y, &fresh);
                (fresh, renamed)
            } else {
                (y, *body)
            };
            Cmd::Dcl(t, y, Box::new(bind(x, body, k, supply)))
        }
        Cmd::FinDcl(t, i, w, body) => {
            let (i, body) = if fv::fv_cmd(&k).contains(&i) {
                let fresh = supply.fresh();
                let sub = Subst::one(&i, SpecVal::Var(fresh.clone()));
                (fresh, sub.cmd(&body, supply))
            } else {
                (i, *body)
            };
            Cmd::FinDcl(t, i, w, Box::new(bind(x, body, k, supply)))
        }
        Cmd::Seq(hc, body) => Cmd::Seq(hc, Box::new(bind(x, *body, k, supply))),
        Cmd::ReturnAnd(y, w, body) => {
            Cmd::ReturnAnd(y, w, Box::new(bind(x, *body, k, supply)))
        }
    }
}

/// `c ; c'` is `void x; bind(x, c, c')` for a fresh `x`.
pub fn seq_compose(c1: Cmd, c2: Cmd, supply: &mut FreshSupply) -> Cmd {
    let x = supply.fresh();
    let bound = bind(&x, c1, c2, supply);
    Cmd::Dcl(TypeExpr::Void, x, Box::new(bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bind_value_is_return_and() {
        let mut supply = FreshSupply::new();
        let c = bind(
            "x",
            Cmd::Value(Expr::int(3)),
            Cmd::Value(Expr::var("x")),
            &mut supply,
        );
        assert_eq!(
            c,
            Cmd::ReturnAnd(
                "x".into(),
                Expr::int(3),
                Box::new(Cmd::Value(Expr::var("x")))
            )
        );
    }

    #[test]
    fn bind_distributes_over_dcl() {
        let mut supply = FreshSupply::new();
        let inner = Cmd::Dcl(TypeExpr::Int, "y".into(), Box::new(Cmd::Value(Expr::var("y"))));
        let c = bind("x", inner, Cmd::Value(Expr::var("x")), &mut supply);
        match c {
            Cmd::Dcl(TypeExpr::Int, y, body) => {
                assert_eq!(y, "y");
                assert!(matches!(*body, Cmd::ReturnAnd(..)));
            }
            other => panic!("unexpected shape: {other:?}"),
        }
    }

    #[test]
    fn bind_renames_captured_dcl_binder() {
        let mut supply = FreshSupply::new();
        // bind(x, (int y; y), (z = y; null)) must rename the inner y, since
        // y occurs free in the continuation.
        let inner = Cmd::Dcl(TypeExpr::Int, "y".into(), Box::new(Cmd::Value(Expr::var("y"))));
        let k = Cmd::seq(
            HeadCmd::VarSet("z".into(), Expr::var("y")),
            Cmd::Value(Expr::null()),
        );
        let c = bind("x", inner, k, &mut supply);
        match c {
            Cmd::Dcl(_, y, body) => {
                assert_eq!(y, "_v0");
                match *body {
                    Cmd::ReturnAnd(x, v, _) => {
                        assert_eq!(x, "x");
                        assert_eq!(v, Expr::var("_v0"));
                    }
                    other => panic!("unexpected: {other:?}"),
                }
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn seq_compose_wraps_in_void_dcl() {
        let mut supply = FreshSupply::new();
        let c = seq_compose(
            Cmd::Value(Expr::null()),
            Cmd::Value(Expr::int(1)),
            &mut supply,
        );
        match c {
            Cmd::Dcl(TypeExpr::Void, x, body) => {
                assert_eq!(x, "_v0");
                assert!(matches!(*body, Cmd::ReturnAnd(..)));
            }
            other => panic!("unexpected: {other:?}"),
        }
    }
}
