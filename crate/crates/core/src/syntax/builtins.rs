//! The built-in `Object` and `Thread` class declarations, always present
//! in every class table.
//!
//! `Object` carries the lock-synchronization surface: the resource
//! invariant predicate `inv` and the primitive `wait`/`notify`/`notifyAll`
//! methods. `Thread` carries `preFork`, the splittable `postJoin` group,
//! and the primitive `fork`/`join` methods plus the overridable `run`.

use super::ast::*;

fn lockset_param(name: &str) -> (TypeExpr, Ident) {
    (TypeExpr::Lockset, name.into())
}

fn lockset_atom(v: &str) -> Formula {
    Formula::Lockset(SpecVal::var(v))
}

fn this_pred(name: &str, args: Vec<SpecVal>) -> Formula {
    Formula::pred(SpecVal::var("this"), name, args)
}

pub fn object_decl() -> ClassDecl {
    let contains_this = Formula::Contains {
        set: SpecVal::var("S"),
        elem: Expr::spec_var("this"),
    };
    let wait = MethodDecl {
        sig: MethodSig {
            name: "wait".into(),
            logic_params: vec![lockset_param("S")],
            ret: TypeExpr::Void,
            formals: vec![],
            requires: Formula::star_all([
                lockset_atom("S"),
                contains_this.clone(),
                this_pred("inv", vec![]),
            ]),
            ensures: Formula::star(lockset_atom("S"), this_pred("inv", vec![])),
            is_final: true,
        },
        body: None,
    };
    let notify_sig = |name: &str| MethodDecl {
        sig: MethodSig {
            name: name.into(),
            logic_params: vec![lockset_param("S")],
            ret: TypeExpr::Void,
            formals: vec![],
            requires: Formula::star(lockset_atom("S"), contains_this.clone()),
            ensures: lockset_atom("S"),
            is_final: true,
        },
        body: None,
    };
    ClassDecl {
        name: "Object".into(),
        params: vec![],
        ext: None,
        impls: vec![],
        fields: vec![],
        preds: vec![PredDecl {
            name: "inv".into(),
            public: false,
            group: false,
            params: vec![],
            body: Formula::truth(),
        }],
        axioms: vec![],
        methods: vec![wait, notify_sig("notify"), notify_sig("notifyAll")],
        builtin: true,
    }
}

pub fn thread_decl() -> ClassDecl {
    let fork = MethodDecl {
        sig: MethodSig {
            name: "fork".into(),
            logic_params: vec![lockset_param("S")],
            ret: TypeExpr::Void,
            formals: vec![],
            requires: Formula::star(lockset_atom("S"), this_pred("preFork", vec![])),
            ensures: lockset_atom("S"),
            is_final: true,
        },
        body: None,
    };
    let join = MethodDecl {
        sig: MethodSig {
            name: "join".into(),
            logic_params: vec![(TypeExpr::Perm, "p".into())],
            ret: TypeExpr::Void,
            formals: vec![],
            requires: Formula::Join {
                thread: Expr::spec_var("this"),
                perm: SpecVal::var("p"),
            },
            ensures: this_pred("postJoin", vec![SpecVal::var("p")]),
            is_final: true,
        },
        body: None,
    };
    let run = MethodDecl {
        sig: MethodSig {
            name: "run".into(),
            logic_params: vec![],
            ret: TypeExpr::Void,
            formals: vec![],
            requires: Formula::star(
                Formula::Lockset(SpecVal::Nil),
                this_pred("preFork", vec![]),
            ),
            ensures: Formula::star(
                Formula::ex("S", TypeExpr::Lockset, Formula::Lockset(SpecVal::var("S"))),
                this_pred("postJoin", vec![SpecVal::full()]),
            ),
            is_final: false,
        },
        body: Some(Cmd::Value(Expr::null())),
    };
    ClassDecl {
        name: "Thread".into(),
        params: vec![],
        ext: Some(TypeExpr::object()),
        impls: vec![],
        fields: vec![],
        preds: vec![
            PredDecl {
                name: "preFork".into(),
                public: false,
                group: false,
                params: vec![],
                body: Formula::truth(),
            },
            PredDecl {
                name: "postJoin".into(),
                public: false,
                group: true,
                params: vec![(TypeExpr::Perm, "p".into())],
                body: Formula::truth(),
            },
        ],
        axioms: vec![],
        methods: vec![fork, join, run],
        builtin: true,
    }
}

impl ClassTable {
    /// A table containing only the built-ins.
    pub fn builtins() -> ClassTable {
        ClassTable {
            classes: vec![object_decl(), thread_decl()],
            interfaces: vec![],
        }
    }

    /// Ensure `Object` and `Thread` are present (prepended in that order).
    pub fn with_builtins(mut self) -> ClassTable {
        let mut classes = Vec::new();
        if self.class("Object").is_none() {
            classes.push(object_decl());
        }
        if self.class("Thread").is_none() {
            classes.push(thread_decl());
        }
        classes.append(&mut self.classes);
        ClassTable {
            classes,
            interfaces: self.interfaces,
        }
    }
}

/// Method names that are executed primitively by the machine rather than
/// by body inlining.
pub const PRIMITIVE_METHODS: [&str; 5] = ["fork", "join", "wait", "notify", "notifyAll"];

pub fn is_primitive_method(name: &str) -> bool {
    PRIMITIVE_METHODS.contains(&name)
}
