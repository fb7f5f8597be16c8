//! Symbolic execution of method bodies against their contracts.
//!
//! [`verify_table`] checks every method of every class by running its
//! body through the per-command Hoare rules ([`exec`]), and proves every
//! class axiom sound with class axioms disabled. Consequence, framing,
//! and existential introduction are not searched as separate rules: each
//! step subtracts exactly what it needs via
//! [`crate::entailment::frame_subtract`] and keeps the remainder.

pub mod exec;

use serde::{Deserialize, Serialize};

use crate::entailment::{entails, ProofCtx};
use crate::lookup::Lookup;
use crate::syntax::ast::*;
use crate::syntax::fv::fv_formula;
use crate::syntax::subst::FreshSupply;
use crate::typecheck::TypeEnv;

pub use exec::SymState;

/// Knobs for verification.
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Sequential mode: object creation does not produce `fresh`.
    pub sequential: bool,
    /// Proof-step budget per entailment query.
    pub budget: u64,
    /// Predicate unfolding depth per entailment query.
    pub unfold_depth: u32,
    /// Record the symbolic state after every step.
    pub trace: bool,
}

impl Default for VerifyOptions {
    fn default() -> VerifyOptions {
        VerifyOptions {
            sequential: false,
            budget: 50_000,
            unfold_depth: 8,
            trace: false,
        }
    }
}

/// Outcome status of one verified item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Every obligation was proved.
    Verified,
    /// Some entailment obligation could not be established.
    Unknown,
    /// The item is malformed or a step rule could not be applied.
    Failed,
}

/// One logged proof obligation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obligation {
    /// The step that raised the obligation.
    pub step: String,
    /// The goal formula (pretty-printed).
    pub goal: String,
    pub proved: bool,
    /// The prover's account of what was missing, when not proved.
    pub detail: Option<String>,
}

/// The verdict for one method or class axiom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub class: Ident,
    /// Method name, or `axiom <name>` for axiom-soundness obligations.
    pub item: Ident,
    pub status: Status,
    pub obligations: Vec<Obligation>,
    /// Pretty-printed symbolic states, when tracing was requested.
    pub trace: Vec<String>,
}

impl Verdict {
    pub fn verified(&self) -> bool {
        self.status == Status::Verified
    }
}

/// Verify every method and class axiom of the table. The table must have
/// passed [`crate::typecheck::check_class_table`].
pub fn verify_table(lk: &Lookup, opts: &VerifyOptions) -> Vec<Verdict> {
    let mut out = Vec::new();
    for class in &lk.table.classes {
        let class_ty = self_type(class);
        for (i, ax) in class.axioms.iter().enumerate() {
            out.push(verify_axiom(lk, class, &class_ty, ax, i, opts));
        }
        for m in &class.methods {
            out.push(verify_method(lk, class, m, opts));
        }
    }
    out
}

/// The type `C<ā>` a class's members see `this` at.
fn self_type(class: &ClassDecl) -> TypeExpr {
    TypeExpr::Ref(
        class.name.clone(),
        class
            .params
            .iter()
            .map(|(_, x)| SpecVal::var(x))
            .collect(),
    )
}

/// Verify one method body against its contract. Bodiless methods are the
/// built-in primitives and verify trivially.
pub fn verify_method(
    lk: &Lookup,
    class: &ClassDecl,
    m: &MethodDecl,
    opts: &VerifyOptions,
) -> Verdict {
    let mut verdict = Verdict {
        class: class.name.clone(),
        item: m.sig.name.clone(),
        status: Status::Verified,
        obligations: Vec::new(),
        trace: Vec::new(),
    };
    let Some(body) = &m.body else {
        return verdict;
    };

    let class_ty = self_type(class);
    let mut env = TypeEnv::new();
    for (t, x) in &class.params {
        env.bind(x, t.clone());
    }
    env.bind("this", class_ty.clone());
    for (t, x) in m.sig.logic_params.iter().chain(&m.sig.formals) {
        env.bind(x, t.clone());
    }

    let mut names: Vec<Ident> = env.vars.keys().cloned().collect();
    names.extend(fv_formula(&m.sig.requires));
    names.extend(fv_formula(&m.sig.ensures));
    names.extend(crate::syntax::fv::fv_cmd(body));
    let supply = FreshSupply::avoiding(names.iter().map(|s| s.as_str()));

    let pre = Formula::star(
        m.sig.requires.clone(),
        Formula::Pure(Expr::neq(Expr::spec_var("this"), Expr::null())),
    );
    let st = SymState {
        formula: pre,
        env,
        rw: Default::default(),
        receiver: SpecVal::var("this"),
        supply,
        pending: Vec::new(),
    };
    let post = exec::Post {
        formula: m.sig.ensures.clone(),
        result: Some("result".to_string()),
        result_ty: m.sig.ret.clone(),
    };

    let mut run = exec::Run::new(lk, opts);
    let _ = exec::exec(&mut run, st, body, &post);
    run.finish(&mut verdict);
    verdict
}

/// Verify a program's `main` block: the initial thread starts with an
/// empty lockset (in sequential mode, with nothing) and promises nothing.
pub fn verify_main(lk: &Lookup, main: &Cmd, opts: &VerifyOptions) -> Verdict {
    let mut verdict = Verdict {
        class: String::new(),
        item: "main".into(),
        status: Status::Verified,
        obligations: Vec::new(),
        trace: Vec::new(),
    };
    let env = TypeEnv::new();
    let mut names: Vec<Ident> = crate::syntax::fv::fv_cmd(main).into_iter().collect();
    names.push("this".into());
    let supply = FreshSupply::avoiding(names.iter().map(|s| s.as_str()));
    let pre = if opts.sequential {
        Formula::truth()
    } else {
        Formula::Lockset(SpecVal::Nil)
    };
    let st = SymState {
        formula: pre,
        env,
        rw: Default::default(),
        receiver: SpecVal::Null,
        supply,
        pending: Vec::new(),
    };
    let post = exec::Post {
        formula: Formula::truth(),
        result: None,
        result_ty: TypeExpr::Void,
    };
    let mut run = exec::Run::new(lk, opts);
    let _ = exec::exec(&mut run, st, main, &post);
    run.finish(&mut verdict);
    verdict
}

/// Prove one class axiom sound, with class axioms disabled (so an axiom
/// cannot justify itself). Free variables are bound at inferred types and
/// the obligation is proved under receiver `this`.
fn verify_axiom(
    lk: &Lookup,
    class: &ClassDecl,
    class_ty: &TypeExpr,
    ax: &AxiomDecl,
    index: usize,
    opts: &VerifyOptions,
) -> Verdict {
    let item = match &ax.name {
        Some(n) => format!("axiom {n}"),
        None => format!("axiom #{index}"),
    };
    let mut env = TypeEnv::new();
    for (t, x) in &class.params {
        env.bind(x, t.clone());
    }
    env.bind("this", class_ty.clone());
    for (x, t) in infer_var_types(lk, class_ty, &ax.formula) {
        if !env.vars.contains_key(&x) {
            env.bind(&x, t);
        }
    }
    let ctx = ProofCtx::new(lk, &env)
        .with_receiver(Some(SpecVal::var("this")))
        .with_budget(opts.budget)
        .with_unfold_depth(opts.unfold_depth)
        .with_axioms(false);
    // The axiom is proved for exact instances of the declaring class,
    // so its predicates open and fold at that class.
    let ante = Formula::Pure(Expr::Op(
        Op::IsClassOf(class.name.clone()),
        vec![Expr::spec_var("this")],
    ));
    let verdict = entails(&ctx, &ante, &ax.formula, &[]);
    let proved = verdict.is_proved();
    let detail = match verdict {
        crate::entailment::Verdict::Proved => None,
        crate::entailment::Verdict::Unknown(msg) => Some(msg),
    };
    Verdict {
        class: class.name.clone(),
        item,
        status: if proved {
            Status::Verified
        } else {
            Status::Unknown
        },
        obligations: vec![Obligation {
            step: "axiom soundness".into(),
            goal: ax.formula.to_string(),
            proved,
            detail,
        }],
        trace: Vec::new(),
    }
}

/// Best-effort types for an axiom's free variables: predicate arguments
/// take the declared parameter types, membership sets are locksets,
/// everything else defaults to `int`.
fn infer_var_types(lk: &Lookup, class_ty: &TypeExpr, f: &Formula) -> Vec<(Ident, TypeExpr)> {
    let mut out: Vec<(Ident, TypeExpr)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let put = |out: &mut Vec<(Ident, TypeExpr)>,
                   seen: &mut std::collections::BTreeSet<Ident>,
                   x: &Ident,
                   t: TypeExpr| {
        if x != "this" && seen.insert(x.clone()) {
            out.push((x.clone(), t));
        }
    };
    fn walk(
        lk: &Lookup,
        class_ty: &TypeExpr,
        f: &Formula,
        put: &mut dyn FnMut(&Ident, TypeExpr),
    ) {
        match f {
            Formula::PredApp { recv, name, args, .. } => {
                if let SpecVal::Var(r) = recv {
                    put(r, class_ty.clone());
                }
                if let Ok(params) = lk.ptype(name, class_ty) {
                    for (v, (t, _)) in args.iter().zip(&params) {
                        if let SpecVal::Var(x) = v {
                            put(x, t.clone());
                        }
                    }
                }
            }
            Formula::Contains { set, .. } => {
                if let SpecVal::Var(s) = set {
                    put(s, TypeExpr::Lockset);
                }
            }
            Formula::Lockset(SpecVal::Var(s)) => put(s, TypeExpr::Lockset),
            Formula::PointsTo { perm, .. } | Formula::PermAtom { perm, .. } => {
                if let SpecVal::Var(p) = perm {
                    put(p, TypeExpr::Perm);
                }
            }
            Formula::Star(a, b)
            | Formula::Wand(a, b)
            | Formula::Iff(a, b)
            | Formula::Assures(a, b)
            | Formula::IsPartOf(a, b)
            | Formula::And(a, b)
            | Formula::Or(a, b) => {
                walk(lk, class_ty, a, put);
                walk(lk, class_ty, b, put);
            }
            Formula::Quant { body, .. } => walk(lk, class_ty, body, put),
            _ => {}
        }
    }
    walk(lk, class_ty, f, &mut |x, t| put(&mut out, &mut seen, x, t));
    // Anything left over in the formula's free variables defaults to int.
    for x in fv_formula(f) {
        if x != "this" && seen.insert(x.clone()) {
            out.push((x, TypeExpr::Int));
        }
    }
    out
}
