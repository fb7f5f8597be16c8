//! Lookup functions over the class table: fields, method types and bodies,
//! predicate resolution, class axioms, subtyping, and equivalence of
//! specification values.
//!
//! All lookups instantiate class parameters: querying `fields(Node<o>)`
//! substitutes `o` for the declaring class's parameter throughout the
//! result. The hierarchy is checked for cycles on construction, so every
//! walk terminates.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::syntax::ast::*;
use crate::syntax::fv;
use crate::syntax::{FreshSupply, Subst};

fn subst_formula(sigma: &Subst, f: &Formula) -> Formula {
    let names = fv::fv_formula(f);
    let mut supply = FreshSupply::avoiding(names.iter().map(|s| s.as_str()));
    sigma.formula(f, &mut supply)
}

fn subst_cmd(sigma: &Subst, c: &Cmd) -> Cmd {
    let names = fv::fv_cmd(c);
    let mut supply = FreshSupply::avoiding(names.iter().map(|s| s.as_str()));
    sigma.cmd(c, &mut supply)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LookupError {
    #[error("unknown class or interface `{0}`")]
    UnknownType(Ident),
    #[error("`{0}` is not a class type")]
    NotAClass(String),
    #[error("class hierarchy is cyclic at `{0}`")]
    CyclicHierarchy(Ident),
    #[error("type `{ty}` expects {expected} parameters, got {got}")]
    TypeArity {
        ty: Ident,
        expected: usize,
        got: usize,
    },
    #[error("no method `{method}` in `{ty}`")]
    UnknownMethod { method: Ident, ty: String },
    #[error("method `{method}` inherited ambiguously into `{ty}`")]
    AmbiguousMethod { method: Ident, ty: String },
    #[error("no predicate `{pred}` in `{ty}`")]
    UnknownPred { pred: Ident, ty: String },
    #[error("no field `{field}` in `{ty}`")]
    UnknownField { field: Ident, ty: String },
}

type LResult<T> = Result<T, LookupError>;

/// A resolved predicate at a specific class: the locally contributed body
/// plus where the unfolding continues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedPred {
    pub name: Ident,
    /// The class the lookup was performed at (the `C` of `P@C`).
    pub defining_class: Ident,
    /// Full parameter list of `P` at this class (instantiated).
    pub params: Vec<(TypeExpr, Ident)>,
    /// Locally contributed body; `true` when the class inherits `P`
    /// without redefining it.
    pub body: Formula,
    /// The (instantiated) direct superclass where unfolding continues,
    /// when `P` is also defined there.
    pub ext: Option<TypeExpr>,
    pub public: bool,
}

/// Default field values per type.
pub fn default_value(t: &TypeExpr) -> SpecVal {
    match t {
        TypeExpr::Int => SpecVal::Int(0),
        TypeExpr::Bool => SpecVal::Bool(false),
        TypeExpr::Perm => SpecVal::full(),
        TypeExpr::Lockset => SpecVal::Nil,
        TypeExpr::Void | TypeExpr::Ref(..) => SpecVal::Null,
    }
}

/// Flatten a specification value into its multiset of atoms: unions are
/// concatenated, `nil` is dropped, and atoms are sorted.
pub fn ms_normalize(v: &SpecVal) -> Vec<SpecVal> {
    fn go(v: &SpecVal, out: &mut Vec<SpecVal>) {
        match v {
            SpecVal::Nil => {}
            SpecVal::Union(a, b) => {
                go(a, out);
                go(b, out);
            }
            other => out.push(other.clone()),
        }
    }
    let mut out = Vec::new();
    go(v, &mut out);
    out.sort();
    out
}

/// Equivalence of specification values: syntactic equality modulo the
/// multiset axioms (associativity, commutativity, `nil` unit).
pub fn specval_equiv(a: &SpecVal, b: &SpecVal) -> bool {
    ms_normalize(a) == ms_normalize(b)
}

/// Rebuild a specification value from a normalized atom list.
pub fn ms_rebuild(atoms: &[SpecVal]) -> SpecVal {
    let mut it = atoms.iter().cloned();
    match it.next() {
        None => SpecVal::Nil,
        Some(first) => it.fold(first, SpecVal::union),
    }
}

/// Read-only lookup interface over a class table.
#[derive(Debug, Clone, Copy)]
pub struct Lookup<'a> {
    pub table: &'a ClassTable,
}

impl<'a> Lookup<'a> {
    /// Wrap a table, rejecting cyclic `ext` hierarchies.
    pub fn new(table: &'a ClassTable) -> LResult<Lookup<'a>> {
        let lk = Lookup { table };
        for c in &table.classes {
            lk.check_acyclic(&c.name, |name| {
                table
                    .class(name)
                    .and_then(|c| c.ext.as_ref())
                    .and_then(|t| t.ref_name())
                    .into_iter()
                    .map(str::to_string)
                    .collect()
            })?;
        }
        for i in &table.interfaces {
            lk.check_acyclic(&i.name, |name| {
                table
                    .interface(name)
                    .map(|i| {
                        i.exts
                            .iter()
                            .filter_map(|t| t.ref_name())
                            .map(str::to_string)
                            .collect()
                    })
                    .unwrap_or_default()
            })?;
        }
        Ok(lk)
    }

    fn check_acyclic(&self, start: &str, nexts: impl Fn(&str) -> Vec<String>) -> LResult<()> {
        let mut seen = BTreeSet::new();
        let mut frontier = vec![start.to_string()];
        while let Some(name) = frontier.pop() {
            if name == start && !seen.is_empty() {
                return Err(LookupError::CyclicHierarchy(start.into()));
            }
            if !seen.insert(name.clone()) {
                continue;
            }
            frontier.extend(nexts(&name));
        }
        Ok(())
    }

    fn class(&self, name: &str) -> LResult<&'a ClassDecl> {
        self.table
            .class(name)
            .ok_or_else(|| LookupError::UnknownType(name.into()))
    }

    fn interface(&self, name: &str) -> LResult<&'a InterfaceDecl> {
        self.table
            .interface(name)
            .ok_or_else(|| LookupError::UnknownType(name.into()))
    }

    fn ref_parts(ty: &TypeExpr) -> LResult<(&str, &[SpecVal])> {
        match ty {
            TypeExpr::Ref(name, args) => Ok((name, args)),
            other => Err(LookupError::NotAClass(other.to_string())),
        }
    }

    /// The substitution instantiating `params` with `args`.
    fn inst(
        &self,
        ty: &str,
        params: &[(TypeExpr, Ident)],
        args: &[SpecVal],
    ) -> LResult<Subst> {
        if params.len() != args.len() {
            return Err(LookupError::TypeArity {
                ty: ty.into(),
                expected: params.len(),
                got: args.len(),
            });
        }
        Ok(Subst::from_pairs(
            params
                .iter()
                .zip(args)
                .map(|((_, name), v)| (name.as_str(), v.clone())),
        ))
    }

    /// The instantiated direct superclass of a class type (`None` for
    /// `Object`).
    pub fn super_of(&self, ty: &TypeExpr) -> LResult<Option<TypeExpr>> {
        let (name, args) = Self::ref_parts(ty)?;
        let decl = self.class(name)?;
        let sigma = self.inst(name, &decl.params, args)?;
        Ok(decl.ext.as_ref().map(|t| sigma.type_expr(t)))
    }

    /// All declared and inherited fields of a class type, subclass fields
    /// last, with class parameters instantiated.
    pub fn fields(&self, ty: &TypeExpr) -> LResult<Vec<(Ident, TypeExpr)>> {
        let (name, args) = Self::ref_parts(ty)?;
        let decl = self.class(name)?;
        let sigma = self.inst(name, &decl.params, args)?;
        let mut out = match decl.ext.as_ref() {
            Some(ext) => self.fields(&sigma.type_expr(ext))?,
            None => Vec::new(),
        };
        for (t, f) in &decl.fields {
            out.push((f.clone(), sigma.type_expr(t)));
        }
        Ok(out)
    }

    pub fn field_type(&self, ty: &TypeExpr, field: &str) -> LResult<TypeExpr> {
        self.fields(ty)?
            .into_iter()
            .find(|(f, _)| f == field)
            .map(|(_, t)| t)
            .ok_or_else(|| LookupError::UnknownField {
                field: field.into(),
                ty: ty.to_string(),
            })
    }

    fn subst_sig(sigma: &Subst, sig: &MethodSig) -> MethodSig {
        MethodSig {
            name: sig.name.clone(),
            logic_params: sig
                .logic_params
                .iter()
                .map(|(t, x)| (sigma.type_expr(t), x.clone()))
                .collect(),
            ret: sigma.type_expr(&sig.ret),
            formals: sig
                .formals
                .iter()
                .map(|(t, x)| (sigma.type_expr(t), x.clone()))
                .collect(),
            requires: subst_formula(&sigma, &sig.requires),
            ensures: subst_formula(&sigma, &sig.ensures),
            is_final: sig.is_final,
        }
    }

    /// The method type of `m` at a class or interface type, chasing
    /// inheritance. Interface multiple inheritance must resolve uniquely.
    pub fn mtype(&self, method: &str, ty: &TypeExpr) -> LResult<MethodSig> {
        let (name, args) = Self::ref_parts(ty)?;
        if self.table.is_class(name) {
            let (_, sig, _) = self.mlkup(method, ty)?;
            return Ok(sig);
        }
        let decl = self.interface(name)?;
        let sigma = self.inst(name, &decl.params, args)?;
        if let Some(sig) = decl.mtypes.iter().find(|s| s.name == method) {
            return Ok(Self::subst_sig(&sigma, sig));
        }
        // Inherit from extended interfaces; distinct answers are an error.
        let mut found: Vec<MethodSig> = Vec::new();
        for ext in &decl.exts {
            if let Ok(sig) = self.mtype(method, &sigma.type_expr(ext)) {
                if !found.contains(&sig) {
                    found.push(sig);
                }
            }
        }
        match found.len() {
            0 => self.mtype(method, &TypeExpr::object()).map_err(|_| {
                LookupError::UnknownMethod {
                    method: method.into(),
                    ty: ty.to_string(),
                }
            }),
            1 => Ok(found.pop().unwrap()),
            _ => Err(LookupError::AmbiguousMethod {
                method: method.into(),
                ty: ty.to_string(),
            }),
        }
    }

    /// Method lookup along the class chain: the defining class, the
    /// instantiated signature, and the instantiated body (`None` for
    /// primitives).
    pub fn mlkup(
        &self,
        method: &str,
        ty: &TypeExpr,
    ) -> LResult<(Ident, MethodSig, Option<Cmd>)> {
        let (name, args) = Self::ref_parts(ty)?;
        let decl = self.class(name)?;
        let sigma = self.inst(name, &decl.params, args)?;
        if let Some(m) = decl.methods.iter().find(|m| m.sig.name == method) {
            return Ok((
                name.to_string(),
                Self::subst_sig(&sigma, &m.sig),
                m.body.as_ref().map(|b| subst_cmd(&sigma, b)),
            ));
        }
        match decl.ext.as_ref() {
            Some(ext) => self.mlkup(method, &sigma.type_expr(ext)),
            None => Err(LookupError::UnknownMethod {
                method: method.into(),
                ty: ty.to_string(),
            }),
        }
    }

    /// The full parameter list of predicate `P` at a type (instantiated);
    /// follows class `ext`, interface `ext`, and `impl` edges.
    pub fn ptype(&self, pred: &str, ty: &TypeExpr) -> LResult<Vec<(TypeExpr, Ident)>> {
        let (name, args) = Self::ref_parts(ty)?;
        if pred == "init" {
            return Ok(Vec::new());
        }
        if let Ok(decl) = self.class(name) {
            let sigma = self.inst(name, &decl.params, args)?;
            if let Some(p) = decl.preds.iter().find(|p| p.name == pred) {
                return Ok(p
                    .params
                    .iter()
                    .map(|(t, x)| (sigma.type_expr(t), x.clone()))
                    .collect());
            }
            for sup in decl
                .ext
                .iter()
                .chain(decl.impls.iter())
                .map(|t| sigma.type_expr(t))
            {
                if let Ok(ps) = self.ptype(pred, &sup) {
                    return Ok(ps);
                }
            }
        } else {
            let decl = self.interface(name)?;
            let sigma = self.inst(name, &decl.params, args)?;
            if let Some(p) = decl.pred_types.iter().find(|p| p.name == pred) {
                return Ok(p
                    .params
                    .iter()
                    .map(|(t, x)| (sigma.type_expr(t), x.clone()))
                    .collect());
            }
            for sup in decl.exts.iter().map(|t| sigma.type_expr(t)) {
                if let Ok(ps) = self.ptype(pred, &sup) {
                    return Ok(ps);
                }
            }
        }
        Err(LookupError::UnknownPred {
            pred: pred.into(),
            ty: ty.to_string(),
        })
    }

    /// Resolve predicate `P` at class type `ty`: the locally contributed
    /// body (`true` if inherited without redefinition), the full
    /// instantiated parameter list, and where unfolding continues.
    ///
    /// `init` is synthesized: write permission to all declared fields at
    /// their default values, except `init` at `Thread`, which is
    /// `Join(this, 1)`.
    pub fn plkup(&self, pred: &str, ty: &TypeExpr) -> LResult<ResolvedPred> {
        let (name, args) = Self::ref_parts(ty)?;
        let decl = self.class(name)?;
        let sigma = self.inst(name, &decl.params, args)?;
        let sup = decl.ext.as_ref().map(|t| sigma.type_expr(t));

        if pred == "init" {
            let body = if name == "Thread" {
                Formula::Join {
                    thread: Expr::spec_var("this"),
                    perm: SpecVal::full(),
                }
            } else {
                Formula::star_all(decl.fields.iter().map(|(t, f)| {
                    Formula::points_to(
                        Expr::spec_var("this"),
                        f,
                        SpecVal::full(),
                        Expr::Spec(default_value(&sigma.type_expr(t))),
                    )
                }))
            };
            return Ok(ResolvedPred {
                name: "init".into(),
                defining_class: name.to_string(),
                params: Vec::new(),
                body,
                ext: sup,
                public: false,
            });
        }

        let declared_above = |sup: &Option<TypeExpr>| {
            sup.as_ref()
                .map(|s| self.ptype(pred, s).is_ok())
                .unwrap_or(false)
        };
        if let Some(p) = decl.preds.iter().find(|p| p.name == pred) {
            return Ok(ResolvedPred {
                name: p.name.clone(),
                defining_class: name.to_string(),
                params: p
                    .params
                    .iter()
                    .map(|(t, x)| (sigma.type_expr(t), x.clone()))
                    .collect(),
                body: subst_formula(&sigma, &p.body),
                ext: if declared_above(&sup) { sup } else { None },
                public: p.public,
            });
        }
        // Inherited without redefinition: body `true`.
        if declared_above(&sup) {
            return Ok(ResolvedPred {
                name: pred.into(),
                defining_class: name.to_string(),
                params: self.ptype(pred, sup.as_ref().unwrap())?,
                body: Formula::truth(),
                ext: sup,
                public: false,
            });
        }
        Err(LookupError::UnknownPred {
            pred: pred.into(),
            ty: ty.to_string(),
        })
    }

    /// All axioms of a type and its supertypes (instantiated; `this` is
    /// left free for the caller to bind to a receiver).
    pub fn axioms_of(&self, ty: &TypeExpr) -> LResult<Vec<AxiomDecl>> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        self.collect_axioms(ty, &mut seen, &mut out)?;
        Ok(out)
    }

    fn collect_axioms(
        &self,
        ty: &TypeExpr,
        seen: &mut BTreeSet<String>,
        out: &mut Vec<AxiomDecl>,
    ) -> LResult<()> {
        let (name, args) = Self::ref_parts(ty)?;
        if !seen.insert(name.to_string()) {
            return Ok(());
        }
        if let Ok(decl) = self.class(name) {
            let sigma = self.inst(name, &decl.params, args)?;
            for ax in &decl.axioms {
                out.push(AxiomDecl {
                    name: ax.name.clone(),
                    formula: subst_formula(&sigma, &ax.formula),
                });
            }
            for sup in decl
                .ext
                .iter()
                .chain(decl.impls.iter())
                .map(|t| sigma.type_expr(t))
            {
                self.collect_axioms(&sup, seen, out)?;
            }
        } else {
            let decl = self.interface(name)?;
            let sigma = self.inst(name, &decl.params, args)?;
            for ax in &decl.axioms {
                out.push(AxiomDecl {
                    name: ax.name.clone(),
                    formula: subst_formula(&sigma, &ax.formula),
                });
            }
            for sup in decl.exts.iter().map(|t| sigma.type_expr(t)) {
                self.collect_axioms(&sup, seen, out)?;
            }
        }
        Ok(())
    }

    /// All supertypes of a reference type, including itself
    /// (instantiated).
    pub fn supertypes(&self, ty: &TypeExpr) -> LResult<Vec<TypeExpr>> {
        let mut out = Vec::new();
        let mut frontier = vec![ty.clone()];
        while let Some(t) = frontier.pop() {
            if out.contains(&t) {
                continue;
            }
            let (name, args) = Self::ref_parts(&t)?;
            if let Ok(decl) = self.class(name) {
                let sigma = self.inst(name, &decl.params, args)?;
                frontier.extend(
                    decl.ext
                        .iter()
                        .chain(decl.impls.iter())
                        .map(|s| sigma.type_expr(s)),
                );
            } else {
                let decl = self.interface(name)?;
                let sigma = self.inst(name, &decl.params, args)?;
                frontier.extend(decl.exts.iter().map(|s| sigma.type_expr(s)));
                frontier.push(TypeExpr::object());
            }
            out.push(t);
        }
        Ok(out)
    }

    /// Subtyping: reflexivity, class/interface hierarchy with
    /// specification-value equivalence on type arguments, and every
    /// reference type below `lockset`.
    pub fn subtype(&self, t: &TypeExpr, u: &TypeExpr) -> bool {
        if t == u {
            return true;
        }
        if *u == TypeExpr::Lockset && t.is_ref() {
            return true;
        }
        let (TypeExpr::Ref(..), TypeExpr::Ref(uname, uargs)) = (t, u) else {
            return false;
        };
        let Ok(sups) = self.supertypes(t) else {
            return false;
        };
        sups.iter().any(|s| match s {
            TypeExpr::Ref(sname, sargs) => {
                sname == uname
                    && sargs.len() == uargs.len()
                    && sargs
                        .iter()
                        .zip(uargs)
                        .all(|(a, b)| specval_equiv(a, b))
            }
            _ => false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn table(src: &str) -> ClassTable {
        parse_program(src).unwrap().table.with_builtins()
    }

    const LIST: &str = "
class List {
  int val;
  List next;
  pred state<int n> = true;
}
class MVList ext List {
}
";

    #[test]
    fn fields_of_object_empty_and_list_accumulates() {
        let t = table(LIST);
        let lk = Lookup::new(&t).unwrap();
        assert!(lk.fields(&TypeExpr::object()).unwrap().is_empty());
        assert_eq!(
            lk.fields(&TypeExpr::simple("List")).unwrap(),
            vec![
                ("val".to_string(), TypeExpr::Int),
                ("next".to_string(), TypeExpr::simple("List")),
            ]
        );
        // Inherited fields come through unchanged.
        assert_eq!(
            lk.fields(&TypeExpr::simple("MVList")).unwrap().len(),
            2
        );
    }

    #[test]
    fn fields_substitute_class_parameters() {
        let t = table("class Node<Object o> { Node<o> next; }");
        let lk = Lookup::new(&t).unwrap();
        let ty = TypeExpr::Ref("Node".into(), vec![SpecVal::Null]);
        assert_eq!(
            lk.fields(&ty).unwrap(),
            vec![(
                "next".to_string(),
                TypeExpr::Ref("Node".into(), vec![SpecVal::Null])
            )]
        );
    }

    #[test]
    fn mtype_run_on_thread_and_fork_by_inheritance() {
        let t = table("class Job ext Thread { void run() requires Lockset(nil) * this.preFork; ensures (ex lockset S. Lockset(S)) * this.postJoin<1>; { } }");
        let lk = Lookup::new(&t).unwrap();
        let run = lk.mtype("run", &TypeExpr::thread()).unwrap();
        assert!(!run.is_final);
        assert_eq!(run.ensures,
            Formula::star(
                Formula::ex("S", TypeExpr::Lockset, Formula::Lockset(SpecVal::var("S"))),
                Formula::pred(SpecVal::var("this"), "postJoin", vec![SpecVal::full()]),
            ));
        let (def, run_body_sig, body) = lk.mlkup("run", &TypeExpr::thread()).unwrap();
        assert_eq!(def, "Thread");
        assert_eq!(run_body_sig.name, "run");
        assert_eq!(body, Some(Cmd::Value(Expr::null())));
        // fork is found on Job by walking up to Thread, and is primitive.
        let (def, fork, body) = lk.mlkup("fork", &TypeExpr::simple("Job")).unwrap();
        assert_eq!(def, "Thread");
        assert!(fork.is_final);
        assert!(body.is_none());
    }

    #[test]
    fn plkup_init_list_and_thread() {
        let t = table(LIST);
        let lk = Lookup::new(&t).unwrap();
        let rp = lk.plkup("init", &TypeExpr::simple("List")).unwrap();
        assert_eq!(
            rp.body,
            Formula::star(
                Formula::points_to(
                    Expr::spec_var("this"),
                    "val",
                    SpecVal::full(),
                    Expr::int(0)
                ),
                Formula::points_to(
                    Expr::spec_var("this"),
                    "next",
                    SpecVal::full(),
                    Expr::null()
                ),
            )
        );
        assert_eq!(rp.ext, Some(TypeExpr::object()));

        let rp = lk.plkup("init", &TypeExpr::thread()).unwrap();
        assert_eq!(
            rp.body,
            Formula::Join {
                thread: Expr::spec_var("this"),
                perm: SpecVal::full(),
            }
        );
        assert_eq!(rp.ext, Some(TypeExpr::object()));

        let rp = lk.plkup("init", &TypeExpr::object()).unwrap();
        assert_eq!(rp.body, Formula::truth());
        assert_eq!(rp.ext, None);
    }

    #[test]
    fn plkup_inherited_without_redefinition_is_true() {
        let t = table(LIST);
        let lk = Lookup::new(&t).unwrap();
        let rp = lk.plkup("state", &TypeExpr::simple("MVList")).unwrap();
        assert_eq!(rp.body, Formula::truth());
        assert_eq!(rp.ext, Some(TypeExpr::simple("List")));
        assert_eq!(rp.params, vec![(TypeExpr::Int, "n".to_string())]);
        // At the defining class the chain stops (Object doesn't define it).
        let rp = lk.plkup("state", &TypeExpr::simple("List")).unwrap();
        assert_eq!(rp.ext, None);
    }

    #[test]
    fn axioms_accumulate_over_supertypes() {
        let t = table(
            "class A { axiom a1: this.inv -* this.inv; }
             class B ext A { axiom b1: true; }",
        );
        let lk = Lookup::new(&t).unwrap();
        let axs = lk.axioms_of(&TypeExpr::simple("B")).unwrap();
        let names: Vec<_> = axs.iter().map(|a| a.name.clone().unwrap()).collect();
        assert_eq!(names, vec!["b1".to_string(), "a1".to_string()]);
        assert!(lk.axioms_of(&TypeExpr::object()).unwrap().is_empty());
    }

    #[test]
    fn subtype_chain_and_lockset() {
        let t = table(LIST);
        let lk = Lookup::new(&t).unwrap();
        assert!(lk.subtype(&TypeExpr::thread(), &TypeExpr::object()));
        assert!(lk.subtype(&TypeExpr::thread(), &TypeExpr::Lockset));
        assert!(lk.subtype(&TypeExpr::simple("MVList"), &TypeExpr::simple("List")));
        assert!(!lk.subtype(&TypeExpr::object(), &TypeExpr::thread()));
        assert!(!lk.subtype(&TypeExpr::Int, &TypeExpr::Perm));
    }

    #[test]
    fn subtype_compares_type_args_up_to_equivalence() {
        let t = table("class Cell<lockset S> { }");
        let lk = Lookup::new(&t).unwrap();
        let a = TypeExpr::Ref(
            "Cell".into(),
            vec![SpecVal::union(SpecVal::Nil, SpecVal::var("x"))],
        );
        let b = TypeExpr::Ref("Cell".into(), vec![SpecVal::var("x")]);
        assert!(lk.subtype(&a, &b));
    }

    #[test]
    fn specval_equiv_multiset_axioms() {
        let x = SpecVal::var("x");
        let y = SpecVal::var("y");
        let z = SpecVal::var("z");
        // nil . x == x
        assert!(specval_equiv(
            &SpecVal::union(SpecVal::Nil, x.clone()),
            &x
        ));
        // (x . y) . z == x . (y . z)
        assert!(specval_equiv(
            &SpecVal::union(SpecVal::union(x.clone(), y.clone()), z.clone()),
            &SpecVal::union(x.clone(), SpecVal::union(y.clone(), z.clone())),
        ));
        // commutativity, and duplicates are kept (multiset, not set)
        assert!(specval_equiv(
            &SpecVal::union(x.clone(), y.clone()),
            &SpecVal::union(y.clone(), x.clone()),
        ));
        assert!(!specval_equiv(
            &SpecVal::union(x.clone(), x.clone()),
            &x
        ));
    }

    #[test]
    fn cyclic_hierarchy_rejected() {
        let t = table("class A ext B { } class B ext A { }");
        assert_eq!(
            Lookup::new(&t).unwrap_err(),
            LookupError::CyclicHierarchy("A".into())
        );
    }

    #[test]
    fn ambiguous_interface_inheritance_is_an_error() {
        let src = "
interface I { int m() ; }
interface J { bool m() ; }
interface K ext I, J { }
";
        let t = table(src);
        let lk = Lookup::new(&t).unwrap();
        let e = lk.mtype("m", &TypeExpr::simple("K")).unwrap_err();
        assert!(matches!(e, LookupError::AmbiguousMethod { .. }));
        // Agreeing diamonds are fine.
        let src2 = "
interface I { int m() ; }
interface J ext I { }
interface K ext I, J { }
";
        let t2 = table(src2);
        let lk2 = Lookup::new(&t2).unwrap();
        assert_eq!(lk2.mtype("m", &TypeExpr::simple("K")).unwrap().ret, TypeExpr::Int);
    }

    #[test]
    fn interface_falls_back_to_object_methods() {
        let t = table("interface I { }");
        let lk = Lookup::new(&t).unwrap();
        let sig = lk.mtype("wait", &TypeExpr::simple("I")).unwrap();
        assert!(sig.is_final);
    }
}
