//! Core AST: types, specification values, expressions, formulas, commands,
//! and class tables.

use serde::{Deserialize, Serialize};

/// Identifiers for variables, fields, methods, predicates, classes.
pub type Ident = String;

/// Object identifiers, allocated at runtime / in models.
pub type ObjId = u64;

/// Types: the primitives plus (parameterized) reference types.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeExpr {
    Void,
    Int,
    Bool,
    Perm,
    Lockset,
    /// A class or interface type, possibly applied to specification values.
    Ref(Ident, Vec<SpecVal>),
}

impl TypeExpr {
    pub fn object() -> TypeExpr {
        TypeExpr::Ref("Object".into(), vec![])
    }
    pub fn thread() -> TypeExpr {
        TypeExpr::Ref("Thread".into(), vec![])
    }
    pub fn simple(name: &str) -> TypeExpr {
        TypeExpr::Ref(name.into(), vec![])
    }
    pub fn is_ref(&self) -> bool {
        matches!(self, TypeExpr::Ref(..))
    }
    pub fn ref_name(&self) -> Option<&str> {
        match self {
            TypeExpr::Ref(n, _) => Some(n),
            _ => None,
        }
    }
}

/// Specification values: the closed and read-only value forms that may
/// appear in types, permissions, predicate arguments, and contracts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpecVal {
    Null,
    Int(i64),
    Bool(bool),
    /// An allocated object identifier (runtime/models only, never source).
    Obj(ObjId),
    /// A read-only program variable or a logical variable.
    Var(Ident),
    /// `split(pi)`, denoting half of `pi`. The full permission is the
    /// literal `1` (`SpecVal::Int(1)`), which types at both `int` and
    /// `perm`.
    Split(Box<SpecVal>),
    /// The empty multiset `nil` (lockset type).
    Nil,
    /// Multiset union `pi . pi'` (lockset type).
    Union(Box<SpecVal>, Box<SpecVal>),
}

impl SpecVal {
    pub fn var(name: &str) -> SpecVal {
        SpecVal::Var(name.into())
    }
    /// The full permission `1`.
    pub fn full() -> SpecVal {
        SpecVal::Int(1)
    }
    pub fn split(self) -> SpecVal {
        SpecVal::Split(Box::new(self))
    }
    /// The permission literal 1/2^k.
    pub fn pow2_frac(k: u32) -> SpecVal {
        let mut v = SpecVal::full();
        for _ in 0..k {
            v = v.split();
        }
        v
    }
    pub fn union(a: SpecVal, b: SpecVal) -> SpecVal {
        SpecVal::Union(Box::new(a), Box::new(b))
    }
}

/// Built-in operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    Eq,
    Not,
    And,
    Or,
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Gt,
    Ge,
    /// `C isclassof e`: exact dynamic-class test.
    IsClassOf(Ident),
    /// `e instanceof T`: subtype test on the dynamic type.
    InstanceOf(Box<TypeExpr>),
}

impl Op {
    pub fn arity(&self) -> usize {
        match self {
            Op::Not | Op::IsClassOf(_) | Op::InstanceOf(_) => 1,
            _ => 2,
        }
    }
}

/// Expressions: specification values, read-write variables, operator
/// applications.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Spec(SpecVal),
    /// A read-write program variable.
    Var(Ident),
    Op(Op, Vec<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.into())
    }
    pub fn spec_var(name: &str) -> Expr {
        Expr::Spec(SpecVal::Var(name.into()))
    }
    pub fn truth() -> Expr {
        Expr::Spec(SpecVal::Bool(true))
    }
    pub fn int(n: i64) -> Expr {
        Expr::Spec(SpecVal::Int(n))
    }
    pub fn null() -> Expr {
        Expr::Spec(SpecVal::Null)
    }
    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::Op(Op::Eq, vec![a, b])
    }
    pub fn not(a: Expr) -> Expr {
        Expr::Op(Op::Not, vec![a])
    }
    pub fn neq(a: Expr, b: Expr) -> Expr {
        Expr::not(Expr::eq(a, b))
    }
    /// If this expression is a specification value, return it.
    pub fn as_spec(&self) -> Option<&SpecVal> {
        match self {
            Expr::Spec(v) => Some(v),
            _ => None,
        }
    }
}

/// Quantifier kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuantKind {
    Ex,
    Fa,
}

/// Assertion formulas. The constructors marked "derived" are surface sugar
/// eliminated by [`crate::syntax::desugar::expand_derived`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    /// A boolean expression.
    Pure(Expr),
    /// `PointsTo(e.f, pi, e')`.
    PointsTo {
        target: Expr,
        field: Ident,
        perm: SpecVal,
        value: Box<Expr>,
    },
    /// Derived: `PointsTo(e.f, pi, T)` with a type in value position.
    PointsToTy {
        target: Expr,
        field: Ident,
        perm: SpecVal,
        ty: TypeExpr,
    },
    /// Derived: `Perm(e.f, pi)`.
    PermAtom {
        target: Expr,
        field: Ident,
        perm: SpecVal,
    },
    /// Predicate application `pi.P<args>` or qualified `pi.P@C<args>`.
    PredApp {
        recv: SpecVal,
        name: Ident,
        at: Option<Ident>,
        args: Vec<SpecVal>,
    },
    Star(Box<Formula>, Box<Formula>),
    Wand(Box<Formula>, Box<Formula>),
    /// Derived: `F *-* G`.
    Iff(Box<Formula>, Box<Formula>),
    /// Derived: `assures F G`.
    Assures(Box<Formula>, Box<Formula>),
    /// Derived: `F ispartof G`.
    IsPartOf(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Quant {
        kind: QuantKind,
        var: Ident,
        ty: TypeExpr,
        body: Box<Formula>,
    },
    /// `Join(e, pi)`: a ticket for fraction `pi` of thread `e`'s
    /// postcondition.
    Join { thread: Expr, perm: SpecVal },
    /// `Lockset(pi)`: the current thread holds exactly the locks in `pi`.
    Lockset(SpecVal),
    /// `pi contains e` (multiset membership).
    Contains { set: SpecVal, elem: Expr },
    Fresh(Expr),
    Initialized(Expr),
}

impl Formula {
    pub fn truth() -> Formula {
        Formula::Pure(Expr::truth())
    }
    pub fn star(a: Formula, b: Formula) -> Formula {
        Formula::Star(Box::new(a), Box::new(b))
    }
    pub fn wand(a: Formula, b: Formula) -> Formula {
        Formula::Wand(Box::new(a), Box::new(b))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn quant(kind: QuantKind, var: &str, ty: TypeExpr, body: Formula) -> Formula {
        Formula::Quant {
            kind,
            var: var.into(),
            ty,
            body: Box::new(body),
        }
    }
    pub fn ex(var: &str, ty: TypeExpr, body: Formula) -> Formula {
        Formula::quant(QuantKind::Ex, var, ty, body)
    }
    pub fn fa(var: &str, ty: TypeExpr, body: Formula) -> Formula {
        Formula::quant(QuantKind::Fa, var, ty, body)
    }
    pub fn pred(recv: SpecVal, name: &str, args: Vec<SpecVal>) -> Formula {
        Formula::PredApp {
            recv,
            name: name.into(),
            at: None,
            args,
        }
    }
    pub fn points_to(target: Expr, field: &str, perm: SpecVal, value: Expr) -> Formula {
        Formula::PointsTo {
            target,
            field: field.into(),
            perm,
            value: Box::new(value),
        }
    }
    /// Star-conjoin a list of formulas; the empty conjunction is `true`.
    pub fn star_all(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = fs.into_iter();
        match it.next() {
            None => Formula::truth(),
            Some(first) => it.fold(first, Formula::star),
        }
    }
}

/// Hints attached to statements, guiding the incomplete prover.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hint {
    Unfold {
        recv: Expr,
        pred: Ident,
        at: Option<Ident>,
    },
    Fold {
        recv: Expr,
        pred: Ident,
        at: Option<Ident>,
        args: Vec<SpecVal>,
    },
    Axiom(Ident),
    Witness { var: Ident, val: SpecVal },
}

/// Head commands: the single-step-executable command forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeadCmd {
    /// `x = w` or `x = op(ws)`.
    VarSet(Ident, Expr),
    /// `x = w.f`.
    FieldGet(Ident, Expr, Ident),
    /// `w.f = w'`.
    FieldSet(Expr, Ident, Expr),
    /// `x = new C<args>`.
    New {
        lhs: Ident,
        class: Ident,
        args: Vec<SpecVal>,
    },
    /// `x = w.m<spec_args>(ws)`.
    Call {
        lhs: Ident,
        recv: Expr,
        method: Ident,
        spec_args: Vec<SpecVal>,
        args: Vec<Expr>,
    },
    If(Expr, Box<Cmd>, Box<Cmd>),
    While {
        guard: Expr,
        invariant: Formula,
        body: Box<Cmd>,
    },
    Lock(Expr),
    Unlock(Expr),
    /// Specification command: `assert F` (no-op at runtime).
    Assert(Formula),
    /// Specification command: `commit w` (no-op at runtime).
    Commit(Expr),
    /// Prover hint (specification-only, no-op at runtime).
    Hint(Hint),
    /// Auxiliary: a thread waiting on `obj` with stored reentrancy level.
    Waiting { obj: Expr, level: u32 },
    /// Auxiliary: re-acquire `obj` at the stored reentrancy level.
    Resume { obj: Expr, level: u32 },
}

/// Commands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmd {
    /// A terminal value (the result of the enclosing method body).
    Value(Expr),
    /// `T x; c`.
    Dcl(TypeExpr, Ident, Box<Cmd>),
    /// `fin T i = w; c` — bind a read-only alias of a value.
    FinDcl(TypeExpr, Ident, Expr, Box<Cmd>),
    /// `hc; c`.
    Seq(HeadCmd, Box<Cmd>),
    /// Auxiliary `return-and`: assign `x = w`, then continue with `c`.
    /// Never written in source programs.
    ReturnAnd(Ident, Expr, Box<Cmd>),
}

impl Cmd {
    pub fn skip() -> Cmd {
        Cmd::Value(Expr::null())
    }
    pub fn seq(hc: HeadCmd, c: Cmd) -> Cmd {
        Cmd::Seq(hc, Box::new(c))
    }
}

/// A predicate declaration inside a class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredDecl {
    pub name: Ident,
    pub public: bool,
    /// Groups are splittable predicates; desugared away by
    /// [`crate::syntax::desugar::desugar_groups`].
    pub group: bool,
    pub params: Vec<(TypeExpr, Ident)>,
    pub body: Formula,
}

/// A (possibly named) class axiom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomDecl {
    pub name: Option<Ident>,
    pub formula: Formula,
}

/// A method signature with its contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSig {
    pub name: Ident,
    /// Logical parameters `<T a, ...>`.
    pub logic_params: Vec<(TypeExpr, Ident)>,
    pub ret: TypeExpr,
    pub formals: Vec<(TypeExpr, Ident)>,
    pub requires: Formula,
    /// The postcondition; `result` is bound to the returned value.
    pub ensures: Formula,
    pub is_final: bool,
}

/// A method declaration. Built-in primitives (`fork`, `join`, `wait`,
/// `notify`, `notifyAll`) have no body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodDecl {
    pub sig: MethodSig,
    pub body: Option<Cmd>,
}

/// A predicate type declared (but not defined) by an interface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredTypeDecl {
    pub name: Ident,
    pub params: Vec<(TypeExpr, Ident)>,
}

/// A class declaration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDecl {
    pub name: Ident,
    /// Class value parameters (typed logical variables).
    pub params: Vec<(TypeExpr, Ident)>,
    /// Superclass; `Object` has none.
    pub ext: Option<TypeExpr>,
    pub impls: Vec<TypeExpr>,
    pub fields: Vec<(TypeExpr, Ident)>,
    pub preds: Vec<PredDecl>,
    pub axioms: Vec<AxiomDecl>,
    pub methods: Vec<MethodDecl>,
    /// True for the synthesized `Object`/`Thread` declarations.
    pub builtin: bool,
}

/// An interface declaration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceDecl {
    pub name: Ident,
    pub params: Vec<(TypeExpr, Ident)>,
    pub exts: Vec<TypeExpr>,
    pub pred_types: Vec<PredTypeDecl>,
    pub axioms: Vec<AxiomDecl>,
    pub mtypes: Vec<MethodSig>,
}

/// The class table: all classes and interfaces of a program, always
/// including the built-in `Object` and `Thread`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassTable {
    pub classes: Vec<ClassDecl>,
    pub interfaces: Vec<InterfaceDecl>,
}

impl ClassTable {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }
    pub fn interface(&self, name: &str) -> Option<&InterfaceDecl> {
        self.interfaces.iter().find(|i| i.name == name)
    }
    pub fn is_class(&self, name: &str) -> bool {
        self.class(name).is_some()
    }
    pub fn is_interface(&self, name: &str) -> bool {
        self.interface(name).is_some()
    }
}

/// A parsed program: a class table plus an optional `main` command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub table: ClassTable,
    pub main: Option<Cmd>,
}
