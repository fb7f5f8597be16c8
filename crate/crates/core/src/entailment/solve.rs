//! Pure constraint solver: congruence closure over terms, multiset
//! (bag) normalization and membership propagation, and linear integer
//! reasoning by Fourier–Motzkin elimination with integer tightening.
//!
//! The solver is refutation-based and sound but incomplete: `Unsat`
//! answers and implied goals are trustworthy, `Sat` means only that no
//! contradiction was found. Disjunctions (from negated goals and from
//! boolean structure) are explored by bounded case splitting.

use std::collections::{BTreeMap, BTreeSet};

use crate::entailment::sym::PureAtom;
use crate::lookup::{ms_normalize, Lookup};
use crate::syntax::ast::*;
use crate::typecheck::TypeEnv;

/// Verdict of [`pure_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PureVerdict {
    /// A contradiction was derived.
    Unsat,
    /// No contradiction was found (not a satisfiability guarantee).
    Sat,
}

/// A literal the solver can assert directly.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Lit {
    /// `e == b` for a boolean expression without case structure.
    Expr(Expr, bool),
    Contains(SpecVal, Expr, bool),
    Initialized(Expr, bool),
}

/// Alternatives, each a conjunction of literals.
type Alts = Vec<Vec<Lit>>;

/// Decompose a pure formula under a polarity into alternatives.
pub(crate) fn formula_alts(f: &Formula, pos: bool) -> Option<Alts> {
    match f {
        Formula::Pure(e) => Some(expr_alts(e, pos)),
        Formula::Contains { set, elem } => {
            Some(vec![vec![Lit::Contains(set.clone(), elem.clone(), pos)]])
        }
        Formula::Initialized(e) => Some(vec![vec![Lit::Initialized(e.clone(), pos)]]),
        Formula::Star(a, b) | Formula::And(a, b) => merge(a, b, pos, pos, pos),
        Formula::Or(a, b) => merge(a, b, pos, pos, !pos),
        Formula::Wand(a, b) => merge(a, b, !pos, pos, !pos),
        Formula::Iff(a, b) => {
            let lhs = Formula::wand((**a).clone(), (**b).clone());
            let rhs = Formula::wand((**b).clone(), (**a).clone());
            formula_alts(&Formula::and(lhs, rhs), pos)
        }
        _ => None,
    }
}

fn merge(a: &Formula, b: &Formula, pa: bool, pb: bool, conj: bool) -> Option<Alts> {
    let ca = formula_alts(a, pa)?;
    let cb = formula_alts(b, pb)?;
    Some(cross(ca, cb, conj))
}

fn cross(ca: Alts, cb: Alts, conj: bool) -> Alts {
    if conj {
        let mut out = Vec::new();
        for x in &ca {
            for y in &cb {
                let mut c = x.clone();
                c.extend(y.clone());
                out.push(c);
            }
        }
        out
    } else {
        let mut out = ca;
        out.extend(cb);
        out
    }
}

/// Decompose a boolean expression under a polarity.
fn expr_alts(e: &Expr, pos: bool) -> Alts {
    match e {
        Expr::Op(Op::Not, args) => expr_alts(&args[0], !pos),
        Expr::Op(Op::And, args) => cross(expr_alts(&args[0], pos), expr_alts(&args[1], pos), pos),
        Expr::Op(Op::Or, args) => cross(expr_alts(&args[0], pos), expr_alts(&args[1], pos), !pos),
        other => vec![vec![Lit::Expr(other.clone(), pos)]],
    }
}

type TermId = usize;

/// One congruence-closure term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    Null,
    Int(i64),
    Bool(bool),
    Obj(ObjId),
    Var(Ident),
    Nil,
    Split(TermId),
    /// Flattened sum/union of leaf terms (sorted): `+` is associative
    /// and commutative in both its integer and multiset reading.
    Bag(Vec<TermId>),
    Op(Op, Vec<TermId>),
}

/// `sum(coeff * term) + k >= 0`.
#[derive(Debug, Clone, PartialEq)]
struct LinExpr {
    coeffs: BTreeMap<TermId, i128>,
    k: i128,
}

impl LinExpr {
    fn constant(k: i128) -> LinExpr {
        LinExpr {
            coeffs: BTreeMap::new(),
            k,
        }
    }
    fn term(t: TermId) -> LinExpr {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(t, 1);
        LinExpr { coeffs, k: 0 }
    }
    fn scale(mut self, c: i128) -> LinExpr {
        for v in self.coeffs.values_mut() {
            *v *= c;
        }
        self.k *= c;
        self
    }
    fn add(mut self, other: &LinExpr) -> LinExpr {
        for (t, c) in &other.coeffs {
            *self.coeffs.entry(*t).or_insert(0) += c;
        }
        self.coeffs.retain(|_, c| *c != 0);
        self.k += other.k;
        self
    }
    /// Divide through by the gcd of the coefficients, rounding the
    /// constant toward minus infinity (integer tightening).
    fn tighten(mut self) -> LinExpr {
        let mut g: i128 = 0;
        for c in self.coeffs.values() {
            g = gcd(g, c.abs());
        }
        if g > 1 {
            for c in self.coeffs.values_mut() {
                *c /= g;
            }
            self.k = self.k.div_euclid(g);
        }
        self
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

const MAX_SPLIT_DEPTH: u32 = 6;

/// The solver context: asserted literals with closure state.
#[derive(Debug, Clone, Default)]
pub struct PureCtx {
    nodes: Vec<Node>,
    ids: BTreeMap<Node, TermId>,
    parent: Vec<TermId>,
    /// Membership facts `(bag, elem, polarity)`.
    members: Vec<(TermId, TermId, bool)>,
    /// Initialization facts `(term, polarity)`.
    inits: Vec<(TermId, bool)>,
    /// Disequalities between terms.
    diseqs: Vec<(TermId, TermId)>,
    /// Linear atoms `sum(coeff * term) + k >= 0` over int terms.
    ineqs: Vec<LinExpr>,
    /// Opaque boolean terms asserted with a polarity.
    bools: Vec<(TermId, bool)>,
    /// Deferred disjunctions, explored by case splitting.
    pending: Vec<Alts>,
    /// Variables known to be lockset-typed (treated as sub-bags).
    bag_vars: Vec<Ident>,
    /// Variables known to be int-typed (eligible for trichotomy splits).
    int_vars: BTreeSet<Ident>,
    unsat: bool,
}

impl PureCtx {
    /// A fresh context over a typing environment: lockset-typed
    /// variables are treated as sub-bags in membership reasoning.
    pub fn new(env: &TypeEnv) -> PureCtx {
        let mut ctx = PureCtx::default();
        for (x, t) in &env.vars {
            if *t == TypeExpr::Lockset {
                ctx.bag_vars.push(x.clone());
            }
            if *t == TypeExpr::Int {
                ctx.int_vars.insert(x.clone());
            }
        }
        ctx
    }

    pub fn assert_atom(&mut self, a: &PureAtom) {
        match a {
            PureAtom::Bool(e) => self.assert_alts(expr_alts(e, true)),
            PureAtom::Contains { set, elem } => {
                let l = Lit::Contains(set.clone(), elem.clone(), true);
                self.assert_lit(&l);
            }
            PureAtom::NotContains { set, elem } => {
                let l = Lit::Contains(set.clone(), elem.clone(), false);
                self.assert_lit(&l);
            }
            PureAtom::Initialized(e) => self.assert_lit(&Lit::Initialized(e.clone(), true)),
        }
    }

    pub(crate) fn assert_alts(&mut self, alts: Alts) {
        if alts.len() == 1 {
            for l in &alts[0] {
                self.assert_lit(l);
            }
        } else {
            self.pending.push(alts);
        }
    }

    fn assert_lit(&mut self, l: &Lit) {
        match l {
            Lit::Expr(e, b) => self.assert_expr(e, *b),
            Lit::Contains(s, e, b) => {
                let bag = self.term_of_specval(s);
                let elem = self.term_of_expr(e);
                self.members.push((bag, elem, *b));
            }
            Lit::Initialized(e, b) => {
                let t = self.term_of_expr(e);
                self.inits.push((t, *b));
            }
        }
    }

    fn assert_expr(&mut self, e: &Expr, pos: bool) {
        match e {
            Expr::Op(Op::Not, args) => self.assert_expr(&args[0], !pos),
            Expr::Op(Op::And | Op::Or, _) => self.assert_alts(expr_alts(e, pos)),
            Expr::Op(Op::Eq, args) => {
                let a = self.term_of_expr(&args[0]);
                let b = self.term_of_expr(&args[1]);
                if pos {
                    self.union(a, b);
                    // Feed int equalities to the arithmetic layer too.
                    let la = self.linexpr(&args[0]);
                    let lb = self.linexpr(&args[1]);
                    self.ineqs.push(la.clone().add(&lb.clone().scale(-1)));
                    self.ineqs.push(lb.add(&la.scale(-1)));
                } else {
                    self.diseqs.push((a, b));
                    // Integer disequality is a trichotomy: split it so
                    // the arithmetic layer can use it.
                    if self.is_arith(&args[0]) || self.is_arith(&args[1]) {
                        self.pending.push(vec![
                            vec![Lit::Expr(
                                Expr::Op(Op::Lt, vec![args[0].clone(), args[1].clone()]),
                                true,
                            )],
                            vec![Lit::Expr(
                                Expr::Op(Op::Gt, vec![args[0].clone(), args[1].clone()]),
                                true,
                            )],
                        ]);
                    }
                }
            }
            Expr::Op(op @ (Op::Lt | Op::Le | Op::Gt | Op::Ge), args) => {
                let a = self.linexpr(&args[0]);
                let b = self.linexpr(&args[1]);
                // Normalize to `lhs >= 0`; negations tighten by one
                // (`!(a < b)` is `a >= b`, `!(a <= b)` is `a >= b + 1`).
                let ineq = match (op, pos) {
                    (Op::Lt, true) | (Op::Ge, false) => {
                        b.add(&a.scale(-1)).add(&LinExpr::constant(-1))
                    }
                    (Op::Le, true) | (Op::Gt, false) => b.add(&a.scale(-1)),
                    (Op::Gt, true) | (Op::Le, false) => {
                        a.add(&b.scale(-1)).add(&LinExpr::constant(-1))
                    }
                    (Op::Ge, true) | (Op::Lt, false) => a.add(&b.scale(-1)),
                    _ => unreachable!(),
                };
                self.ineqs.push(ineq.tighten());
            }
            Expr::Spec(SpecVal::Bool(b)) => {
                if *b != pos {
                    self.unsat = true;
                }
            }
            other => {
                let t = self.term_of_expr(other);
                self.bools.push((t, pos));
            }
        }
    }

    /// Whether an expression is visibly integer-valued: an int literal,
    /// an int-typed variable, or arithmetic over expressions.
    fn is_arith(&self, e: &Expr) -> bool {
        match e {
            Expr::Spec(SpecVal::Int(_)) => true,
            Expr::Spec(SpecVal::Var(x)) | Expr::Var(x) => self.int_vars.contains(x),
            Expr::Op(Op::Sub | Op::Mul, _) => true,
            Expr::Op(Op::Add, args) => args.iter().any(|a| self.is_arith(a)),
            _ => false,
        }
    }

    // ----- terms and congruence --------------------------------------

    fn intern(&mut self, node: Node) -> TermId {
        if let Some(id) = self.ids.get(&node) {
            return *id;
        }
        let id = self.nodes.len();
        self.nodes.push(node.clone());
        self.parent.push(id);
        self.ids.insert(node, id);
        id
    }

    fn find(&self, mut t: TermId) -> TermId {
        while self.parent[t] != t {
            t = self.parent[t];
        }
        t
    }

    fn union(&mut self, a: TermId, b: TermId) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        // Prefer constants as representatives so conflicts surface.
        let (keep, drop) = if self.is_const(ra) { (ra, rb) } else { (rb, ra) };
        if self.is_const(keep) && self.is_const(drop) && self.nodes[keep] != self.nodes[drop] {
            self.unsat = true;
        }
        self.parent[drop] = keep;
    }

    fn is_const(&self, t: TermId) -> bool {
        matches!(
            self.nodes[t],
            Node::Int(_) | Node::Bool(_) | Node::Null | Node::Obj(_) | Node::Nil
        )
    }

    fn term_of_specval(&mut self, v: &SpecVal) -> TermId {
        match v {
            SpecVal::Null => self.intern(Node::Null),
            SpecVal::Int(n) => self.intern(Node::Int(*n)),
            SpecVal::Bool(b) => self.intern(Node::Bool(*b)),
            SpecVal::Obj(o) => self.intern(Node::Obj(*o)),
            SpecVal::Var(x) => self.intern(Node::Var(x.clone())),
            SpecVal::Split(inner) => {
                let t = self.term_of_specval(inner);
                self.intern(Node::Split(t))
            }
            SpecVal::Nil | SpecVal::Union(..) => {
                let atoms = ms_normalize(v);
                let mut leaves: Vec<TermId> =
                    atoms.iter().map(|a| self.term_of_specval(a)).collect();
                leaves.sort_unstable();
                match leaves.len() {
                    0 => self.intern(Node::Nil),
                    1 => leaves[0],
                    _ => self.intern(Node::Bag(leaves)),
                }
            }
        }
    }

    fn term_of_expr(&mut self, e: &Expr) -> TermId {
        match e {
            Expr::Spec(v) => self.term_of_specval(v),
            Expr::Var(x) => self.intern(Node::Var(x.clone())),
            Expr::Op(Op::Add, _) => {
                // `+` is AC with unit `nil` in both readings; flatten.
                let mut leaves = Vec::new();
                self.add_leaves(e, &mut leaves);
                leaves.sort_unstable();
                // A sum of integer constants is in the arithmetic
                // reading; fold it (locksets never contain integers).
                let ints: Option<i64> = leaves
                    .iter()
                    .map(|&t| match self.nodes[t] {
                        Node::Int(n) => Some(n),
                        _ => None,
                    })
                    .sum();
                if let (Some(sum), true) = (ints, !leaves.is_empty()) {
                    return self.intern(Node::Int(sum));
                }
                match leaves.len() {
                    0 => self.intern(Node::Nil),
                    1 => leaves[0],
                    _ => self.intern(Node::Bag(leaves)),
                }
            }
            Expr::Op(op, args) => {
                let ts: Vec<TermId> = args.iter().map(|a| self.term_of_expr(a)).collect();
                self.intern(Node::Op(op.clone(), ts))
            }
        }
    }

    fn add_leaves(&mut self, e: &Expr, out: &mut Vec<TermId>) {
        match e {
            Expr::Op(Op::Add, args) => {
                self.add_leaves(&args[0], out);
                self.add_leaves(&args[1], out);
            }
            Expr::Spec(v @ (SpecVal::Union(..) | SpecVal::Nil)) => {
                for a in ms_normalize(v) {
                    let t = self.term_of_specval(&a);
                    out.push(t);
                }
            }
            other => {
                let t = self.term_of_expr(other);
                out.push(t);
            }
        }
    }

    // ----- linear arithmetic -----------------------------------------

    fn linexpr(&mut self, e: &Expr) -> LinExpr {
        match e {
            Expr::Spec(SpecVal::Int(n)) => LinExpr::constant(*n as i128),
            Expr::Op(Op::Add, args) => {
                let a = self.linexpr(&args[0]);
                let b = self.linexpr(&args[1]);
                a.add(&b)
            }
            Expr::Op(Op::Sub, args) => {
                let a = self.linexpr(&args[0]);
                let b = self.linexpr(&args[1]);
                a.add(&b.scale(-1))
            }
            Expr::Op(Op::Mul, args) => match (args[0].as_spec(), args[1].as_spec()) {
                (Some(SpecVal::Int(n)), _) => self.linexpr(&args[1]).scale(*n as i128),
                (_, Some(SpecVal::Int(n))) => self.linexpr(&args[0]).scale(*n as i128),
                _ => LinExpr::term(self.term_of_expr(e)),
            },
            other => LinExpr::term(self.term_of_expr(other)),
        }
    }

    // ----- saturation -------------------------------------------------

    /// Run all inference to a fixpoint, case-splitting deferred
    /// disjunctions, and report (un)satisfiability.
    pub fn check(&mut self) -> PureVerdict {
        self.check_depth(MAX_SPLIT_DEPTH)
    }

    fn check_depth(&mut self, depth: u32) -> PureVerdict {
        self.saturate();
        if self.unsat {
            return PureVerdict::Unsat;
        }
        if depth == 0 {
            return PureVerdict::Sat;
        }
        let Some(alts) = self.pending.pop() else {
            return PureVerdict::Sat;
        };
        for alt in alts {
            let mut branch = self.clone();
            for l in &alt {
                branch.assert_lit(l);
            }
            if branch.check_depth(depth - 1) == PureVerdict::Sat {
                return PureVerdict::Sat;
            }
        }
        self.unsat = true;
        PureVerdict::Unsat
    }

    fn saturate(&mut self) {
        for _round in 0..24 {
            if self.unsat {
                return;
            }
            let before = (
                self.parent.clone(),
                self.members.len(),
                self.diseqs.len(),
            );
            self.congruence_round();
            self.bag_round();
            self.bool_round();
            self.diseq_round();
            self.arith_round();
            if !self.unsat
                && (
                    self.parent.clone(),
                    self.members.len(),
                    self.diseqs.len(),
                ) == before
            {
                return;
            }
        }
    }

    /// Merge terms with congruent children.
    fn congruence_round(&mut self) {
        let n = self.nodes.len();
        let mut sigs: BTreeMap<Node, TermId> = BTreeMap::new();
        for i in 0..n {
            let sig = match &self.nodes[i] {
                Node::Split(t) => Node::Split(self.find(*t)),
                Node::Op(op, ts) => {
                    Node::Op(op.clone(), ts.iter().map(|t| self.find(*t)).collect())
                }
                Node::Bag(ts) => {
                    let mut rs: Vec<TermId> = ts.iter().map(|t| self.find(*t)).collect();
                    rs.sort_unstable();
                    Node::Bag(rs)
                }
                other => other.clone(),
            };
            if let Some(j) = sigs.get(&sig) {
                self.union(i, *j);
            } else {
                sigs.insert(sig, i);
            }
        }
    }

    /// The leaves of a bag term: object-typed leaves are elements,
    /// lockset-typed variables (and nested bags) are sub-bags.
    fn bag_leaves(&self, t: TermId) -> Vec<TermId> {
        match &self.nodes[self.find(t)] {
            Node::Bag(ts) => ts.iter().map(|x| self.find(*x)).collect(),
            Node::Nil => Vec::new(),
            _ => vec![self.find(t)],
        }
    }

    fn is_subbag(&self, t: TermId) -> bool {
        match &self.nodes[t] {
            Node::Var(x) => self.bag_vars.contains(x),
            Node::Nil | Node::Bag(_) => true,
            _ => false,
        }
    }

    fn has_member(&self, bag: TermId, elem: TermId, pos: bool) -> bool {
        let (br, er) = (self.find(bag), self.find(elem));
        self.members
            .iter()
            .any(|(b, e, p)| *p == pos && self.find(*b) == br && self.find(*e) == er)
    }

    fn bag_round(&mut self) {
        let members = self.members.clone();
        for (bag, elem, pos) in members {
            let er = self.find(elem);
            let leaves = self.bag_leaves(bag);
            if pos {
                // The element is in some leaf: refute leaves where
                // possible; a unique survivor yields new knowledge.
                let mut open: Vec<TermId> = Vec::new();
                for l in &leaves {
                    let refuted = if self.is_subbag(*l) {
                        self.has_member(*l, elem, false)
                    } else {
                        self.known_diseq(er, *l)
                    };
                    if !refuted {
                        open.push(*l);
                    }
                }
                if open.is_empty() {
                    self.unsat = true;
                    return;
                }
                if open.len() == 1 {
                    let l = open[0];
                    if self.is_subbag(l) {
                        if l != self.find(bag) && !self.has_member(l, elem, true) {
                            self.members.push((l, elem, true));
                        }
                    } else {
                        self.union(er, l);
                    }
                }
            } else {
                // The element is in no leaf: push the negation down.
                for l in leaves {
                    if self.is_subbag(l) {
                        if self.has_member(l, elem, true) {
                            self.unsat = true;
                            return;
                        }
                        if l != self.find(bag) && !self.has_member(l, elem, false) {
                            self.members.push((l, elem, false));
                        }
                    } else if er == self.find(l) {
                        self.unsat = true;
                        return;
                    } else {
                        self.diseqs.push((er, l));
                    }
                }
            }
        }
        // Positive and negative membership of congruent elements in
        // congruent bags clash.
        for (b1, e1, p1) in &self.members {
            if *p1 && self.has_member(*b1, *e1, false) {
                self.unsat = true;
                return;
            }
        }
    }

    fn known_diseq(&self, a: TermId, b: TermId) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.is_const(ra) && self.is_const(rb) {
            return true; // distinct constants
        }
        self.diseqs.iter().any(|(x, y)| {
            let (rx, ry) = (self.find(*x), self.find(*y));
            (rx == ra && ry == rb) || (rx == rb && ry == ra)
        })
    }

    fn bool_round(&mut self) {
        for (t, pos) in &self.bools {
            let r = self.find(*t);
            if let Node::Bool(b) = self.nodes[r] {
                if b != *pos {
                    self.unsat = true;
                    return;
                }
            }
            for (u, q) in &self.bools {
                if *q != *pos && self.find(*u) == r {
                    self.unsat = true;
                    return;
                }
            }
        }
        for (t, pos) in &self.inits {
            for (u, q) in &self.inits {
                if *q != *pos && self.find(*u) == self.find(*t) {
                    self.unsat = true;
                    return;
                }
            }
        }
    }

    fn diseq_round(&mut self) {
        for (a, b) in self.diseqs.clone() {
            if self.find(a) == self.find(b) {
                self.unsat = true;
                return;
            }
        }
    }

    /// Fourier–Motzkin elimination over the asserted inequalities, with
    /// representatives substituted for congruent terms.
    fn arith_round(&mut self) {
        let mut sys: Vec<LinExpr> = Vec::new();
        for ineq in &self.ineqs {
            let mut coeffs: BTreeMap<TermId, i128> = BTreeMap::new();
            let mut k = ineq.k;
            for (t, c) in &ineq.coeffs {
                let r = self.find(*t);
                if let Node::Int(n) = self.nodes[r] {
                    k += c * (n as i128);
                } else {
                    *coeffs.entry(r).or_insert(0) += c;
                }
            }
            coeffs.retain(|_, c| *c != 0);
            sys.push(LinExpr { coeffs, k });
        }
        let mut vars: Vec<TermId> = sys.iter().flat_map(|l| l.coeffs.keys().copied()).collect();
        vars.sort_unstable();
        vars.dedup();
        if vars.len() > 12 || sys.len() > 64 {
            return; // stay cheap; incompleteness is acceptable
        }
        for v in vars {
            let mut next: Vec<LinExpr> = Vec::new();
            let (mut lower, mut upper): (Vec<LinExpr>, Vec<LinExpr>) = (Vec::new(), Vec::new());
            for l in sys {
                match l.coeffs.get(&v).copied().unwrap_or(0) {
                    0 => next.push(l),
                    c if c > 0 => lower.push(l),
                    _ => upper.push(l),
                }
            }
            for lo in &lower {
                for hi in &upper {
                    let cl = lo.coeffs[&v];
                    let ch = -hi.coeffs[&v];
                    let combined = lo.clone().scale(ch).add(&hi.clone().scale(cl)).tighten();
                    if next.len() < 256 && !next.contains(&combined) {
                        next.push(combined);
                    }
                }
            }
            sys = next;
        }
        for l in &sys {
            if l.coeffs.is_empty() && l.k < 0 {
                self.unsat = true;
                return;
            }
        }
    }
}

/// Check a conjunction of pure atoms for consistency.
pub fn pure_solve(env: &TypeEnv, atoms: &[PureAtom]) -> PureVerdict {
    let mut ctx = PureCtx::new(env);
    for a in atoms {
        ctx.assert_atom(a);
    }
    ctx.check()
}

/// Whether the atoms entail a pure goal formula: sound, incomplete.
/// Decided by refuting `atoms && !goal`.
pub fn pure_implies(_lk: &Lookup, env: &TypeEnv, atoms: &[PureAtom], goal: &Formula) -> bool {
    let Some(neg) = formula_alts(goal, false) else {
        return false;
    };
    let mut ctx = PureCtx::new(env);
    for a in atoms {
        ctx.assert_atom(a);
    }
    ctx.assert_alts(neg);
    ctx.check() == PureVerdict::Unsat
}

/// Whether the atoms refute a pure goal (entail its negation).
pub fn pure_refutes(_lk: &Lookup, env: &TypeEnv, atoms: &[PureAtom], goal: &Formula) -> bool {
    let Some(pos) = formula_alts(goal, true) else {
        return false;
    };
    let mut ctx = PureCtx::new(env);
    for a in atoms {
        ctx.assert_atom(a);
    }
    ctx.assert_alts(pos);
    ctx.check() == PureVerdict::Unsat
}
