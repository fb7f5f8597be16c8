//! The entailment prover: subtracts a consequent in symbolic normal form
//! from an antecedent state, tracking permission splits, predicate
//! folding and unfolding, wand introduction and elimination, and class
//! axiom rewriting. Sound and deliberately incomplete: `Proved` is
//! trustworthy, `Unknown` carries the first missing piece.

use std::cell::Cell;
use std::collections::BTreeSet;

use crate::entailment::solve::{pure_implies, pure_refutes, pure_solve, PureVerdict};
use crate::entailment::sym::{
    bags_equal, is_pure_formula, normalize_cases, supply_for, NormCtx, PermBase, PureAtom,
    SpatialAtom, SymFormula, SymPerm,
};
use crate::lookup::{specval_equiv, Lookup};
use crate::syntax::ast::*;
use crate::syntax::{FreshSupply, Subst};
use crate::typecheck::TypeEnv;

/// Outcome of an entailment query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Proved,
    /// Not established; the string names what was missing.
    Unknown(String),
}

impl Verdict {
    pub fn is_proved(&self) -> bool {
        matches!(self, Verdict::Proved)
    }
}

/// Context for proof search.
pub struct ProofCtx<'a> {
    pub lk: &'a Lookup<'a>,
    pub env: &'a TypeEnv,
    /// The `this` of the judgment, scoping predicate bodies.
    pub receiver: Option<SpecVal>,
    /// Remaining proof steps before giving up.
    budget: Cell<u64>,
    /// Bound on nested predicate openings and foldings.
    pub unfold_depth: u32,
    /// Whether class axioms may be used (disabled when proving the
    /// axioms themselves sound).
    pub use_axioms: bool,
}

const DEFAULT_BUDGET: u64 = 50_000;

impl<'a> ProofCtx<'a> {
    pub fn new(lk: &'a Lookup<'a>, env: &'a TypeEnv) -> ProofCtx<'a> {
        ProofCtx {
            lk,
            env,
            receiver: None,
            budget: Cell::new(DEFAULT_BUDGET),
            unfold_depth: 8,
            use_axioms: true,
        }
    }

    pub fn with_axioms(mut self, use_axioms: bool) -> ProofCtx<'a> {
        self.use_axioms = use_axioms;
        self
    }

    pub fn with_receiver(mut self, recv: Option<SpecVal>) -> ProofCtx<'a> {
        self.receiver = recv;
        self
    }

    pub fn with_budget(self, budget: u64) -> ProofCtx<'a> {
        self.budget.set(budget);
        self
    }

    pub fn with_unfold_depth(mut self, depth: u32) -> ProofCtx<'a> {
        self.unfold_depth = depth;
        self
    }

    fn tick(&self) -> Result<(), String> {
        let b = self.budget.get();
        if b == 0 {
            return Err("proof budget exhausted".into());
        }
        self.budget.set(b - 1);
        Ok(())
    }
}

/// A spatial atom in the antecedent state.
#[derive(Debug, Clone)]
struct Tracked {
    atom: SpatialAtom,
    /// Hypothesis nesting level: 0 for original antecedent atoms,
    /// higher for atoms assumed during wand introduction.
    level: u32,
}

/// The antecedent during subtraction.
#[derive(Debug, Clone, Default)]
struct State {
    binders: Vec<(Ident, TypeExpr)>,
    atoms: Vec<Tracked>,
    pure: Vec<PureAtom>,
    lockset: Option<SpecVal>,
    level: u32,
}

impl State {
    fn from_sym(sf: &SymFormula) -> State {
        State {
            binders: sf.binders.clone(),
            atoms: sf
                .spatial
                .iter()
                .map(|a| Tracked {
                    atom: a.clone(),
                    level: 0,
                })
                .collect(),
            pure: sf.pure.clone(),
            lockset: sf.lockset.clone(),
            level: 0,
        }
    }

    fn push(&mut self, atom: SpatialAtom) {
        self.atoms.push(Tracked {
            atom,
            level: self.level,
        });
    }

    fn push_pure(&mut self, p: PureAtom) {
        if !self.pure.contains(&p) {
            self.pure.push(p);
        }
    }

    /// The frame: surviving atoms below the hypothesis level.
    fn frame(&self) -> SymFormula {
        SymFormula {
            binders: self.binders.clone(),
            spatial: self
                .atoms
                .iter()
                .filter(|t| t.level == 0)
                .map(|t| t.atom.clone())
                .collect(),
            pure: self.pure.clone(),
            lockset: self.lockset.clone(),
        }
    }

    fn env(&self, base: &TypeEnv) -> TypeEnv {
        let mut env = base.clone();
        for (x, t) in &self.binders {
            env.bind(x, t.clone());
        }
        env
    }
}

/// A successful subtraction: what is left over, and how goal
/// existentials were instantiated.
#[derive(Debug, Clone)]
pub struct Subtraction {
    pub frame: SymFormula,
    pub inst: Subst,
}

// --------------------------------------------------------------------
// Entry points
// --------------------------------------------------------------------

/// Does `ante` entail `cons` (with optional hints)?
pub fn entails(ctx: &ProofCtx, ante: &Formula, cons: &Formula, hints: &[Hint]) -> Verdict {
    match entails_inner(ctx, ante, cons, hints) {
        Ok(()) => Verdict::Proved,
        Err(msg) => Verdict::Unknown(msg),
    }
}

fn entails_inner(
    ctx: &ProofCtx,
    ante: &Formula,
    cons: &Formula,
    hints: &[Hint],
) -> Result<(), String> {
    let mut supply = supply_for(&[ante, cons]);
    let ante = apply_unfold_hints(ctx, ante, hints, &mut supply)?;
    let cons = apply_witness_hints(cons, hints, &mut supply);
    let nctx = NormCtx {
        lk: ctx.lk,
        env: ctx.env,
    };
    let ante_cases = normalize_cases(&nctx, &ante, &mut supply)?;
    for case in &ante_cases {
        let mut state = State::from_sym(case);
        apply_fold_hints(ctx, &mut state, hints, &mut supply)?;
        apply_axiom_hints(ctx, &mut state, hints, &mut supply)?;
        saturate(ctx, &mut state);
        let env = state.env(ctx.env);
        if pure_solve(&env, &state.pure) == PureVerdict::Unsat {
            continue; // inconsistent case: anything follows
        }
        // A pure consequent goes straight to the solver, which handles
        // disjunction and negation better than case subtraction.
        if is_pure_formula(&cons) && pure_implies(ctx.lk, &env, &state.pure, &cons) {
            continue;
        }
        let cons_cases = normalize_cases(&nctx, &cons, &mut supply)?;
        let mut last_err = String::from("no consequent case provable");
        let mut ok = false;
        for goal in &cons_cases {
            match subtract(ctx, &state, goal, ctx.unfold_depth, &mut supply) {
                Ok(_) => {
                    ok = true;
                    break;
                }
                Err(e) => last_err = e,
            }
        }
        if !ok {
            return Err(last_err);
        }
    }
    Ok(())
}

/// Subtract `need` from `ante` and return the frame. The antecedent and
/// the need must each normalize deterministically (one case; apply
/// hints to resolve disjunctions first).
pub fn frame_subtract(
    ctx: &ProofCtx,
    ante: &Formula,
    need: &Formula,
    hints: &[Hint],
) -> Result<Subtraction, String> {
    let mut supply = supply_for(&[ante, need]);
    let ante = apply_unfold_hints(ctx, ante, hints, &mut supply)?;
    let mut need = apply_witness_hints(need, hints, &mut supply);
    // Peel the goal's outermost existentials under stable fresh names
    // (normalization renames binders), so their instantiations can be
    // reported back under the caller's names.
    let mut outer: Vec<(Ident, Ident, TypeExpr)> = Vec::new();
    loop {
        match need {
            Formula::Quant {
                kind: QuantKind::Ex,
                var,
                ty,
                body,
            } => {
                let fresh = supply.fresh();
                need = Subst::one(&var, SpecVal::Var(fresh.clone())).formula(&body, &mut supply);
                outer.push((var, fresh, ty));
            }
            other => {
                need = other;
                break;
            }
        }
    }
    let nctx = NormCtx {
        lk: ctx.lk,
        env: ctx.env,
    };
    let mut ante_cases = normalize_cases(&nctx, &ante, &mut supply)?;
    if ante_cases.len() != 1 {
        return Err(format!(
            "antecedent splits into {} cases; hints must resolve the split",
            ante_cases.len()
        ));
    }
    let mut state = State::from_sym(&ante_cases.pop().unwrap());
    apply_fold_hints(ctx, &mut state, hints, &mut supply)?;
    apply_axiom_hints(ctx, &mut state, hints, &mut supply)?;
    saturate(ctx, &mut state);
    let mut need_cases = normalize_cases(&nctx, &need, &mut supply)?;
    for case in &mut need_cases {
        for (_, fresh, ty) in &outer {
            case.binders.push((fresh.clone(), ty.clone()));
        }
    }
    let mut last_err = String::from("empty goal");
    for goal in &need_cases {
        match subtract(ctx, &state, goal, ctx.unfold_depth, &mut supply) {
            Ok(mut sub) => {
                for (orig, fresh, _) in &outer {
                    if let Some(v) = sub.inst.get(fresh).cloned() {
                        sub.inst.bind(orig, v);
                    }
                }
                return Ok(sub);
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

// --------------------------------------------------------------------
// Hints
// --------------------------------------------------------------------

fn hint_recv(e: &Expr) -> SpecVal {
    match e.as_spec() {
        Some(v) => v.clone(),
        None => match e {
            Expr::Var(x) => SpecVal::Var(x.clone()),
            _ => SpecVal::Null,
        },
    }
}

/// Rewrite hinted predicate applications in the antecedent to their
/// unfoldings (formula-level, so disjunctive bodies split the proof).
fn apply_unfold_hints(
    ctx: &ProofCtx,
    f: &Formula,
    hints: &[Hint],
    supply: &mut FreshSupply,
) -> Result<Formula, String> {
    let mut cur = f.clone();
    for h in hints {
        if let Hint::Unfold { recv, pred, at } = h {
            let rv = hint_recv(recv);
            cur = unfold_in(ctx, &cur, &rv, pred, at.as_deref(), supply)?;
        }
    }
    Ok(cur)
}

fn unfold_in(
    ctx: &ProofCtx,
    f: &Formula,
    rv: &SpecVal,
    pred: &str,
    at: Option<&str>,
    supply: &mut FreshSupply,
) -> Result<Formula, String> {
    match f {
        Formula::PredApp {
            recv,
            name,
            at: pat,
            args,
        } if name == pred
            && specval_equiv(recv, rv)
            && (at.is_none() || pat.as_deref() == at) =>
        {
            // An unqualified hint unfolds at the receiver's static type.
            let static_class = match recv {
                SpecVal::Var(x) => match ctx.env.vars.get(x) {
                    Some(TypeExpr::Ref(c, _)) => Some(c.clone()),
                    _ => None,
                },
                _ => None,
            };
            let class = match pat.clone().or_else(|| at.map(str::to_string)).or(static_class) {
                Some(c) => c,
                None => {
                    return Err(format!(
                        "unfolding `{pred}` needs a class qualifier (`{pred}@C`)"
                    ))
                }
            };
            open_pred(ctx.lk, recv, name, &class, args, supply)
        }
        Formula::Star(a, b) => Ok(Formula::star(
            unfold_in(ctx, a, rv, pred, at, supply)?,
            unfold_in(ctx, b, rv, pred, at, supply)?,
        )),
        Formula::And(a, b) => Ok(Formula::and(
            unfold_in(ctx, a, rv, pred, at, supply)?,
            unfold_in(ctx, b, rv, pred, at, supply)?,
        )),
        Formula::Or(a, b) => Ok(Formula::or(
            unfold_in(ctx, a, rv, pred, at, supply)?,
            unfold_in(ctx, b, rv, pred, at, supply)?,
        )),
        Formula::Quant {
            kind,
            var,
            ty,
            body,
        } => Ok(Formula::Quant {
            kind: *kind,
            var: var.clone(),
            ty: ty.clone(),
            body: Box::new(unfold_in(ctx, body, rv, pred, at, supply)?),
        }),
        other => Ok(other.clone()),
    }
}

/// Instantiate hinted witnesses for outermost existentials of the goal.
fn apply_witness_hints(f: &Formula, hints: &[Hint], supply: &mut FreshSupply) -> Formula {
    let mut cur = f.clone();
    for h in hints {
        if let Hint::Witness { var, val } = h {
            cur = instantiate_ex(&cur, var, val, supply);
        }
    }
    cur
}

fn instantiate_ex(f: &Formula, var: &str, val: &SpecVal, supply: &mut FreshSupply) -> Formula {
    match f {
        Formula::Quant {
            kind: QuantKind::Ex,
            var: v,
            body,
            ..
        } if v == var => Subst::one(var, val.clone()).formula(body, supply),
        Formula::Quant {
            kind,
            var: v,
            ty,
            body,
        } => Formula::Quant {
            kind: *kind,
            var: v.clone(),
            ty: ty.clone(),
            body: Box::new(instantiate_ex(body, var, val, supply)),
        },
        Formula::Star(a, b) => Formula::star(
            instantiate_ex(a, var, val, supply),
            instantiate_ex(b, var, val, supply),
        ),
        other => other.clone(),
    }
}

/// Fold hinted predicates out of the state eagerly.
fn apply_fold_hints(
    ctx: &ProofCtx,
    state: &mut State,
    hints: &[Hint],
    supply: &mut FreshSupply,
) -> Result<(), String> {
    for h in hints {
        if let Hint::Fold {
            recv,
            pred,
            at,
            args,
        } = h
        {
            let rv = hint_recv(recv);
            let class = match at {
                Some(c) => c.clone(),
                None => class_of_recv(ctx, state, &rv)
                    .ok_or_else(|| format!("folding `{pred}` needs a known class for `{rv}`"))?,
            };
            let atom = SpatialAtom::Pred {
                recv: rv.clone(),
                name: pred.clone(),
                at: at.clone(),
                args: args.clone(),
            };
            fold_pred(ctx, state, &rv, pred, &class, args, ctx.unfold_depth, supply)?;
            // An unqualified fold is justified by the known dynamic type.
            state.push(atom);
        }
    }
    Ok(())
}

fn apply_axiom_hints(
    ctx: &ProofCtx,
    state: &mut State,
    hints: &[Hint],
    supply: &mut FreshSupply,
) -> Result<(), String> {
    for h in hints {
        if let Hint::Axiom(name) = h {
            let mut applied = false;
            for ax in all_axioms(ctx.lk) {
                if ax.name.as_deref() == Some(name.as_str())
                    && try_axiom(ctx, state, &ax, None, ctx.unfold_depth, supply)?
                {
                    applied = true;
                    break;
                }
            }
            if !applied {
                return Err(format!("axiom `{name}` did not apply"));
            }
        }
    }
    Ok(())
}

// --------------------------------------------------------------------
// Open / close
// --------------------------------------------------------------------

/// The unfolding of `recv.pred@class<args>`: the locally contributed
/// body starred with the predicate at the direct superclass, missing
/// trailing parameters bound existentially.
pub fn open_pred(
    lk: &Lookup,
    recv: &SpecVal,
    pred: &str,
    class: &str,
    args: &[SpecVal],
    supply: &mut FreshSupply,
) -> Result<Formula, String> {
    let rp = lk
        .plkup(pred, &TypeExpr::simple(class))
        .map_err(|e| e.to_string())?;
    if args.len() > rp.params.len() {
        return Err(format!(
            "`{pred}@{class}` takes {} parameters, got {}",
            rp.params.len(),
            args.len()
        ));
    }
    let mut sub = Subst::one("this", recv.clone());
    let mut ex_binders: Vec<(Ident, TypeExpr)> = Vec::new();
    for (i, (ty, param)) in rp.params.iter().enumerate() {
        let val = match args.get(i) {
            Some(v) => v.clone(),
            None => {
                let x = supply.fresh();
                ex_binders.push((x.clone(), ty.clone()));
                SpecVal::Var(x)
            }
        };
        sub.bind(param, val);
    }
    let mut body = sub.formula(&rp.body, supply);
    if let Some(ext) = &rp.ext {
        let Some(sup_name) = ext.ref_name() else {
            return Err(format!("superclass of `{class}` is not a reference type"));
        };
        let sup_params = lk
            .ptype(pred, ext)
            .map_err(|e| e.to_string())?
            .len();
        let sup_args: Vec<SpecVal> = rp.params[..sup_params]
            .iter()
            .map(|(_, p)| sub.get(p).cloned().unwrap_or(SpecVal::Null))
            .collect();
        body = Formula::star(
            body,
            Formula::PredApp {
                recv: recv.clone(),
                name: pred.to_string(),
                at: Some(sup_name.to_string()),
                args: sup_args,
            },
        );
    }
    for (x, t) in ex_binders.into_iter().rev() {
        body = Formula::ex(&x, t, body);
    }
    Ok(body)
}

/// Whether the prover may look inside `recv.pred` here: public
/// predicates always, `init` and the resource invariant `inv` always,
/// otherwise only at the receiver the judgment is scoped to.
fn scope_allows(ctx: &ProofCtx, recv: &SpecVal, public: bool, pred: &str) -> bool {
    public
        || pred == "init"
        || pred == "inv"
        || ctx
            .receiver
            .as_ref()
            .is_some_and(|r| specval_equiv(r, recv))
}

/// Fold `recv.pred@class<args>` by subtracting its unfolding from the
/// state. On success the constituents are consumed (the caller pushes
/// the folded atom).
fn fold_pred(
    ctx: &ProofCtx,
    state: &mut State,
    recv: &SpecVal,
    pred: &str,
    class: &str,
    args: &[SpecVal],
    depth: u32,
    supply: &mut FreshSupply,
) -> Result<(), String> {
    ctx.tick()?;
    if depth == 0 {
        return Err(format!("unfold depth exhausted folding `{pred}@{class}`"));
    }
    let rp = ctx
        .lk
        .plkup(pred, &TypeExpr::simple(class))
        .map_err(|e| e.to_string())?;
    if !scope_allows(ctx, recv, rp.public, pred) {
        return Err(format!("`{pred}@{class}` is not foldable in this scope"));
    }
    let body = open_pred(ctx.lk, recv, pred, class, args, supply)?;
    let env = state.env(ctx.env);
    let nctx = NormCtx { lk: ctx.lk, env: &env };
    let cases = normalize_cases(&nctx, &body, supply)?;
    let mut last_err = String::from("predicate body is unsatisfiable");
    for goal in &cases {
        match subtract(ctx, state, goal, depth - 1, supply) {
            Ok(sub) => {
                *state = state_from_frame(&sub.frame, state.level);
                return Ok(());
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn state_from_frame(frame: &SymFormula, level: u32) -> State {
    let mut s = State::from_sym(frame);
    s.level = level;
    s
}

// --------------------------------------------------------------------
// Saturation
// --------------------------------------------------------------------

/// Derive duplicable consequences of the spatial state: cells are
/// non-null and single-valued, permissions to one cell sum to at most
/// `1`, `fresh` witnesses are unique, guarded wands whose guard is
/// decided are promoted or dropped.
fn saturate(ctx: &ProofCtx, state: &mut State) {
    for _ in 0..4 {
        let mut changed = false;

        // Cell facts.
        let cells: Vec<(Expr, Ident, SymPerm, Expr)> = state
            .atoms
            .iter()
            .filter_map(|t| match &t.atom {
                SpatialAtom::PointsTo {
                    target,
                    field,
                    perm,
                    value,
                } => Some((target.clone(), field.clone(), perm.clone(), value.clone())),
                _ => None,
            })
            .collect();
        for (t, _, _, _) in &cells {
            let p = PureAtom::Bool(Expr::neq(t.clone(), Expr::Spec(SpecVal::Null)));
            if !state.pure.contains(&p) {
                state.push_pure(p);
                changed = true;
            }
        }
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                let (t1, f1, p1, v1) = &cells[i];
                let (t2, f2, p2, v2) = &cells[j];
                if f1 == f2 && t1 == t2 {
                    if v1 != v2 {
                        let p = PureAtom::Bool(Expr::eq(v1.clone(), v2.clone()));
                        if !state.pure.contains(&p) {
                            state.push_pure(p);
                            changed = true;
                        }
                    }
                    if perm_sum_exceeds_one(p1, p2) {
                        state.push_pure(PureAtom::Bool(Expr::Spec(SpecVal::Bool(false))));
                    }
                }
            }
        }

        // Duplicated `fresh` witnesses are contradictory.
        let fresh: Vec<Expr> = state
            .atoms
            .iter()
            .filter_map(|t| match &t.atom {
                SpatialAtom::Fresh(e) => Some(e.clone()),
                _ => None,
            })
            .collect();
        for i in 0..fresh.len() {
            for j in i + 1..fresh.len() {
                if fresh[i] == fresh[j] {
                    state.push_pure(PureAtom::Bool(Expr::Spec(SpecVal::Bool(false))));
                }
            }
        }

        // Promote or drop guarded wands whose guard is decided.
        let env = state.env(ctx.env);
        let mut idx = 0;
        while idx < state.atoms.len() {
            let decided = if let SpatialAtom::CondWand { guard, body } = &state.atoms[idx].atom {
                if pure_implies(ctx.lk, &env, &state.pure, guard) {
                    Some(Some((**body).clone()))
                } else if pure_refutes(ctx.lk, &env, &state.pure, guard) {
                    Some(None)
                } else {
                    None
                }
            } else {
                None
            };
            match decided {
                Some(Some(body)) => {
                    let level = state.atoms[idx].level;
                    state.atoms.remove(idx);
                    let nctx = NormCtx { lk: ctx.lk, env: &env };
                    let mut supply = supply_for(&[&body]);
                    if let Ok(cases) = normalize_cases(&nctx, &body, &mut supply) {
                        if cases.len() == 1 {
                            let case = &cases[0];
                            state.binders.extend(case.binders.clone());
                            for a in &case.spatial {
                                state.atoms.push(Tracked {
                                    atom: a.clone(),
                                    level,
                                });
                            }
                            for p in &case.pure {
                                state.push_pure(p.clone());
                            }
                            if state.lockset.is_none() {
                                state.lockset = case.lockset.clone();
                            }
                            changed = true;
                            continue;
                        }
                    }
                    // Re-insert opaque if the body does not normalize
                    // to a single case.
                    state.atoms.insert(
                        idx,
                        Tracked {
                            atom: SpatialAtom::Wand {
                                lhs: Box::new(Formula::Pure(Expr::Spec(SpecVal::Bool(true)))),
                                rhs: Box::new(body),
                            },
                            level,
                        },
                    );
                    idx += 1;
                }
                Some(None) => {
                    state.atoms.remove(idx);
                    changed = true;
                }
                None => idx += 1,
            }
        }

        if !changed {
            break;
        }
    }
}

fn perm_sum_exceeds_one(a: &SymPerm, b: &SymPerm) -> bool {
    // Only fractions of the full permission have a known magnitude.
    if a.base != PermBase::Full || b.base != PermBase::Full {
        return false;
    }
    let (ha, hb) = (a.halvings.min(62), b.halvings.min(62));
    let h = ha.max(hb);
    let num = (1u64 << (h - ha)) + (1u64 << (h - hb));
    num > (1u64 << h)
}

// --------------------------------------------------------------------
// Subtraction
// --------------------------------------------------------------------

struct Goal {
    exvars: BTreeSet<Ident>,
    sub: Subst,
    /// Pure proof obligations deferred to the end.
    obligations: Vec<Formula>,
}

impl Goal {
    fn unbound(&self, x: &str) -> bool {
        self.exvars.contains(x) && self.sub.get(x).is_none()
    }
}

/// Subtract one goal case from the state, producing the frame and the
/// instantiation of the goal's existentials.
fn subtract(
    ctx: &ProofCtx,
    state: &State,
    goal_case: &SymFormula,
    depth: u32,
    supply: &mut FreshSupply,
) -> Result<Subtraction, String> {
    ctx.tick()?;
    let mut st = state.clone();
    let mut goal = Goal {
        exvars: goal_case.binders.iter().map(|(x, _)| x.clone()).collect(),
        sub: Subst::new(),
        obligations: Vec::new(),
    };

    // Spatial atoms first (they determine existential witnesses), with
    // wands last (their introduction needs the residual state).
    let mut atoms: Vec<&SpatialAtom> = Vec::new();
    let mut wands: Vec<&SpatialAtom> = Vec::new();
    for a in &goal_case.spatial {
        match a {
            SpatialAtom::CondWand { .. } | SpatialAtom::Wand { .. } => wands.push(a),
            _ => atoms.push(a),
        }
    }
    for a in atoms.into_iter().chain(wands) {
        match_atom(ctx, &mut st, a, &mut goal, depth, supply)?;
    }

    // The `Lockset` slot is not duplicable: it is consumed.
    if let Some(need) = &goal_case.lockset {
        let have = st
            .lockset
            .take()
            .ok_or_else(|| "goal needs a `Lockset` atom the antecedent lacks".to_string())?;
        let env = st.env(ctx.env);
        if !unify_specval(ctx, &st, &env, &mut goal, need, &have) {
            return Err(format!("lockset mismatch: have `{have}`"));
        }
    }

    // Pure residue: bind leftover existentials by equations, then ask
    // the solver for the remaining conjunction.
    for p in &goal_case.pure {
        goal.obligations.push(p.to_formula());
    }
    bind_by_equations(&mut goal, supply);
    let env = st.env(ctx.env);
    let mut remaining: Vec<Formula> = Vec::new();
    for ob in &goal.obligations {
        let f = goal.sub.formula(ob, supply);
        if !pure_implies(ctx.lk, &env, &st.pure, &f) {
            remaining.push(f);
        }
    }
    if let Some(f) = remaining.first() {
        return Err(format!("pure obligation not established: `{f}`"));
    }
    Ok(Subtraction {
        frame: st.frame(),
        inst: goal.sub,
    })
}

/// Bind still-unbound existentials that are pinned by an equation
/// obligation `x == e` or `e == x`.
fn bind_by_equations(goal: &mut Goal, supply: &mut FreshSupply) {
    for _ in 0..goal.exvars.len().max(1) {
        let mut bound = false;
        for ob in &goal.obligations.clone() {
            let Formula::Pure(e) = goal.sub.formula(ob, supply) else {
                continue;
            };
            let Expr::Op(Op::Eq, args) = e else { continue };
            for (a, b) in [(&args[0], &args[1]), (&args[1], &args[0])] {
                if let Expr::Spec(SpecVal::Var(x)) = a {
                    if goal.unbound(x) {
                        if let Some(v) = b.as_spec() {
                            goal.sub.bind(x, v.clone());
                            bound = true;
                        } else if let Expr::Var(n) = b {
                            goal.sub.bind(x, SpecVal::Var(n.clone()));
                            bound = true;
                        }
                    }
                }
            }
        }
        if !bound {
            break;
        }
    }
}

// --------------------------------------------------------------------
// Unification helpers
// --------------------------------------------------------------------

fn prove_pure(ctx: &ProofCtx, st: &State, env: &TypeEnv, f: &Formula) -> bool {
    pure_implies(ctx.lk, env, &st.pure, f)
}

fn eq_exprs(ctx: &ProofCtx, st: &State, env: &TypeEnv, a: &Expr, b: &Expr) -> bool {
    a == b || prove_pure(ctx, st, env, &Formula::Pure(Expr::eq(a.clone(), b.clone())))
}

/// Unify a goal specification value against an antecedent one, binding
/// unbound goal existentials.
fn unify_specval(
    ctx: &ProofCtx,
    st: &State,
    env: &TypeEnv,
    goal: &mut Goal,
    need: &SpecVal,
    have: &SpecVal,
) -> bool {
    let n = goal.sub.specval(need);
    if let SpecVal::Var(x) = &n {
        if goal.unbound(x) {
            goal.sub.bind(x, have.clone());
            return true;
        }
    }
    specval_equiv(&n, have)
        || bags_equal(&n, have)
        || eq_exprs(ctx, st, env, &Expr::Spec(n), &Expr::Spec(have.clone()))
}

/// Unify a goal expression against an antecedent one; failures defer
/// to an equality obligation when requested.
fn unify_expr(
    ctx: &ProofCtx,
    st: &State,
    env: &TypeEnv,
    goal: &mut Goal,
    need: &Expr,
    have: &Expr,
) -> bool {
    let n = goal.sub.expr(need);
    if let Expr::Spec(SpecVal::Var(x)) = &n {
        if goal.unbound(x) {
            if let Some(v) = have.as_spec() {
                goal.sub.bind(x, v.clone());
                return true;
            }
            if let Expr::Var(y) = have {
                goal.sub.bind(x, SpecVal::Var(y.clone()));
                return true;
            }
        }
    }
    eq_exprs(ctx, st, env, &n, have)
}

/// Unify the goal permission against a candidate, returning how many
/// extra halvings of the candidate the goal requires (goal finer than
/// candidate), or `None` when incompatible. An unbound existential
/// base is bound to the candidate's permission.
fn unify_perm(goal: &mut Goal, need: &SymPerm, have: &SymPerm) -> Option<u32> {
    let applied = match &need.base {
        PermBase::Var(x) => {
            let base = goal.sub.get(x).cloned();
            match base {
                Some(v) => {
                    let mut p = SymPerm::from_specval(&v)?;
                    p.halvings += need.halvings;
                    p
                }
                None if goal.unbound(x) => {
                    goal.sub.bind(x, have.to_specval());
                    let mut p = have.clone();
                    p.halvings += need.halvings;
                    p
                }
                None => need.clone(),
            }
        }
        PermBase::Full => need.clone(),
    };
    if applied.base == have.base && applied.halvings >= have.halvings {
        Some(applied.halvings - have.halvings)
    } else {
        None
    }
}

// --------------------------------------------------------------------
// Atom matching
// --------------------------------------------------------------------

fn match_atom(
    ctx: &ProofCtx,
    st: &mut State,
    atom: &SpatialAtom,
    goal: &mut Goal,
    depth: u32,
    supply: &mut FreshSupply,
) -> Result<(), String> {
    ctx.tick()?;
    if try_match(ctx, st, atom, goal, depth, supply)? {
        return Ok(());
    }
    if depth > 0 {
        // Eliminate an opaque wand whose hypothesis the state covers.
        if try_modus_ponens(ctx, st, depth, supply)?
            && try_match(ctx, st, atom, goal, depth - 1, supply)?
        {
            return Ok(());
        }
        // Open an antecedent predicate and retry the full search (the
        // opened material may only help via a subsequent fold).
        if try_auto_open(ctx, st, atom, depth, supply)? {
            return match_atom(ctx, st, atom, goal, depth - 1, supply);
        }
        // Fold the goal predicate from its constituents.
        if let SpatialAtom::Pred {
            recv, name, at, args,
        } = atom
        {
            let recv = goal.sub.specval(recv);
            let args: Vec<SpecVal> = args.iter().map(|a| goal.sub.specval(a)).collect();
            let classes: Vec<Ident> = match at {
                Some(c) => vec![c.clone()],
                None => class_of_recv(ctx, st, &recv).into_iter().collect(),
            };
            for class in classes {
                let mut attempt = st.clone();
                if fold_pred(ctx, &mut attempt, &recv, name, &class, &args, depth, supply)
                    .is_ok()
                {
                    *st = attempt;
                    return Ok(());
                }
            }
            // Rewrite with a class axiom mentioning this predicate.
            for ax in all_axioms(ctx.lk) {
                if !axiom_mentions(&ax.formula, name) {
                    continue;
                }
                let mut attempt = st.clone();
                if try_axiom(ctx, &mut attempt, &ax, Some(name), depth - 1, supply)?
                    && try_match(ctx, &mut attempt, atom, goal, depth - 1, supply)?
                {
                    *st = attempt;
                    return Ok(());
                }
            }
        }
    }
    Err(format!("missing `{}`", goal.sub.formula(&atom.to_formula(), supply)))
}

/// Direct and variant matches for one goal atom. Returns `Ok(false)`
/// when no candidate fits (the caller may transform the state and
/// retry).
fn try_match(
    ctx: &ProofCtx,
    st: &mut State,
    atom: &SpatialAtom,
    goal: &mut Goal,
    depth: u32,
    supply: &mut FreshSupply,
) -> Result<bool, String> {
    ctx.tick()?;
    match atom {
        SpatialAtom::PointsTo {
            target,
            field,
            perm,
            value,
        } => {
            if match_points_to(ctx, st, target, field, perm, value, goal) {
                return Ok(true);
            }
            merge_splits(ctx, st);
            Ok(match_points_to(ctx, st, target, field, perm, value, goal))
        }
        SpatialAtom::Join { thread, perm } => {
            if match_join(ctx, st, thread, perm, goal) {
                return Ok(true);
            }
            merge_splits(ctx, st);
            Ok(match_join(ctx, st, thread, perm, goal))
        }
        SpatialAtom::Fresh(e) => {
            let env = st.env(ctx.env);
            let need = goal.sub.expr(e);
            for i in 0..st.atoms.len() {
                if let SpatialAtom::Fresh(have) = &st.atoms[i].atom {
                    if eq_exprs(ctx, st, &env, &need, &have.clone()) {
                        st.atoms.remove(i);
                        return Ok(true);
                    }
                }
            }
            Ok(false)
        }
        SpatialAtom::Pred {
            recv,
            name,
            at,
            args,
        } => match_pred(ctx, st, recv, name, at.as_deref(), args, goal, supply),
        SpatialAtom::CondWand { guard, body } => {
            let env = st.env(ctx.env);
            let g = goal.sub.formula(guard, supply);
            // A refuted guard discharges the wand for free; a proved
            // guard reduces it to its body.
            if pure_refutes(ctx.lk, &env, &st.pure, &g) {
                return Ok(true);
            }
            if prove_pure(ctx, st, &env, &g) {
                let body = goal.sub.formula(body, supply);
                let nctx = NormCtx { lk: ctx.lk, env: &env };
                let cases = normalize_cases(&nctx, &body, supply)?;
                for case in &cases {
                    if let Ok(sub) = subtract(ctx, st, case, depth, supply) {
                        *st = state_from_frame(&sub.frame, st.level);
                        return Ok(true);
                    }
                }
            }
            if match_wand_atom(ctx, st, guard, body, goal, supply) {
                return Ok(true);
            }
            intro_wand(ctx, st, guard, body, goal, depth, supply)
        }
        SpatialAtom::Wand { lhs, rhs } => {
            if match_wand_atom(ctx, st, lhs, rhs, goal, supply) {
                return Ok(true);
            }
            intro_wand(ctx, st, lhs, rhs, goal, depth, supply)
        }
    }
}

fn match_points_to(
    ctx: &ProofCtx,
    st: &mut State,
    target: &Expr,
    field: &Ident,
    perm: &SymPerm,
    value: &Expr,
    goal: &mut Goal,
) -> bool {
    let env = st.env(ctx.env);
    let need_t = goal.sub.expr(target);
    // Prefer syntactic target and value agreement; fall back on
    // provable equality.
    for pass in 0..2 {
        for i in 0..st.atoms.len() {
            let SpatialAtom::PointsTo {
                target: t,
                field: f,
                perm: p,
                value: v,
            } = st.atoms[i].atom.clone()
            else {
                continue;
            };
            if f != *field {
                continue;
            }
            let t_ok = if pass == 0 {
                t == need_t
            } else {
                eq_exprs(ctx, st, &env, &need_t, &t)
            };
            if !t_ok {
                continue;
            }
            let mut probe = Goal {
                exvars: goal.exvars.clone(),
                sub: goal.sub.clone(),
                obligations: Vec::new(),
            };
            let Some(extra) = unify_perm(&mut probe, perm, &p) else {
                continue;
            };
            if !unify_expr(ctx, st, &env, &mut probe, value, &v) {
                // Defer the value equation to the pure residue.
                probe
                    .obligations
                    .push(Formula::Pure(Expr::eq(value.clone(), v.clone())));
            }
            goal.sub = probe.sub;
            goal.obligations.extend(probe.obligations);
            let level = st.atoms[i].level;
            st.atoms.remove(i);
            // Remainder pieces of the split permission.
            for k in 1..=extra {
                st.atoms.push(Tracked {
                    atom: SpatialAtom::PointsTo {
                        target: t.clone(),
                        field: f.clone(),
                        perm: SymPerm {
                            base: p.base.clone(),
                            halvings: p.halvings + k,
                        },
                        value: v.clone(),
                    },
                    level,
                });
            }
            return true;
        }
    }
    false
}

fn match_join(
    ctx: &ProofCtx,
    st: &mut State,
    thread: &Expr,
    perm: &SymPerm,
    goal: &mut Goal,
) -> bool {
    let env = st.env(ctx.env);
    let need_t = goal.sub.expr(thread);
    for i in 0..st.atoms.len() {
        let SpatialAtom::Join { thread: t, perm: p } = st.atoms[i].atom.clone() else {
            continue;
        };
        if !eq_exprs(ctx, st, &env, &need_t, &t) {
            continue;
        }
        let Some(extra) = unify_perm(goal, perm, &p) else {
            continue;
        };
        let level = st.atoms[i].level;
        st.atoms.remove(i);
        for k in 1..=extra {
            st.atoms.push(Tracked {
                atom: SpatialAtom::Join {
                    thread: t.clone(),
                    perm: SymPerm {
                        base: p.base.clone(),
                        halvings: p.halvings + k,
                    },
                },
                level,
            });
        }
        return true;
    }
    false
}

/// Merge pairs of equal split pieces back into their parent piece.
fn merge_splits(ctx: &ProofCtx, st: &mut State) {
    let env = st.env(ctx.env);
    loop {
        let mut merged = None;
        'outer: for i in 0..st.atoms.len() {
            for j in i + 1..st.atoms.len() {
                match (&st.atoms[i].atom, &st.atoms[j].atom) {
                    (
                        SpatialAtom::PointsTo {
                            target: t1,
                            field: f1,
                            perm: p1,
                            value: v1,
                        },
                        SpatialAtom::PointsTo {
                            target: t2,
                            field: f2,
                            perm: p2,
                            value: v2,
                        },
                    ) if f1 == f2
                        && p1 == p2
                        && p1.halvings > 0
                        && t1 == t2
                        && eq_exprs(ctx, st, &env, v1, v2) =>
                    {
                        merged = Some((i, j));
                        break 'outer;
                    }
                    (
                        SpatialAtom::Join { thread: t1, perm: p1 },
                        SpatialAtom::Join { thread: t2, perm: p2 },
                    ) if p1 == p2
                        && p1.halvings > 0
                        && eq_exprs(ctx, st, &env, t1, t2) =>
                    {
                        merged = Some((i, j));
                        break 'outer;
                    }
                    _ => {}
                }
            }
        }
        let Some((i, j)) = merged else { return };
        // A piece merged across hypothesis levels counts as assumed at
        // the higher level (sound: frames may only shrink).
        let level = st.atoms[i].level.max(st.atoms[j].level);
        st.atoms.remove(j);
        st.atoms[i].level = level;
        match &mut st.atoms[i].atom {
            SpatialAtom::PointsTo { perm, .. } | SpatialAtom::Join { perm, .. } => {
                perm.halvings -= 1;
            }
            _ => {}
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn match_pred(
    ctx: &ProofCtx,
    st: &mut State,
    recv: &SpecVal,
    name: &Ident,
    at: Option<&str>,
    args: &[SpecVal],
    goal: &mut Goal,
    supply: &mut FreshSupply,
) -> Result<bool, String> {
    let env = st.env(ctx.env);
    let need_recv = goal.sub.specval(recv);
    // A predicate at `null` holds vacuously.
    if need_recv == SpecVal::Null
        || prove_pure(
            ctx,
            st,
            &env,
            &Formula::Pure(Expr::eq(
                Expr::Spec(need_recv.clone()),
                Expr::Spec(SpecVal::Null),
            )),
        )
    {
        return Ok(true);
    }
    for i in 0..st.atoms.len() {
        let SpatialAtom::Pred {
            recv: r,
            name: n,
            at: a,
            args: have_args,
        } = st.atoms[i].atom.clone()
        else {
            continue;
        };
        if n != *name {
            continue;
        }
        let recv_ok = specval_equiv(&need_recv, &r)
            || eq_exprs(
                ctx,
                st,
                &env,
                &Expr::Spec(need_recv.clone()),
                &Expr::Spec(r.clone()),
            );
        if !recv_ok {
            continue;
        }
        // How many leading arguments must agree, and what remainder
        // wand (if any) records the strengthening that was given up.
        enum Mode {
            Direct,
            DynamicType,
            Monotonic(usize),
            KnownType,
        }
        let mode = match (at, a.as_deref()) {
            (None, None) => Mode::Direct,
            (Some(x), Some(y)) if x == y => Mode::Direct,
            (Some(_), None) => Mode::DynamicType,
            (Some(d), Some(c)) => {
                if ctx
                    .lk
                    .subtype(&TypeExpr::simple(c), &TypeExpr::simple(d))
                {
                    let sup = ctx
                        .lk
                        .ptype(name, &TypeExpr::simple(d))
                        .map_err(|e| e.to_string())?
                        .len();
                    Mode::Monotonic(sup)
                } else {
                    continue;
                }
            }
            (None, Some(c)) => {
                let known = Formula::Pure(Expr::Op(
                    Op::IsClassOf(c.to_string()),
                    vec![Expr::Spec(need_recv.clone())],
                ));
                if prove_pure(ctx, st, &env, &known) {
                    Mode::KnownType
                } else {
                    continue;
                }
            }
        };
        // Unify the shared argument prefix; goal arguments beyond the
        // antecedent's are existentials made opaque (the antecedent's
        // shorter form quantifies them away).
        let shared = match &mode {
            Mode::Monotonic(sup) => args.len().min(have_args.len()).min(*sup),
            _ => args.len().min(have_args.len()),
        };
        if matches!(mode, Mode::Monotonic(ref sup) if args.len() > *sup) {
            continue;
        }
        let mut probe = Goal {
            exvars: goal.exvars.clone(),
            sub: goal.sub.clone(),
            obligations: Vec::new(),
        };
        let mut ok = true;
        for (na, ha) in args.iter().take(shared).zip(have_args.iter()) {
            if !unify_specval(ctx, st, &env, &mut probe, na, ha) {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        // Goal arguments past the antecedent's length must be unbound
        // existentials; they become fresh opaque witnesses.
        for na in args.iter().skip(shared) {
            let v = probe.sub.specval(na);
            if let SpecVal::Var(x) = &v {
                if probe.unbound(x) {
                    let w = supply.fresh();
                    probe.sub.bind(x, SpecVal::Var(w));
                    continue;
                }
            }
            ok = false;
            break;
        }
        if !ok {
            continue;
        }
        goal.sub = probe.sub;
        goal.obligations.extend(probe.obligations);
        let level = st.atoms[i].level;
        let consumed = st.atoms.remove(i).atom;
        // The remainder wand lets the stronger original be recovered.
        let produced = SpatialAtom::Pred {
            recv: need_recv.clone(),
            name: name.clone(),
            at: at.map(str::to_string),
            args: args.iter().map(|v| goal.sub.specval(v)).collect(),
        };
        match mode {
            Mode::Direct | Mode::KnownType => {}
            Mode::DynamicType | Mode::Monotonic(_) => {
                st.atoms.push(Tracked {
                    atom: SpatialAtom::Wand {
                        lhs: Box::new(produced.to_formula()),
                        rhs: Box::new(consumed.to_formula()),
                    },
                    level,
                });
            }
        }
        return Ok(true);
    }
    Ok(false)
}

/// Consume a state wand syntactically equal to the goal wand.
fn match_wand_atom(
    ctx: &ProofCtx,
    st: &mut State,
    lhs: &Formula,
    rhs: &Formula,
    goal: &mut Goal,
    supply: &mut FreshSupply,
) -> bool {
    let _ = ctx;
    let nl = goal.sub.formula(lhs, supply);
    let nr = goal.sub.formula(rhs, supply);
    for i in 0..st.atoms.len() {
        let (hl, hr) = match &st.atoms[i].atom {
            SpatialAtom::Wand { lhs, rhs } => (&**lhs, &**rhs),
            SpatialAtom::CondWand { guard, body } => (&**guard, &**body),
            _ => continue,
        };
        if *hl == nl && *hr == nr {
            st.atoms.remove(i);
            return true;
        }
    }
    false
}

/// Introduce a wand goal: assume the hypothesis at a fresh level and
/// prove the conclusion; the wand then holds from whatever the proof
/// consumed.
fn intro_wand(
    ctx: &ProofCtx,
    st: &mut State,
    lhs: &Formula,
    rhs: &Formula,
    goal: &mut Goal,
    depth: u32,
    supply: &mut FreshSupply,
) -> Result<bool, String> {
    if depth == 0 {
        return Ok(false);
    }
    let env = st.env(ctx.env);
    let nctx = NormCtx { lk: ctx.lk, env: &env };
    let lhs = goal.sub.formula(lhs, supply);
    let rhs = goal.sub.formula(rhs, supply);
    let hyp_cases = normalize_cases(&nctx, &lhs, supply)?;
    let mut results: Vec<State> = Vec::new();
    for hyp in &hyp_cases {
        let mut branch = st.clone();
        branch.level += 1;
        let level = branch.level;
        branch.binders.extend(hyp.binders.clone());
        for a in &hyp.spatial {
            branch.atoms.push(Tracked {
                atom: a.clone(),
                level,
            });
        }
        for p in &hyp.pure {
            branch.push_pure(p.clone());
        }
        match (&branch.lockset, &hyp.lockset) {
            (Some(_), Some(_)) => {
                // Hypothesis and state both hold the lockset: the
                // hypothetical case is inconsistent, hence proved.
                results.push(st.clone());
                continue;
            }
            (None, Some(s)) => branch.lockset = Some(s.clone()),
            _ => {}
        }
        saturate(ctx, &mut branch);
        let benv = branch.env(ctx.env);
        if pure_solve(&benv, &branch.pure) == PureVerdict::Unsat {
            results.push(st.clone());
            continue;
        }
        let rhs_cases = normalize_cases(&nctx, &rhs, supply)?;
        let mut done = false;
        for case in &rhs_cases {
            if let Ok(sub) = subtract(ctx, &branch, case, depth - 1, supply) {
                // Drop hypothesis leftovers; what remains funded the
                // conclusion alongside the hypothesis.
                let mut rest = state_from_frame(&sub.frame, st.level);
                rest.atoms.retain(|t| t.level <= st.level);
                rest.pure = st.pure.clone();
                rest.binders = st.binders.clone();
                results.push(rest);
                done = true;
                break;
            }
        }
        if !done {
            return Ok(false);
        }
    }
    // The wand consumed whatever any hypothetical case consumed: keep
    // only atoms surviving every case.
    let base = std::mem::take(&mut st.atoms);
    st.atoms = base
        .into_iter()
        .filter(|t| {
            results
                .iter()
                .all(|r| r.atoms.iter().any(|u| u.atom == t.atom && u.level == t.level))
        })
        .collect();
    if let Some(ls) = st.lockset.clone() {
        if results.iter().any(|r| r.lockset.as_ref() != Some(&ls)) {
            st.lockset = None;
        }
    }
    Ok(true)
}

/// Eliminate one opaque state wand by proving its hypothesis from the
/// rest of the state.
fn try_modus_ponens(
    ctx: &ProofCtx,
    st: &mut State,
    depth: u32,
    supply: &mut FreshSupply,
) -> Result<bool, String> {
    for i in 0..st.atoms.len() {
        let SpatialAtom::Wand { lhs, rhs } = st.atoms[i].atom.clone() else {
            continue;
        };
        let level = st.atoms[i].level;
        let mut rest = st.clone();
        rest.atoms.remove(i);
        let env = rest.env(ctx.env);
        let nctx = NormCtx { lk: ctx.lk, env: &env };
        let Ok(cases) = normalize_cases(&nctx, &lhs, supply) else {
            continue;
        };
        if cases.len() != 1 {
            continue;
        }
        if let Ok(sub) = subtract(ctx, &rest, &cases[0], depth - 1, supply) {
            let mut next = state_from_frame(&sub.frame, st.level);
            let Ok(out_cases) = normalize_cases(&nctx, &rhs, supply) else {
                continue;
            };
            if out_cases.len() != 1 {
                continue;
            }
            let out = &out_cases[0];
            next.binders.extend(out.binders.clone());
            for a in &out.spatial {
                next.atoms.push(Tracked {
                    atom: a.clone(),
                    level,
                });
            }
            for p in &out.pure {
                next.push_pure(p.clone());
            }
            if next.lockset.is_none() {
                next.lockset = out.lockset.clone();
            }
            *st = next;
            return Ok(true);
        }
    }
    Ok(false)
}

/// Open one antecedent predicate (scope permitting) whose body
/// normalizes deterministically, looking for material the goal needs.
fn try_auto_open(
    ctx: &ProofCtx,
    st: &mut State,
    want: &SpatialAtom,
    depth: u32,
    supply: &mut FreshSupply,
) -> Result<bool, String> {
    let _ = depth;
    let want_key = atom_key(want);
    for i in 0..st.atoms.len() {
        let SpatialAtom::Pred {
            recv,
            name,
            at,
            args,
        } = st.atoms[i].atom.clone()
        else {
            continue;
        };
        let Some(class) = at.clone().or_else(|| class_of_recv(ctx, st, &recv)) else {
            continue;
        };
        let Ok(rp) = ctx.lk.plkup(&name, &TypeExpr::simple(&class)) else {
            continue;
        };
        if !scope_allows(ctx, &recv, rp.public, &name) {
            continue;
        }
        let Ok(body) = open_pred(ctx.lk, &recv, &name, &class, &args, supply) else {
            continue;
        };
        let env = st.env(ctx.env);
        let nctx = NormCtx { lk: ctx.lk, env: &env };
        let Ok(cases) = normalize_cases(&nctx, &body, supply) else {
            continue;
        };
        if cases.len() != 1 {
            continue;
        }
        let case = &cases[0];
        // Open when the body carries an atom the goal could use, or when
        // it is purely pure (it can then fund a fold's side conditions).
        if !case.spatial.is_empty() && !case.spatial.iter().any(|a| atom_key(a) == want_key) {
            continue;
        }
        let level = st.atoms[i].level;
        st.atoms.remove(i);
        st.binders.extend(case.binders.clone());
        for a in &case.spatial {
            st.atoms.push(Tracked {
                atom: a.clone(),
                level,
            });
        }
        for p in &case.pure {
            st.push_pure(p.clone());
        }
        if st.lockset.is_none() {
            st.lockset = case.lockset.clone();
        }
        saturate(ctx, st);
        return Ok(true);
    }
    Ok(false)
}

/// A coarse key for "could this antecedent atom help that goal atom".
fn atom_key(a: &SpatialAtom) -> String {
    match a {
        SpatialAtom::PointsTo { field, .. } => format!("pt:{field}"),
        SpatialAtom::Pred { name, .. } => format!("pred:{name}"),
        SpatialAtom::Join { .. } => "join".into(),
        SpatialAtom::Fresh(_) => "fresh".into(),
        SpatialAtom::CondWand { .. } | SpatialAtom::Wand { .. } => "wand".into(),
    }
}

/// The class the state knows `recv` to be an exact instance of, from a
/// `C isclassof recv` fact.
fn class_of_recv(ctx: &ProofCtx, st: &State, recv: &SpecVal) -> Option<Ident> {
    let _ = ctx;
    for p in &st.pure {
        if let PureAtom::Bool(Expr::Op(Op::IsClassOf(c), args)) = p {
            if args[0].as_spec().is_some_and(|v| specval_equiv(v, recv)) {
                return Some(c.clone());
            }
        }
    }
    None
}

// --------------------------------------------------------------------
// Class axioms
// --------------------------------------------------------------------

fn all_axioms(lk: &Lookup) -> Vec<AxiomDecl> {
    let mut out = Vec::new();
    for c in &lk.table.classes {
        out.extend(c.axioms.iter().cloned());
    }
    for i in &lk.table.interfaces {
        out.extend(i.axioms.iter().cloned());
    }
    out
}

fn axiom_mentions(f: &Formula, pred: &str) -> bool {
    match f {
        Formula::PredApp { name, .. } => name == pred,
        Formula::Star(a, b)
        | Formula::And(a, b)
        | Formula::Or(a, b)
        | Formula::Wand(a, b)
        | Formula::Iff(a, b)
        | Formula::Assures(a, b)
        | Formula::IsPartOf(a, b) => axiom_mentions(a, pred) || axiom_mentions(b, pred),
        Formula::Quant { body, .. } => axiom_mentions(body, pred),
        _ => false,
    }
}

/// Try to rewrite the state with an equivalence axiom `L *-* R`: match
/// one side's predicate atoms against the state (instantiating the
/// axiom's free variables), discharge its pure conjuncts, and replace
/// the matched atoms with the other side. When `toward` is given, only
/// rewrites that introduce that predicate are tried.
fn try_axiom(
    ctx: &ProofCtx,
    state: &mut State,
    ax: &AxiomDecl,
    toward: Option<&str>,
    depth: u32,
    supply: &mut FreshSupply,
) -> Result<bool, String> {
    ctx.tick()?;
    if !ctx.use_axioms {
        return Ok(false);
    }
    let Formula::Iff(l, r) = &ax.formula else {
        return Ok(false);
    };
    for (have, get) in [(&**l, &**r), (&**r, &**l)] {
        if let Some(p) = toward {
            if !axiom_mentions(get, p) {
                continue;
            }
        }
        if apply_rewrite(ctx, state, have, get, depth, supply)? {
            return Ok(true);
        }
    }
    Ok(false)
}

fn apply_rewrite(
    ctx: &ProofCtx,
    state: &mut State,
    have: &Formula,
    get: &Formula,
    depth: u32,
    supply: &mut FreshSupply,
) -> Result<bool, String> {
    use crate::syntax::fv::fv_formula;
    let mut pat_vars: BTreeSet<Ident> = fv_formula(have).into_iter().collect();
    pat_vars.extend(fv_formula(get));
    pat_vars.insert("this".into());
    // Pattern variables bound by the program environment are rigid.
    pat_vars.retain(|x| !ctx.env.vars.contains_key(x));

    let env = state.env(ctx.env);
    let nctx = NormCtx { lk: ctx.lk, env: &env };
    // Both sides must normalize deterministically for a rewrite.
    let have_cases = normalize_cases(&nctx, have, supply).unwrap_or_default();
    if have_cases.len() != 1 {
        return Ok(false);
    }
    let pat = &have_cases[0];
    if pat.lockset.is_some() || !pat.binders.is_empty() {
        return Ok(false);
    }
    // Match pattern predicate atoms against distinct state atoms.
    let preds: Vec<&SpatialAtom> = pat
        .spatial
        .iter()
        .filter(|a| matches!(a, SpatialAtom::Pred { .. }))
        .collect();
    if preds.len() != pat.spatial.len() || preds.is_empty() {
        return Ok(false);
    }
    let mut sub = Subst::new();
    let mut used: Vec<usize> = Vec::new();
    for pa in &preds {
        let SpatialAtom::Pred {
            recv,
            name,
            at,
            args,
        } = pa
        else {
            unreachable!()
        };
        let mut found = false;
        for i in 0..state.atoms.len() {
            if used.contains(&i) {
                continue;
            }
            let SpatialAtom::Pred {
                recv: r,
                name: n,
                at: a,
                args: ha,
            } = &state.atoms[i].atom
            else {
                continue;
            };
            if n != name || a.as_deref() != at.as_deref() || ha.len() != args.len() {
                continue;
            }
            let mut trial = sub.clone();
            if pattern_unify_specval(&pat_vars, &mut trial, recv, r)
                && args
                    .iter()
                    .zip(ha.iter())
                    .all(|(p, h)| pattern_unify_specval(&pat_vars, &mut trial, p, h))
            {
                sub = trial;
                used.push(i);
                found = true;
                break;
            }
        }
        if !found {
            return Ok(false);
        }
    }
    // Discharge the pattern's pure conjuncts.
    for p in &pat.pure {
        let f = sub.formula(&p.to_formula(), supply);
        if !pure_implies(ctx.lk, &env, &state.pure, &f) {
            return Ok(false);
        }
    }
    // Replace with the instantiated other side.
    let inst = sub.formula(get, supply);
    let get_cases = normalize_cases(&nctx, &inst, supply)?;
    if get_cases.len() != 1 {
        return Ok(false);
    }
    let out = &get_cases[0];
    if out.lockset.is_some() {
        return Ok(false);
    }
    let _ = depth;
    used.sort_unstable();
    let level = used.iter().map(|i| state.atoms[*i].level).max().unwrap_or(0);
    for i in used.into_iter().rev() {
        state.atoms.remove(i);
    }
    state.binders.extend(out.binders.clone());
    for a in &out.spatial {
        state.atoms.push(Tracked {
            atom: a.clone(),
            level,
        });
    }
    for p in &out.pure {
        state.push_pure(p.clone());
    }
    Ok(true)
}

fn pattern_unify_specval(
    pat_vars: &BTreeSet<Ident>,
    sub: &mut Subst,
    pat: &SpecVal,
    have: &SpecVal,
) -> bool {
    let p = sub.specval(pat);
    if let SpecVal::Var(x) = &p {
        if pat_vars.contains(x) && sub.get(x).is_none() {
            sub.bind(x, have.clone());
            return true;
        }
    }
    match (&p, have) {
        (SpecVal::Split(a), SpecVal::Split(b)) => pattern_unify_specval(pat_vars, sub, a, b),
        (SpecVal::Union(a1, a2), SpecVal::Union(b1, b2)) => {
            pattern_unify_specval(pat_vars, sub, a1, b1)
                && pattern_unify_specval(pat_vars, sub, a2, b2)
        }
        _ => specval_equiv(&p, have),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_program};
    use crate::syntax::ast::ClassTable;

    const CELL: &str =
        "class Cell { int f; public pred state<int n> = PointsTo(this.f, 1, n); }";
    const PAIR: &str =
        "class Base { int a; public pred st<int n> = PointsTo(this.a, 1/2, n); } \
         class Derived ext Base { int b; \
           public pred st<int n, int m> = PointsTo(this.b, 1, m); }";

    fn check(table_src: &str, decls: &[(&str, TypeExpr)], ante: &str, cons: &str) -> Verdict {
        let table = if table_src.is_empty() {
            ClassTable::builtins()
        } else {
            crate::syntax::desugar::desugar_groups(parse_program(table_src).unwrap().table)
                .with_builtins()
        };
        let lk = Lookup::new(&table).unwrap();
        let mut env = TypeEnv::new();
        for (x, t) in decls {
            env.bind(x, t.clone());
        }
        let ctx = ProofCtx::new(&lk, &env);
        let a = parse_formula(ante).unwrap();
        let c = parse_formula(cons).unwrap();
        entails(&ctx, &a, &c, &[])
    }

    fn obj(name: &str) -> (&str, TypeExpr) {
        (name, TypeExpr::object())
    }

    #[test]
    fn split_and_merge_permissions() {
        assert!(check(
            CELL,
            &[("x", TypeExpr::simple("Cell"))],
            "PointsTo(x.f, 1, v)",
            "PointsTo(x.f, 1/2, v) * PointsTo(x.f, 1/2, v)"
        )
        .is_proved());
        assert!(check(
            CELL,
            &[("x", TypeExpr::simple("Cell"))],
            "PointsTo(x.f, 1/2, v) * PointsTo(x.f, 1/2, v)",
            "PointsTo(x.f, 1, v)"
        )
        .is_proved());
        // A full permission cannot be duplicated.
        assert!(!check(
            CELL,
            &[("x", TypeExpr::simple("Cell"))],
            "PointsTo(x.f, 1, v)",
            "PointsTo(x.f, 1, v) * PointsTo(x.f, 1, v)"
        )
        .is_proved());
    }

    #[test]
    fn known_type_and_dynamic_type() {
        assert!(check(
            CELL,
            &[obj("x")],
            "x isclassof Cell * x.state@Cell<n>",
            "x.state<n>"
        )
        .is_proved());
        assert!(check(CELL, &[obj("x")], "x.state<n>", "x.state@Cell<n>").is_proved());
        // Without the classof fact the unqualified form is not derivable.
        assert!(!check(CELL, &[obj("x")], "x.state@Cell<n>", "x.state<n>").is_proved());
    }

    #[test]
    fn ispartof_monotonic_prefix() {
        assert!(check(
            PAIR,
            &[obj("x")],
            "x.st@Derived<n, m>",
            "x.st@Base<n>"
        )
        .is_proved());
        assert!(!check(PAIR, &[obj("x")], "x.st@Base<n>", "x.st@Derived<n, m>").is_proved());
    }

    #[test]
    fn missing_parameters_both_directions() {
        assert!(check(PAIR, &[obj("x")], "x.st@Derived<n, m>", "x.st@Derived<n>").is_proved());
        assert!(check(
            PAIR,
            &[obj("x")],
            "x.st@Derived<n>",
            "ex int m. x.st@Derived<n, m>"
        )
        .is_proved());
    }

    #[test]
    fn open_and_close_predicate_bodies() {
        // Opening: the predicate entails its body.
        assert!(check(
            CELL,
            &[("x", TypeExpr::simple("Cell"))],
            "x.state@Cell<n>",
            "PointsTo(x.f, 1, n)"
        )
        .is_proved());
        // Closing: the body folds back into the predicate.
        assert!(check(
            CELL,
            &[("x", TypeExpr::simple("Cell"))],
            "PointsTo(x.f, 1, n)",
            "x.state@Cell<n>"
        )
        .is_proved());
        // Closing through the hierarchy consumes both contributions.
        assert!(check(
            PAIR,
            &[obj("x")],
            "PointsTo(x.a, 1/2, n) * PointsTo(x.b, 1, m)",
            "x.st@Derived<n, m>"
        )
        .is_proved());
        assert!(!check(
            PAIR,
            &[obj("x")],
            "PointsTo(x.b, 1, m)",
            "x.st@Derived<n, m>"
        )
        .is_proved());
    }

    #[test]
    fn unique_value_and_over_permission() {
        assert!(check(
            CELL,
            &[("x", TypeExpr::simple("Cell"))],
            "PointsTo(x.f, p, v) * PointsTo(x.f, q, w)",
            "v == w"
        )
        .is_proved());
        // Two full permissions to one cell are contradictory.
        assert!(check(
            CELL,
            &[("x", TypeExpr::simple("Cell"))],
            "PointsTo(x.f, 1, v) * PointsTo(x.f, 1, w)",
            "false"
        )
        .is_proved());
    }

    #[test]
    fn null_receiver_false_and_member_nil() {
        assert!(check(CELL, &[], "true", "null.state<v>").is_proved());
        assert!(check(CELL, &[], "false", "PointsTo(x.f, 1, v)").is_proved());
        assert!(check("", &[obj("o")], "nil contains o", "false").is_proved());
    }

    #[test]
    fn copyable_booleans_duplicate_but_cells_do_not() {
        assert!(check(
            CELL,
            &[("x", TypeExpr::simple("Cell"))],
            "PointsTo(x.f, 1, v) & v == 0",
            "PointsTo(x.f, 1, v) * v == 0"
        )
        .is_proved());
        assert!(check("", &[obj("o")], "initialized(o)", "initialized(o) * initialized(o)").is_proved());
        assert!(!check(CELL, &[], "fresh(x)", "fresh(x) * fresh(x)").is_proved());
    }

    #[test]
    fn wand_introduction_and_elimination() {
        // Introduction: prove a wand by hypothetical reasoning.
        assert!(check(
            CELL,
            &[("x", TypeExpr::simple("Cell"))],
            "PointsTo(x.f, 1/2, v)",
            "PointsTo(x.f, 1/2, v) -* PointsTo(x.f, 1, v)"
        )
        .is_proved());
        // Elimination: a wand plus its hypothesis yields its conclusion.
        assert!(check(
            CELL,
            &[("x", TypeExpr::simple("Cell"))],
            "PointsTo(x.f, 1/2, v) * (PointsTo(x.f, 1/2, v) -* PointsTo(x.f, 1, v))",
            "PointsTo(x.f, 1, v)"
        )
        .is_proved());
    }

    #[test]
    fn frame_is_what_remains() {
        let table = parse_program(CELL).unwrap().table.with_builtins();
        let lk = Lookup::new(&table).unwrap();
        let mut env = TypeEnv::new();
        env.bind("x", TypeExpr::simple("Cell"));
        env.bind("y", TypeExpr::simple("Cell"));
        let ctx = ProofCtx::new(&lk, &env);
        let ante = parse_formula("PointsTo(x.f, 1, v) * PointsTo(y.f, 1, w)").unwrap();
        let need = parse_formula("PointsTo(x.f, 1/2, v)").unwrap();
        let sub = frame_subtract(&ctx, &ante, &need, &[]).unwrap();
        // The frame holds y's cell and the other half of x's.
        assert_eq!(sub.frame.spatial.len(), 2);
    }

    #[test]
    fn existential_instantiation_reported() {
        let table = parse_program(CELL).unwrap().table.with_builtins();
        let lk = Lookup::new(&table).unwrap();
        let mut env = TypeEnv::new();
        env.bind("x", TypeExpr::simple("Cell"));
        let ctx = ProofCtx::new(&lk, &env);
        let ante = parse_formula("PointsTo(x.f, 1, 3)").unwrap();
        let need = parse_formula("ex int n. PointsTo(x.f, 1, n) * n == 3").unwrap();
        let sub = frame_subtract(&ctx, &ante, &need, &[]).unwrap();
        assert!(sub.frame.spatial.is_empty());
    }

    #[test]
    fn lockset_is_not_duplicable() {
        assert!(check("", &[("S", TypeExpr::Lockset)], "Lockset(S)", "Lockset(S)").is_proved());
        assert!(!check(
            "",
            &[("S", TypeExpr::Lockset)],
            "Lockset(S)",
            "Lockset(S) * Lockset(S)"
        )
        .is_proved());
    }

    #[test]
    fn group_axiom_splits_predicates() {
        let src = "class Counter { int c; \
                   public group held<perm p> = PointsTo(this.c, p, 0); }";
        assert!(check(
            src,
            &[("x", TypeExpr::simple("Counter"))],
            "x.held@Counter<p>",
            "x.held@Counter<p/2> * x.held@Counter<p/2>"
        )
        .is_proved());
    }
}
