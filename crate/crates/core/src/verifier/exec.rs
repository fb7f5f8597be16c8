//! The symbolic-execution engine: one transformer per head command.
//!
//! The state carries the current assertion as a formula over read-only
//! (specification) variables and the method's read-write locals.
//! Assignment renames the overwritten variable's occurrences to a fresh
//! logical name (its old value) and records the new value as an
//! equality, so the assertion always speaks about current values.

use std::collections::{BTreeMap, BTreeSet};

use crate::entailment::{
    entails, frame_subtract, normalize_single, pure_solve, NormCtx, ProofCtx, PureVerdict,
    Subtraction, SymFormula, Verdict as EntVerdict,
};
use crate::lookup::{default_value, ms_normalize, ms_rebuild, Lookup};
use crate::syntax::ast::*;
use crate::syntax::bind::seq_compose;
use crate::syntax::fv::writes;
use crate::syntax::subst::{rename_rw, subst_rw_formula, FreshSupply, Subst};
use crate::typecheck::{check_expr, TypeEnv};

use super::{Obligation, Status, VerifyOptions};

/// The left-hand side of the Hoare judgment during execution.
#[derive(Debug, Clone)]
pub struct SymState {
    /// The current assertion.
    pub formula: Formula,
    pub env: TypeEnv,
    /// The read-write locals currently in scope; every other variable in
    /// the environment is read-only.
    pub rw: BTreeSet<Ident>,
    /// The `this` of the method, scoping predicate bodies.
    pub receiver: SpecVal,
    pub supply: FreshSupply,
    /// Hints waiting for the next proof obligation (witness/axiom).
    pub pending: Vec<Hint>,
}

impl SymState {
    fn push(&mut self, f: Formula) {
        let cur = std::mem::replace(&mut self.formula, Formula::truth());
        self.formula = Formula::star(cur, f);
    }

    fn push_pure(&mut self, e: Expr) {
        self.push(Formula::Pure(e));
    }

    fn fresh(&mut self, ty: TypeExpr) -> Ident {
        let x = self.supply.fresh();
        self.env.bind(&x, ty);
        x
    }

    /// The value of an expression as a specification value: either it is
    /// one already, or a fresh read-only name equated with it.
    fn as_specval(&mut self, lk: &Lookup, e: &Expr) -> SpecVal {
        if let Some(v) = e.as_spec() {
            return v.clone();
        }
        let ty = check_expr(lk, &self.env, e).unwrap_or(TypeExpr::Int);
        let x = self.fresh(ty);
        self.push_pure(Expr::eq(Expr::spec_var(&x), e.clone()));
        SpecVal::Var(x)
    }

    /// Overwrite read-write variable `x` with `value`: occurrences of `x`
    /// in the assertion now denote the old value, renamed to a fresh
    /// read-only name.
    fn assign(&mut self, x: &str, value: Expr) {
        let ty = self
            .env
            .vars
            .get(x)
            .cloned()
            .unwrap_or(TypeExpr::Int);
        let old = self.fresh(ty);
        let mut map = BTreeMap::new();
        map.insert(x.to_string(), Expr::spec_var(&old));
        self.formula = subst_rw_formula(&self.formula, &map);
        let value = subst_rw_expr(&value, &map);
        self.push_pure(Expr::eq(Expr::var(x), value));
    }
}

fn subst_rw_expr(e: &Expr, map: &BTreeMap<Ident, Expr>) -> Expr {
    match e {
        Expr::Var(x) => map.get(x).cloned().unwrap_or_else(|| e.clone()),
        Expr::Op(op, args) => Expr::Op(
            op.clone(),
            args.iter().map(|a| subst_rw_expr(a, map)).collect(),
        ),
        _ => e.clone(),
    }
}

/// The required postcondition of the command under execution.
#[derive(Debug, Clone)]
pub struct Post {
    pub formula: Formula,
    /// The contract variable bound to the command's value (`result`), if
    /// the value matters.
    pub result: Option<Ident>,
    pub result_ty: TypeExpr,
}

/// Bookkeeping for one item's verification run.
pub struct Run<'a> {
    pub lk: &'a Lookup<'a>,
    pub opts: &'a VerifyOptions,
    status: Status,
    obligations: Vec<Obligation>,
    trace: Vec<String>,
}

/// Execution stopped: the failure has already been recorded.
pub struct Stop;

type StepResult = Result<(), Stop>;

impl<'a> Run<'a> {
    pub fn new(lk: &'a Lookup<'a>, opts: &'a VerifyOptions) -> Run<'a> {
        Run {
            lk,
            opts,
            status: Status::Verified,
            obligations: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub fn finish(self, verdict: &mut super::Verdict) {
        verdict.status = self.status;
        verdict.obligations = self.obligations;
        verdict.trace = self.trace;
    }

    fn trace(&mut self, st: &SymState, step: &str) {
        if self.opts.trace {
            self.trace.push(format!("after {step}: {}", st.formula));
        }
    }

    fn ok(&mut self, step: &str, goal: String) {
        self.obligations.push(Obligation {
            step: step.to_string(),
            goal,
            proved: true,
            detail: None,
        });
    }

    fn stop(&mut self, status: Status, step: &str, goal: String, detail: String) -> Stop {
        self.obligations.push(Obligation {
            step: step.to_string(),
            goal,
            proved: false,
            detail: Some(detail),
        });
        if self.status == Status::Verified {
            self.status = status;
        }
        Stop
    }

    fn ctx<'s>(&self, st: &'s SymState) -> ProofCtx<'s>
    where
        'a: 's,
    {
        ProofCtx::new(self.lk, &st.env)
            .with_receiver(Some(st.receiver.clone()))
            .with_budget(self.opts.budget)
            .with_unfold_depth(self.opts.unfold_depth)
    }

    /// Prove `goal` from the current state, keeping the state.
    fn prove(&mut self, st: &mut SymState, step: &str, goal: &Formula) -> StepResult {
        let hints = std::mem::take(&mut st.pending);
        let verdict = entails(&self.ctx(st), &st.formula, goal, &hints);
        match verdict {
            EntVerdict::Proved => {
                self.ok(step, goal.to_string());
                Ok(())
            }
            EntVerdict::Unknown(msg) => {
                Err(self.stop(Status::Unknown, step, goal.to_string(), msg))
            }
        }
    }

    /// Subtract `need` from the state, leaving the frame; returns how the
    /// need's existentials were instantiated.
    fn consume(&mut self, st: &mut SymState, step: &str, need: &Formula) -> Result<Subst, Stop> {
        let hints = std::mem::take(&mut st.pending);
        let res = frame_subtract(&self.ctx(st), &st.formula, need, &hints);
        match res {
            Ok(Subtraction { frame, inst }) => {
                st.formula = frame.to_formula();
                self.ok(step, need.to_string());
                Ok(inst)
            }
            Err(msg) => Err(self.stop(Status::Unknown, step, need.to_string(), msg)),
        }
    }

    /// The state normalized to its single symbolic case.
    fn norm(&mut self, st: &mut SymState, step: &str) -> Result<SymFormula, Stop> {
        let nctx = NormCtx {
            lk: self.lk,
            env: &st.env,
        };
        normalize_single(&nctx, &st.formula, &mut st.supply)
            .map_err(|msg| self.stop(Status::Failed, step, st.formula.to_string(), msg))
    }
}

/// Execute a command from `st`, requiring `post` of its value.
pub fn exec(run: &mut Run, mut st: SymState, c: &Cmd, post: &Post) -> StepResult {
    match c {
        Cmd::Value(e) => {
            let goal = match &post.result {
                Some(result) => {
                    let r = st.fresh(post.result_ty.clone());
                    st.push_pure(Expr::eq(Expr::spec_var(&r), e.clone()));
                    let sub = Subst::one(result, SpecVal::Var(r));
                    sub.formula(&post.formula, &mut st.supply)
                }
                None => post.formula.clone(),
            };
            run.prove(&mut st, "postcondition", &goal)
        }
        Cmd::Dcl(t, x, body) => {
            let (x, body) = if st.env.vars.contains_key(x) {
                let fresh = st.supply.fresh();
                (fresh.clone(), rename_rw(body, x, &fresh))
            } else {
                (x.clone(), (**body).clone())
            };
            st.env.bind(&x, t.clone());
            st.rw.insert(x.clone());
            st.push_pure(Expr::eq(
                Expr::var(&x),
                Expr::Spec(default_value(t)),
            ));
            run.trace(&st, &format!("{t} {x}"));
            exec(run, st, &body, post)
        }
        Cmd::FinDcl(t, i, w, body) => {
            st.env.bind(i, t.clone());
            st.push_pure(Expr::eq(Expr::spec_var(i), w.clone()));
            run.trace(&st, &format!("fin {t} {i}"));
            exec(run, st, body, post)
        }
        Cmd::Seq(hc, k) => step(run, st, hc, k, post),
        Cmd::ReturnAnd(x, w, k) => {
            st.assign(x, w.clone());
            run.trace(&st, &format!("{x} = {w}"));
            exec(run, st, k, post)
        }
    }
}

/// Execute one head command, then the continuation.
fn step(run: &mut Run, mut st: SymState, hc: &HeadCmd, k: &Cmd, post: &Post) -> StepResult {
    let step_name = head_name(hc);
    match hc {
        HeadCmd::VarSet(x, e) => {
            st.assign(x, e.clone());
        }
        HeadCmd::FieldGet(x, target, field) => {
            field_get(run, &mut st, x, target, field)?;
        }
        HeadCmd::FieldSet(target, field, w) => {
            // (Fld Set) requires the full permission on the cell.
            let v = st.supply.fresh();
            let need = Formula::ex(
                &v,
                field_ty(run.lk, &st.env, target, field),
                Formula::points_to(target.clone(), field, SpecVal::full(), Expr::spec_var(&v)),
            );
            run.consume(&mut st, &step_name, &need)?;
            st.push(Formula::points_to(
                target.clone(),
                field,
                SpecVal::full(),
                w.clone(),
            ));
        }
        HeadCmd::New { lhs, class, args } => {
            new_object(run, &mut st, lhs, class, args)?;
        }
        HeadCmd::Call {
            lhs,
            recv,
            method,
            spec_args,
            args,
        } => {
            call(run, &mut st, lhs, recv, method, spec_args, args)?;
        }
        HeadCmd::If(guard, c1, c2) => {
            for (g, branch) in [
                (guard.clone(), c1),
                (Expr::not(guard.clone()), c2),
            ] {
                let mut stb = st.clone();
                stb.push_pure(g.clone());
                let sym = run.norm(&mut stb, &step_name)?;
                let envb = branch_env(&stb, &sym);
                if pure_solve(&envb, &sym.pure) == PureVerdict::Unsat {
                    run.trace(&stb, &format!("if: branch `{g}` infeasible"));
                    continue;
                }
                run.trace(&stb, &format!("if: branch `{g}`"));
                let mut supply = stb.supply.clone();
                let cont = seq_compose((**branch).clone(), k.clone(), &mut supply);
                stb.supply = supply;
                exec(run, stb, &cont, post)?;
            }
            return Ok(());
        }
        HeadCmd::While {
            guard,
            invariant,
            body,
        } => {
            while_loop(run, &mut st, guard, invariant, body)?;
        }
        HeadCmd::Lock(u) => {
            lock(run, &mut st, u)?;
        }
        HeadCmd::Unlock(u) => {
            unlock(run, &mut st, u)?;
        }
        HeadCmd::Commit(w) => {
            commit(run, &mut st, w)?;
        }
        HeadCmd::Assert(f) => {
            run.prove(&mut st, &step_name, f)?;
        }
        HeadCmd::Hint(h) => match h {
            Hint::Witness { .. } | Hint::Axiom(_) => st.pending.push(h.clone()),
            Hint::Unfold { .. } | Hint::Fold { .. } => {
                // Applied to the state immediately: subtract nothing
                // with the hint in force and keep the rewritten frame.
                let hints = vec![resolve_unfold_recv(run, &mut st, h)?];
                let res = frame_subtract(&run.ctx(&st), &st.formula, &Formula::truth(), &hints);
                match res {
                    Ok(sub) => st.formula = sub.frame.to_formula(),
                    Err(msg) => {
                        return Err(run.stop(
                            Status::Failed,
                            &step_name,
                            st.formula.to_string(),
                            msg,
                        ))
                    }
                }
            }
        },
        HeadCmd::Waiting { .. } | HeadCmd::Resume { .. } => {
            return Err(run.stop(
                Status::Failed,
                &step_name,
                String::new(),
                "auxiliary runtime command in source".into(),
            ));
        }
    }
    run.trace(&st, &step_name);
    exec(run, st, k, post)
}

fn head_name(hc: &HeadCmd) -> String {
    match hc {
        HeadCmd::VarSet(x, e) => format!("{x} = {e}"),
        HeadCmd::FieldGet(x, t, f) => format!("{x} = {t}.{f}"),
        HeadCmd::FieldSet(t, f, w) => format!("{t}.{f} = {w}"),
        HeadCmd::New { lhs, class, .. } => format!("{lhs} = new {class}"),
        HeadCmd::Call {
            lhs, recv, method, ..
        } => format!("{lhs} = {recv}.{method}(..)"),
        HeadCmd::If(g, ..) => format!("if ({g})"),
        HeadCmd::While { guard, .. } => format!("while ({guard})"),
        HeadCmd::Lock(u) => format!("lock({u})"),
        HeadCmd::Unlock(u) => format!("unlock({u})"),
        HeadCmd::Assert(_) => "assert".into(),
        HeadCmd::Commit(w) => format!("commit({w})"),
        HeadCmd::Hint(_) => "hint".into(),
        HeadCmd::Waiting { .. } => "waiting".into(),
        HeadCmd::Resume { .. } => "resume".into(),
    }
}

fn field_ty(lk: &Lookup, env: &TypeEnv, target: &Expr, field: &str) -> TypeExpr {
    check_expr(lk, env, target)
        .ok()
        .and_then(|t| lk.field_type(&t, field).ok())
        .unwrap_or(TypeExpr::Int)
}

/// (Get): any permission suffices; the cell keeps it and the assignee
/// learns the value.
fn field_get(
    run: &mut Run,
    st: &mut SymState,
    x: &str,
    target: &Expr,
    field: &str,
) -> StepResult {
    let step = format!("{x} = {target}.{field}");
    let p = st.supply.fresh();
    let v = st.supply.fresh();
    let vty = field_ty(run.lk, &st.env, target, field);
    let need = Formula::ex(
        &p,
        TypeExpr::Perm,
        Formula::ex(
            &v,
            vty.clone(),
            Formula::points_to(
                target.clone(),
                field,
                SpecVal::Var(p.clone()),
                Expr::spec_var(&v),
            ),
        ),
    );
    let inst = run.consume(st, &step, &need)?;
    let perm = inst.get(&p).cloned().unwrap_or_else(|| {
        let q = st.fresh(TypeExpr::Perm);
        SpecVal::Var(q)
    });
    let value = match inst.get(&v) {
        Some(val) => val.clone(),
        None => SpecVal::Var(st.fresh(vty)),
    };
    // The permission goes back: reading does not consume.
    st.push(Formula::points_to(
        target.clone(),
        field,
        perm,
        Expr::Spec(value.clone()),
    ));
    st.assign(x, Expr::Spec(value));
    Ok(())
}

/// (New): the object is initialized, exactly of its class, distinct from
/// every read-only object in scope, and (concurrently) fresh.
fn new_object(
    run: &mut Run,
    st: &mut SymState,
    lhs: &str,
    class: &str,
    args: &[SpecVal],
) -> StepResult {
    let step = format!("{lhs} = new {class}");
    let ty = TypeExpr::Ref(class.to_string(), args.to_vec());
    if !run.lk.table.is_class(class) {
        return Err(run.stop(
            Status::Failed,
            &step,
            String::new(),
            format!("unknown class `{class}`"),
        ));
    }
    // The read-only object-typed values in scope, before the allocation.
    let others: Vec<Expr> = st
        .env
        .vars
        .iter()
        .filter(|(u, t)| t.is_ref() && !st.rw.contains(*u))
        .map(|(u, _)| Expr::spec_var(u))
        .collect();
    let o = st.fresh(ty.clone());
    st.push(Formula::pred(SpecVal::Var(o.clone()), "init", vec![]));
    st.push_pure(Expr::Op(
        Op::IsClassOf(class.to_string()),
        vec![Expr::spec_var(&o)],
    ));
    st.push_pure(Expr::neq(Expr::spec_var(&o), Expr::null()));
    for u in others {
        st.push_pure(Expr::neq(Expr::spec_var(&o), u));
    }
    if !run.opts.sequential {
        st.push(Formula::Fresh(Expr::spec_var(&o)));
    }
    st.assign(lhs, Expr::spec_var(&o));
    run.ok(&step, format!("allocate {o}: {ty}"));
    Ok(())
}

/// (Call): receiver non-null, subtract the instantiated precondition,
/// assume the postcondition at a fresh result.
fn call(
    run: &mut Run,
    st: &mut SymState,
    lhs: &str,
    recv: &Expr,
    method: &str,
    spec_args: &[SpecVal],
    args: &[Expr],
) -> StepResult {
    let step = format!("{lhs} = {recv}.{method}(..)");
    let rty = match check_expr(run.lk, &st.env, recv) {
        Ok(t) if t.is_ref() => t,
        Ok(t) => {
            return Err(run.stop(
                Status::Failed,
                &step,
                String::new(),
                format!("receiver has non-reference type {t}"),
            ))
        }
        Err(e) => return Err(run.stop(Status::Failed, &step, String::new(), e.msg)),
    };
    let sig = match run.lk.mtype(method, &rty) {
        Ok(s) => s,
        Err(e) => return Err(run.stop(Status::Failed, &step, String::new(), e.to_string())),
    };
    if args.len() != sig.formals.len() {
        return Err(run.stop(
            Status::Failed,
            &step,
            String::new(),
            format!(
                "`{method}` takes {} arguments, got {}",
                sig.formals.len(),
                args.len()
            ),
        ));
    }

    run.prove(
        st,
        &format!("{step}: receiver non-null"),
        &Formula::Pure(Expr::neq(recv.clone(), Expr::null())),
    )?;

    let recv_val = st.as_specval(run.lk, recv);
    let mut sub = Subst::one("this", recv_val);
    for ((_, formal), actual) in sig.formals.iter().zip(args) {
        let v = st.as_specval(run.lk, actual);
        sub.bind(formal, v);
    }
    // Logic parameters: explicit ones positionally; the rest become
    // existentials of the precondition, instantiated by subtraction.
    let mut open: Vec<(Ident, Ident, TypeExpr)> = Vec::new();
    for (i, (t, a)) in sig.logic_params.iter().enumerate() {
        match spec_args.get(i) {
            Some(v) => sub.bind(a, v.clone()),
            None => {
                let w = st.supply.fresh();
                sub.bind(a, SpecVal::Var(w.clone()));
                open.push((a.clone(), w, t.clone()));
            }
        }
    }
    let mut pre = sub.formula(&sig.requires, &mut st.supply);
    for (_, w, t) in open.iter().rev() {
        pre = Formula::ex(w, t.clone(), pre);
    }
    let inst = run.consume(st, &format!("{step}: precondition"), &pre)?;
    for (param, w, t) in &open {
        let val = match inst.get(w) {
            Some(v) => v.clone(),
            // Unconstrained by the precondition: an arbitrary fixed value.
            None => SpecVal::Var(st.fresh(t.clone())),
        };
        sub.bind(param, val);
    }
    let res = st.fresh(sig.ret.clone());
    sub.bind("result", SpecVal::Var(res.clone()));
    let post = sub.formula(&sig.ensures, &mut st.supply);
    st.push(post);
    st.assign(lhs, Expr::spec_var(&res));
    Ok(())
}

/// Source-level unfold hints name the predicate's receiver as the
/// program wrote it (often a read-write local); the state's atom carries
/// the receiver's value. Rewrite the hint to the atom's receiver when
/// they are provably equal, so the prover's syntactic match finds it.
fn resolve_unfold_recv(run: &mut Run, st: &mut SymState, h: &Hint) -> Result<Hint, Stop> {
    let Hint::Unfold { recv, pred, at } = h else {
        return Ok(h.clone());
    };
    let sym = run.norm(st, "hint")?;
    for atom in &sym.spatial {
        let crate::entailment::SpatialAtom::Pred {
            recv: r,
            name,
            at: a,
            ..
        } = atom
        else {
            continue;
        };
        if name != pred || (at.is_some() && at.as_deref() != a.as_deref()) {
            continue;
        }
        let eq = Formula::Pure(Expr::eq(Expr::Spec(r.clone()), recv.clone()));
        if entails(&run.ctx(st), &st.formula, &eq, &[]).is_proved() {
            return Ok(Hint::Unfold {
                recv: Expr::Spec(r.clone()),
                pred: pred.clone(),
                at: a.clone(),
            });
        }
    }
    Ok(h.clone())
}

fn branch_env(st: &SymState, sym: &SymFormula) -> TypeEnv {
    let mut env = st.env.clone();
    for (x, t) in &sym.binders {
        env.bind(x, t.clone());
    }
    env
}

/// The negation of multiset membership, as a formula (`F -* false`).
fn not_contains(set: SpecVal, elem: Expr) -> Formula {
    Formula::wand(
        Formula::Contains { set, elem },
        Formula::Pure(Expr::Spec(SpecVal::Bool(false))),
    )
}

/// The current lockset term, or a recorded failure.
fn lockset_term(run: &mut Run, st: &mut SymState, step: &str) -> Result<SpecVal, Stop> {
    let sym = run.norm(st, step)?;
    match sym.lockset {
        Some(s) => Ok(s),
        None => Err(run.stop(
            Status::Failed,
            step,
            String::new(),
            "no Lockset atom in the current state".into(),
        )),
    }
}

/// (Lock)/(Re-Lock): dispatch on provable (non-)membership of the lock
/// in the current lockset. Undecided membership fails.
fn lock(run: &mut Run, st: &mut SymState, u: &Expr) -> StepResult {
    let step = format!("lock({u})");
    let s = lockset_term(run, st, &step)?;
    let u_val = st.as_specval(run.lk, u);
    let contains = Formula::Contains {
        set: s.clone(),
        elem: u.clone(),
    };
    let non_member =
        entails(&run.ctx(st), &st.formula, &not_contains(s.clone(), u.clone()), &[]);
    if non_member.is_proved() {
        // (Lock): first acquisition; needs the lock initialized and
        // yields its resource invariant.
        run.prove(
            st,
            &format!("{step}: initialized"),
            &Formula::Initialized(u.clone()),
        )?;
        run.consume(st, &step, &Formula::Lockset(s.clone()))?;
        st.push(Formula::Lockset(SpecVal::union(u_val.clone(), s)));
        st.push(Formula::pred(u_val, "inv", vec![]));
        run.ok(&step, "non-reentrant acquisition".into());
        return Ok(());
    }
    let member = entails(&run.ctx(st), &st.formula, &contains, &[]);
    if member.is_proved() {
        // (Re-Lock): already held; only the multiplicity grows.
        run.consume(st, &step, &Formula::Lockset(s.clone()))?;
        st.push(Formula::Lockset(SpecVal::union(u_val, s)));
        run.ok(&step, "reentrant acquisition".into());
        return Ok(());
    }
    Err(run.stop(
        Status::Unknown,
        &step,
        format!("{contains}"),
        "neither membership nor non-membership of the lockset is provable".into(),
    ))
}

/// (Unlock)/(Re-Unlock): dispatch on the lock's provable multiplicity in
/// the lockset term.
fn unlock(run: &mut Run, st: &mut SymState, u: &Expr) -> StepResult {
    let step = format!("unlock({u})");
    let s = lockset_term(run, st, &step)?;
    let atoms = ms_normalize(&s);
    let mut held: Vec<usize> = Vec::new();
    for (i, a) in atoms.iter().enumerate() {
        let eq = Formula::Pure(Expr::eq(Expr::Spec(a.clone()), u.clone()));
        if entails(&run.ctx(st), &st.formula, &eq, &[]).is_proved() {
            held.push(i);
        }
    }
    match held.len() {
        0 => Err(run.stop(
            Status::Unknown,
            &step,
            format!("{s} contains {u}"),
            "cannot prove the lock is held".into(),
        )),
        n => {
            let rest: Vec<SpecVal> = atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != held[0])
                .map(|(_, a)| a.clone())
                .collect();
            let rest = ms_rebuild(&rest);
            if n >= 2 {
                // (Re-Unlock): still held afterwards.
                run.consume(st, &step, &Formula::Lockset(s.clone()))?;
            } else {
                // (Unlock): the invariant goes back to the lock.
                let u_val = st.as_specval(run.lk, u);
                let need = Formula::star(
                    Formula::Lockset(s.clone()),
                    Formula::pred(u_val, "inv", vec![]),
                );
                run.consume(st, &step, &need)?;
            }
            st.push(Formula::Lockset(rest));
            Ok(())
        }
    }
}

/// (Commit): trade the fresh object and its invariant for an initialized
/// lock outside the lockset.
fn commit(run: &mut Run, st: &mut SymState, w: &Expr) -> StepResult {
    let step = format!("commit({w})");
    let s = lockset_term(run, st, &step)?;
    let w_val = st.as_specval(run.lk, w);
    let need = Formula::star_all([
        Formula::Lockset(s.clone()),
        Formula::pred(w_val, "inv", vec![]),
        Formula::Fresh(w.clone()),
    ]);
    run.consume(st, &step, &need)?;
    st.push(Formula::Lockset(s.clone()));
    st.push(not_contains(s, w.clone()));
    st.push(Formula::Initialized(w.clone()));
    Ok(())
}

/// (While): prove the invariant at entry, verify the body preserves it,
/// continue under invariant and negated guard with the framed remainder
/// (written variables havocked in the frame).
fn while_loop(
    run: &mut Run,
    st: &mut SymState,
    guard: &Expr,
    invariant: &Formula,
    body: &Cmd,
) -> StepResult {
    let step = format!("while ({guard})");
    let frame = {
        let inst = run.consume(st, &format!("{step}: invariant at entry"), invariant)?;
        // Any invariant existentials were instantiated; the loop needs
        // the general invariant from here on.
        let _ = inst;
        std::mem::replace(&mut st.formula, Formula::truth())
    };

    // {Inv & e} body {Inv}
    let mut st_body = st.clone();
    st_body.formula = Formula::star(invariant.clone(), Formula::Pure(guard.clone()));
    let body_post = Post {
        formula: invariant.clone(),
        result: None,
        result_ty: TypeExpr::Void,
    };
    run.trace(&st_body, &format!("{step}: body entry"));
    exec(run, st_body, body, &body_post)?;

    // Continue: frame (with written variables havocked) * Inv * !e.
    let ws = writes(&HeadCmd::While {
        guard: guard.clone(),
        invariant: invariant.clone(),
        body: Box::new(body.clone()),
    });
    let mut map = BTreeMap::new();
    for w in &ws {
        let ty = st.env.vars.get(w).cloned().unwrap_or(TypeExpr::Int);
        let old = st.fresh(ty);
        map.insert(w.clone(), Expr::spec_var(&old));
    }
    st.formula = subst_rw_formula(&frame, &map);
    st.push(invariant.clone());
    st.push_pure(Expr::not(guard.clone()));
    Ok(())
}
