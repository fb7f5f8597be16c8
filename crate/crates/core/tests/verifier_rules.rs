//! Golden tests: one minimal program per step rule of the verifier,
//! checking both the verifying shape and the failing shape.

use sepjll_core::lookup::Lookup;
use sepjll_core::parser::parse_program;
use sepjll_core::syntax::ast::ClassTable;
use sepjll_core::syntax::desugar::desugar_groups;
use sepjll_core::verifier::{verify_main, verify_table, Status, Verdict, VerifyOptions};

fn load(src: &str) -> ClassTable {
    desugar_groups(parse_program(src).unwrap().table).with_builtins()
}

fn verify(src: &str) -> Vec<Verdict> {
    let table = load(src);
    let lk = Lookup::new(&table).unwrap();
    verify_table(&lk, &VerifyOptions::default())
}

fn method_verdict<'v>(vs: &'v [Verdict], class: &str, item: &str) -> &'v Verdict {
    vs.iter()
        .find(|v| v.class == class && v.item == item)
        .unwrap_or_else(|| panic!("no verdict for {class}.{item}"))
}

fn assert_verified(vs: &[Verdict], class: &str, item: &str) {
    let v = method_verdict(vs, class, item);
    assert_eq!(
        v.status,
        Status::Verified,
        "{class}.{item}: {:#?}",
        v.obligations
    );
}

fn assert_not_verified(vs: &[Verdict], class: &str, item: &str) {
    let v = method_verdict(vs, class, item);
    assert_ne!(v.status, Status::Verified, "{class}.{item} wrongly verified");
}

#[test]
fn field_set_requires_full_permission() {
    let src = "
class Cell {
  int f;
  void set(int v)
    requires PointsTo(this.f, 1, 0);
    ensures PointsTo(this.f, 1, v);
  { this.f = v; }
  void setHalf(int v)
    requires PointsTo(this.f, 1/2, 0);
    ensures true;
  { this.f = v; }
}
";
    let vs = verify(src);
    assert_verified(&vs, "Cell", "set");
    assert_not_verified(&vs, "Cell", "setHalf");
}

#[test]
fn field_get_needs_any_permission_and_learns_the_value() {
    let src = "
class Cell {
  int f;
  int get()
    requires PointsTo(this.f, 1/2, 7);
    ensures PointsTo(this.f, 1/2, 7) * result == 7;
  {
    int v;
    v = this.f;
    return v;
  }
  int getNone()
    requires true;
    ensures true;
  {
    int v;
    v = this.f;
    return v;
  }
}
";
    let vs = verify(src);
    assert_verified(&vs, "Cell", "get");
    assert_not_verified(&vs, "Cell", "getNone");
}

#[test]
fn var_set_renames_the_old_value() {
    let src = "
class A {
  int swapish(int a)
    requires true;
    ensures result == a + 1;
  {
    int x;
    x = a;
    x = x + 1;
    return x;
  }
}
";
    assert_verified(&verify(src), "A", "swapish");
}

#[test]
fn new_gives_init_classof_inequalities_and_fresh() {
    let src = "
class C { int f; }
class A {
  C mk(C other)
    requires true;
    ensures result != other * result != null;
  {
    C x;
    x = new C;
    fin C y = x;
    assert y isclassof C;
    assert y.init;
    return x;
  }
}
";
    assert_verified(&verify(src), "A", "mk");
}

#[test]
fn sequential_mode_omits_fresh() {
    let src = "
class C { int f; }
class A {
  void mk()
    requires true;
    ensures true;
  {
    C x;
    x = new C;
    commit(x);
  }
}
";
    let table = load(src);
    let lk = Lookup::new(&table).unwrap();
    // In concurrent mode commit needs Lockset and the invariant; here it
    // has neither, so the method must not verify. In sequential mode
    // fresh is absent, so commit cannot apply either.
    let vs = verify_table(
        &lk,
        &VerifyOptions {
            sequential: true,
            ..VerifyOptions::default()
        },
    );
    assert_not_verified(&vs, "A", "mk");
}

#[test]
fn call_consumes_pre_and_assumes_post() {
    let src = "
class Cell {
  int f;
  pred state<int n> = PointsTo(this.f, 1, n);
  void set(int v)
    requires this.state<0>;
    ensures this.state<v>;
  {
    //@ unfold this.state;
    this.f = v;
    //@ fold this.state<v>;
  }
  void caller(Cell c)
    requires c.state<0>;
    ensures c.state<3>;
  {
    _ = c.set(3);
  }
  void callerWrongPost(Cell c)
    requires c.state<0>;
    ensures c.state<4>;
  {
    _ = c.set(3);
  }
  void callerNoPre(Cell c)
    requires true;
    ensures true;
  {
    _ = c.set(3);
  }
}
";
    let vs = verify(src);
    assert_verified(&vs, "Cell", "set");
    assert_verified(&vs, "Cell", "caller");
    assert_not_verified(&vs, "Cell", "callerWrongPost");
    assert_not_verified(&vs, "Cell", "callerNoPre");
}

#[test]
fn call_receiver_must_be_non_null() {
    let src = "
class Cell {
  int f;
  void id()
    requires true;
    ensures true;
  { }
  void callOnNull(Cell c)
    requires true;
    ensures true;
  {
    _ = c.id();
  }
  void callOnKnown(Cell c)
    requires c != null;
    ensures true;
  {
    _ = c.id();
  }
}
";
    let vs = verify(src);
    assert_not_verified(&vs, "Cell", "callOnNull");
    assert_verified(&vs, "Cell", "callOnKnown");
}

#[test]
fn if_splits_on_the_guard() {
    let src = "
class A {
  int abs(int a)
    requires true;
    ensures result >= 0;
  {
    int x;
    if (a < 0) { x = 0 - a; } else { x = a; }
    return x;
  }
  int bad(int a)
    requires true;
    ensures result > 0;
  {
    int x;
    if (a < 0) { x = 0 - a; } else { x = a; }
    return x;
  }
}
";
    let vs = verify(src);
    assert_verified(&vs, "A", "abs");
    assert_not_verified(&vs, "A", "bad");
}

#[test]
fn while_checks_invariant_and_continues_with_negation() {
    let src = "
class A {
  int count(int n)
    requires n >= 0;
    ensures result == 0;
  {
    int i;
    i = n;
    while (i > 0) invariant i >= 0 {
      i = i - 1;
    }
    return i;
  }
  int countBadInv(int n)
    requires n >= 0;
    ensures result == 0;
  {
    int i;
    i = n;
    while (i > 0) invariant i >= 1 {
      i = i - 1;
    }
    return i;
  }
}
";
    let vs = verify(src);
    assert_verified(&vs, "A", "count");
    assert_not_verified(&vs, "A", "countBadInv");
}

#[test]
fn while_havocs_written_variables_in_the_frame() {
    // The frame `x == 0` talks about x before the loop; x is written
    // inside, so the stale fact must not survive for the postcondition.
    let src = "
class A {
  int havoc()
    requires true;
    ensures result == 0;
  {
    int x;
    int i;
    x = 0;
    i = 3;
    while (i > 0) invariant true {
      x = 5;
      i = i - 1;
    }
    return x;
  }
}
";
    assert_not_verified(&verify(src), "A", "havoc");
}

#[test]
fn lock_dispatches_on_provable_non_membership() {
    let src = "
class M {
  int f;
  void sync<lockset S>()
    requires Lockset(S) * ((S contains this) -* false) * initialized(this);
    ensures Lockset(S);
  {
    lock(this);
    unlock(this);
  }
  void undecided<lockset S>()
    requires Lockset(S) * initialized(this);
    ensures Lockset(S);
  {
    lock(this);
    unlock(this);
  }
}
";
    let vs = verify(src);
    assert_verified(&vs, "M", "sync");
    // Membership of `this` in S is neither provable nor refutable.
    let v = method_verdict(&vs, "M", "undecided");
    assert_eq!(v.status, Status::Unknown, "{:#?}", v.obligations);
    let failed = v.obligations.iter().find(|o| !o.proved).unwrap();
    assert!(
        failed.detail.as_deref().unwrap_or("").contains("membership"),
        "{failed:?}"
    );
}

#[test]
fn reentrant_lock_and_unlock_track_multiplicity() {
    let src = "
class M {
  int f;
  void relock<lockset S>()
    requires Lockset(this + S);
    ensures Lockset(this + S);
  {
    lock(this);
    unlock(this);
  }
  void underflow<lockset S>()
    requires Lockset(S) * ((S contains this) -* false) * initialized(this);
    ensures Lockset(S);
  {
    lock(this);
    unlock(this);
    unlock(this);
  }
}
";
    let vs = verify(src);
    assert_verified(&vs, "M", "relock");
    assert_not_verified(&vs, "M", "underflow");
}

#[test]
fn unlock_returns_the_invariant_only_at_the_last_exit() {
    // After the reentrant unlock the lock is still held; the invariant
    // must not be consumed until the final unlock.
    let src = "
class M {
  int f;
  pred inv = PointsTo(this.f, 1, 0);
  void nested<lockset S>()
    requires Lockset(S) * ((S contains this) -* false) * initialized(this);
    ensures Lockset(S);
  {
    lock(this);
    lock(this);
    unlock(this);
    this.f = 0;
    unlock(this);
  }
}
";
    assert_verified(&verify(src), "M", "nested");
}

#[test]
fn commit_initializes_a_fresh_lock() {
    let src = "
class M {
  int f;
  pred inv = PointsTo(this.f, 1, 0);
}
class A {
  M mk<lockset S>()
    requires Lockset(S);
    ensures Lockset(S) * initialized(result);
  {
    M x;
    x = new M;
    //@ unfold x.init;
    //@ fold x.inv;
    commit(x);
    return x;
  }
  M mkNoCommit<lockset S>()
    requires Lockset(S);
    ensures Lockset(S) * initialized(result);
  {
    M x;
    x = new M;
    return x;
  }
}
";
    let vs = verify(src);
    assert_verified(&vs, "A", "mk");
    assert_not_verified(&vs, "A", "mkNoCommit");
}

#[test]
fn assert_proves_and_keeps_the_state() {
    let src = "
class Cell {
  int f;
  void ok()
    requires PointsTo(this.f, 1, 3);
    ensures PointsTo(this.f, 1, 3);
  {
    assert PointsTo(this.f, 1, 3) * 1 + 1 == 2;
  }
  void bad()
    requires PointsTo(this.f, 1, 3);
    ensures PointsTo(this.f, 1, 3);
  {
    assert PointsTo(this.f, 1, 4);
  }
}
";
    let vs = verify(src);
    assert_verified(&vs, "Cell", "ok");
    assert_not_verified(&vs, "Cell", "bad");
}

#[test]
fn axiom_obligations_are_proved_without_class_axioms() {
    let src = "
class P {
  public pred a<int n> = n > 0;
  public pred b<int n> = n > 0;
  axiom fine: this.a<n> *-* this.b<n>;
}
class Q {
  public pred a<int n> = n > 0;
  public pred b<int n> = n > 1;
  axiom bogus: this.a<n> *-* this.b<n>;
}
";
    let vs = verify(src);
    assert_verified(&vs, "P", "axiom fine");
    assert_not_verified(&vs, "Q", "axiom bogus");
}

#[test]
fn builtin_thread_run_verifies() {
    let vs = verify("class Dummy { int f; }");
    assert_verified(&vs, "Thread", "run");
}

#[test]
fn fork_and_join_follow_the_thread_contracts() {
    let src = "
main {
  Thread t;
  t = new Thread;
  //@ unfold t.init;
  fin Thread u = t;
  _ = u.fork<nil>();
  _ = u.join<1>();
  assert u.postJoin<1>;
}
";
    let table = load(src);
    let lk = Lookup::new(&table).unwrap();
    let program = parse_program(src).unwrap();
    let v = verify_main(&lk, program.main.as_ref().unwrap(), &VerifyOptions::default());
    assert_eq!(v.status, Status::Verified, "{:#?}", v.obligations);
}

#[test]
fn double_fork_is_rejected() {
    let src = "
main {
  Thread t;
  t = new Thread;
  //@ unfold t.init;
  _ = t.fork<nil>();
  _ = t.fork<nil>();
}
";
    let table = load(src);
    let lk = Lookup::new(&table).unwrap();
    let program = parse_program(src).unwrap();
    let v = verify_main(&lk, program.main.as_ref().unwrap(), &VerifyOptions::default());
    assert_ne!(v.status, Status::Verified);
}

#[test]
fn run_override_starts_from_lockset_nil_and_proves_postjoin() {
    let src = "
class Worker ext Thread {
  int f;
  pred preFork = PointsTo(this.f, 1, 0);
  group postJoin<perm p> = PointsTo(this.f, p, 1);
  void run()
    requires Lockset(nil) * this.preFork;
    ensures ex lockset S. Lockset(S) * this.postJoin<1>;
  {
    //@ unfold this.preFork;
    this.f = 1;
    //@ fold this.postJoin<1>;
  }
}
";
    let vs = verify(src);
    assert_verified(&vs, "Worker", "run");
    // The splittable postJoin group's soundness axiom is an obligation.
    assert_verified(&vs, "Worker", "axiom postJoin$split");
}
