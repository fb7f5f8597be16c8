//! Model-checked soundness of the prover: for every judgment of the
//! bundled suites that the prover establishes, every enumerated small
//! model of the antecedent must satisfy the consequent. Judgments using
//! bounded connectives (wands, universals) are outside the oracle's
//! fragment and are skipped syntactically.

use std::collections::BTreeMap;

use sepjll_core::entailment::{run_suite, SuiteOptions};
use sepjll_core::lookup::Lookup;
use sepjll_core::model::{enumerate_models, holds, ForceCfg, ModelBounds, Perm, Stack, Universe};
use sepjll_core::parser::{parse_entailment_suite, parse_program, EntJudgment};
use sepjll_core::syntax::ast::*;

fn suite_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../suites")
        .join(name)
}

fn load_table() -> ClassTable {
    let src = std::fs::read_to_string(suite_path("axioms.jll")).unwrap();
    parse_program(&src).unwrap().table.with_builtins()
}

/// Whether the formula stays in the fragment the bounded oracle decides
/// exactly (no wands or universals, also via derived forms).
fn oracle_exact(f: &Formula) -> bool {
    match f {
        Formula::Wand(..)
        | Formula::Iff(..)
        | Formula::Assures(..)
        | Formula::IsPartOf(..) => false,
        Formula::Quant { kind, body, .. } => *kind == QuantKind::Ex && oracle_exact(body),
        Formula::Star(a, b) | Formula::And(a, b) | Formula::Or(a, b) => {
            oracle_exact(a) && oracle_exact(b)
        }
        _ => true,
    }
}

fn bounds() -> ModelBounds {
    ModelBounds {
        objects: vec![
            (1, TypeExpr::simple("C")),
            (2, TypeExpr::simple("Cell")),
            (3, TypeExpr::simple("Pair")),
        ],
        ints: vec![0, 1],
        perm_grid: vec![Perm::pow2(1), Perm::ONE],
        ..ModelBounds::default()
    }
}

/// Whether the formula halves a permission anywhere; such judgments need
/// the finer 1/8 star-split grid (stack permissions go down to 1/4).
fn halves_perm(f: &Formula) -> bool {
    fn split(v: &SpecVal) -> bool {
        matches!(v, SpecVal::Split(_))
    }
    match f {
        Formula::PointsTo { perm, .. }
        | Formula::PointsToTy { perm, .. }
        | Formula::PermAtom { perm, .. }
        | Formula::Join { perm, .. } => split(perm),
        Formula::PredApp { recv, args, .. } => split(recv) || args.iter().any(split),
        Formula::Star(a, b)
        | Formula::Wand(a, b)
        | Formula::Iff(a, b)
        | Formula::Assures(a, b)
        | Formula::IsPartOf(a, b)
        | Formula::And(a, b)
        | Formula::Or(a, b) => halves_perm(a) || halves_perm(b),
        Formula::Quant { body, .. } => halves_perm(body),
        _ => false,
    }
}

/// All stacks assigning in-bounds values to the declared variables.
fn stacks(lk: &Lookup, b: &ModelBounds, decls: &[(Ident, TypeExpr)]) -> Vec<Stack> {
    let mut out: Vec<Stack> = vec![BTreeMap::new()];
    for (x, ty) in decls {
        let vals = b.values_of_type(lk, ty, 2);
        let mut next = Vec::with_capacity(out.len() * vals.len());
        for s in &out {
            for v in &vals {
                let mut s2 = s.clone();
                s2.insert(x.clone(), v.clone());
                next.push(s2);
            }
        }
        out = next;
        if out.len() > 5_000 {
            return Vec::new(); // too many combinations; skip judgment
        }
    }
    out
}

#[test]
fn proved_suite_judgments_hold_in_all_small_models() {
    let table = load_table();
    let lk = Lookup::new(&table).unwrap();
    let b = bounds();
    let models = enumerate_models(&lk, &b);
    assert!(!models.is_empty());
    let universe = Universe::new(&lk, b.clone());

    let mut judgments: Vec<EntJudgment> = Vec::new();
    for name in ["heap_axioms.ent", "lock_axioms.ent"] {
        let src = std::fs::read_to_string(suite_path(name)).unwrap();
        judgments.extend(parse_entailment_suite(&src).unwrap());
    }
    let outcomes = run_suite(&lk, &judgments, SuiteOptions::default());

    let mut checked = 0usize;
    let mut ante_hits = 0usize;
    for (j, o) in judgments.iter().zip(&outcomes) {
        if !o.proved {
            continue;
        }
        let ante = j.antecedent();
        let cons = j.consequent.clone();
        if !oracle_exact(&ante) || !oracle_exact(&cons) {
            continue;
        }
        // A receiver-scoped judgment assumes a non-null `this`, as in a
        // verified method body.
        let mut ss = stacks(&lk, &b, &j.decls);
        if let Some(recv) = &j.receiver {
            ss.retain(|s| {
                !matches!(
                    sepjll_core::model::eval_specval(recv, s),
                    Some(SpecVal::Null) | None
                )
            });
        }
        if ss.is_empty() {
            continue;
        }
        checked += 1;
        let mut cfg = ForceCfg::new(&lk, &universe);
        if halves_perm(&ante) || halves_perm(&cons) {
            cfg.grid_log = 3;
        }
        for ah in &models {
            for s in &ss {
                if holds(&cfg, ah, s, &ante) {
                    ante_hits += 1;
                    assert!(
                        holds(&cfg, ah, s, &cons),
                        "countermodel at suite line {}: heap {ah:?} stack {s:?}",
                        j.line
                    );
                }
            }
        }
        assert!(!cfg.bounded.get(), "line {}: bounded connective slipped in", j.line);
    }
    // The oracle must actually have exercised judgments and models.
    assert!(checked >= 10, "only {checked} judgments were model-checked");
    assert!(ante_hits > 100, "only {ante_hits} antecedent models seen");
}

#[test]
fn oracle_refutes_an_invalid_strengthening() {
    let table = load_table();
    let lk = Lookup::new(&table).unwrap();
    let b = bounds();
    let models = enumerate_models(&lk, &b);
    let universe = Universe::new(&lk, b.clone());
    let cfg = ForceCfg::new(&lk, &universe);
    let ante = sepjll_core::parser::parse_formula("PointsTo(x.f, p, v)").unwrap();
    let cons = sepjll_core::parser::parse_formula("PointsTo(x.f, 1, v)").unwrap();
    let decls = vec![
        ("x".to_string(), TypeExpr::simple("Cell")),
        ("p".to_string(), TypeExpr::Perm),
        ("v".to_string(), TypeExpr::Int),
    ];
    let found = stacks(&lk, &b, &decls).iter().any(|s| {
        models
            .iter()
            .any(|ah| holds(&cfg, ah, s, &ante) && !holds(&cfg, ah, s, &cons))
    });
    assert!(found, "expected a countermodel for the permission upgrade");
}
