//! The bundled `.ent` axiom suites must pass against the bundled table.

use sepjll_core::entailment::{run_suite, SuiteOptions};
use sepjll_core::lookup::Lookup;
use sepjll_core::parser::{parse_entailment_suite, parse_program};
use sepjll_core::syntax::desugar::desugar_groups;

fn suite_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../suites")
        .join(name)
}

fn run(name: &str) {
    let table_src = std::fs::read_to_string(suite_path("axioms.jll")).unwrap();
    let table = desugar_groups(parse_program(&table_src).unwrap().table).with_builtins();
    let lk = Lookup::new(&table).unwrap();
    let suite_src = std::fs::read_to_string(suite_path(name)).unwrap();
    let judgments = parse_entailment_suite(&suite_src).unwrap();
    assert!(!judgments.is_empty());
    let outcomes = run_suite(&lk, &judgments, SuiteOptions::default());
    let failures: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| {
            format!(
                "{name}:{}: expected {:?}, proved={} ({})",
                o.line,
                o.expected,
                o.proved,
                o.detail.as_deref().unwrap_or("-")
            )
        })
        .collect();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn heap_axiom_suite_passes() {
    run("heap_axioms.ent");
}

#[test]
fn lock_axiom_suite_passes() {
    run("lock_axioms.ent");
}
