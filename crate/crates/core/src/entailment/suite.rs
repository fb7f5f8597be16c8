//! Runner for `.ent` entailment suites: each judgment is checked by the
//! prover against its expected verdict.

use serde::{Deserialize, Serialize};

use crate::entailment::prove::{entails, ProofCtx, Verdict};
use crate::lookup::Lookup;
use crate::parser::{EntJudgment, Expectation};
use crate::typecheck::TypeEnv;

/// The result of checking one suite judgment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub line: u32,
    pub expected: Expectation,
    pub proved: bool,
    /// Prover detail when the judgment was not proved.
    pub detail: Option<String>,
    /// Whether the verdict matches the expectation.
    pub pass: bool,
}

/// Options forwarded to the prover.
#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub budget: u64,
    pub unfold_depth: u32,
}

impl Default for SuiteOptions {
    fn default() -> SuiteOptions {
        SuiteOptions {
            budget: 50_000,
            unfold_depth: 8,
        }
    }
}

/// Check every judgment of a suite against a class table.
pub fn run_suite(lk: &Lookup, judgments: &[EntJudgment], opts: SuiteOptions) -> Vec<SuiteOutcome> {
    judgments
        .iter()
        .map(|j| {
            let mut env = TypeEnv::new();
            for (x, t) in &j.decls {
                env.bind(x, t.clone());
            }
            let ctx = ProofCtx::new(lk, &env)
                .with_receiver(j.receiver.clone())
                .with_budget(opts.budget)
                .with_unfold_depth(opts.unfold_depth);
            let verdict = entails(&ctx, &j.antecedent(), &j.consequent, &[]);
            let (proved, detail) = match verdict {
                Verdict::Proved => (true, None),
                Verdict::Unknown(msg) => (false, Some(msg)),
            };
            let pass = proved == (j.expect == Expectation::Holds);
            SuiteOutcome {
                line: j.line,
                expected: j.expect,
                proved,
                detail,
                pass,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_entailment_suite, parse_program};

    #[test]
    fn suite_runner_reports_per_judgment() {
        let table = parse_program(
            "class Cell { int f; public pred state<int n> = PointsTo(this.f, 1, n); }",
        )
        .unwrap()
        .table
        .with_builtins();
        let lk = Lookup::new(&table).unwrap();
        let suite = "
            x: Cell, v: int |- PointsTo(x.f, 1, v) ==> x.state@Cell<v> : holds
            x: Cell, v: int |- PointsTo(x.f, 1/2, v) ==> PointsTo(x.f, 1, v) : unknown
            |- true ==> false : unknown
        ";
        let js = parse_entailment_suite(suite).unwrap();
        let out = run_suite(&lk, &js, SuiteOptions::default());
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|o| o.pass), "{out:?}");
        assert!(out[0].proved && !out[1].proved && !out[2].proved);
    }
}
