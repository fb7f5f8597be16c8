//! Entailment checking between separation-logic formulas: symbolic
//! normal form, a pure constraint solver, and a proof search that
//! subtracts consequents from antecedents.

pub mod prove;
pub mod smt;
pub mod solve;
pub mod suite;
pub mod sym;

pub use prove::{entails, frame_subtract, open_pred, ProofCtx, Subtraction, Verdict};
pub use smt::smtlib_query;
pub use solve::{pure_implies, pure_refutes, pure_solve, PureCtx, PureVerdict};
pub use suite::{run_suite, SuiteOptions, SuiteOutcome};
pub use sym::{
    normalize_cases, normalize_single, NormCtx, PermBase, PureAtom, SpatialAtom, SymFormula,
    SymPerm,
};
