//! Static verifier and dynamic-semantics interpreter for JLL, a Java-like
//! model language with permission-based separation-logic contracts.
//!
//! The crate is organized as a pipeline:
//!
//! * [`syntax`] — AST, substitution, free variables, derived-form expansion.
//! * [`parser`] — concrete syntax for `.jll` programs and `.ent` suites.
//! * [`lookup`] — class-table lookup functions, subtyping, spec-value
//!   equivalence.
//! * [`typecheck`] — typing judgments and class-table well-formedness.
//! * [`model`] — augmented heaps, the forcing relation, and a finite-model
//!   enumeration oracle.
//! * [`entailment`] — a sound, incomplete logical-consequence prover with
//!   frame subtraction.
//! * [`verifier`] — symbolic execution of method bodies against their
//!   contracts.
//! * [`interpreter`] — executable small-step semantics with a seeded
//!   scheduler and dynamic race/null/monitor oracles.
//! * [`report`] — deterministic, machine-readable result reporting.

pub mod entailment;
pub mod interpreter;
pub mod lookup;
pub mod model;
pub mod parser;
pub mod report;
pub mod syntax;
pub mod typecheck;
pub mod verifier;

pub use syntax::ast::{ClassTable, Cmd, Expr, Formula, HeadCmd, Program, SpecVal, TypeExpr};
