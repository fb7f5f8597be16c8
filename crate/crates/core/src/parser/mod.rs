//! Concrete syntax for `.jll` source files (programs, contracts, hints)
//! and `.ent` entailment-suite files.

pub mod ent;
pub mod lexer;
#[allow(clippy::module_inception)]
pub mod parser;

pub use ent::{parse_entailment_suite, EntJudgment, Expectation};
pub use parser::{parse_formula, parse_program, ParseError};
