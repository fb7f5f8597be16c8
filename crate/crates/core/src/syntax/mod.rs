//! Abstract syntax for JLL programs and formulas, plus the purely syntactic
//! operations on them: substitution, free-variable analysis, `bind`
//! sequencing, group desugaring, and derived-form expansion.

pub mod ast;
pub mod bind;
pub mod builtins;
pub mod desugar;
pub mod fv;
pub mod pretty;
pub mod subst;

pub use ast::*;
pub use subst::{FreshSupply, Subst};
