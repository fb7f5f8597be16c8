//! Semantic models: dyadic permissions, augmented heaps, expression
//! evaluation, the bounded forcing relation, and exhaustive enumeration
//! of small models for oracle checks.

pub mod binfrac;
pub mod enumerate;
pub mod eval;
pub mod forcing;
pub mod heap;
pub mod perm;

pub use binfrac::{scalar_mult, sem_binfrac, BinFrac};
pub use enumerate::{enumerate_models, ModelBounds, Universe};
pub use eval::{eval_expr, eval_op, eval_specval, value_has_type, Stack};
pub use forcing::{holds, ForceCfg};
pub use heap::{AugHeap, CellKey, ObjRec};
pub use perm::{sem_perm, Perm};
