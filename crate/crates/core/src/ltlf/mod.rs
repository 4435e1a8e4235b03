//! LTLf syntax, parsing, normal forms and trace semantics.

mod formula;
mod normal;
mod parser;
mod semantics;

pub use formula::{Formula, Interpretation, Prop, PropSet, Trace};
pub use normal::{canonicalize, to_nnf};
pub use parser::parse;
pub use semantics::{evaluate, holds_on_empty};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtlfError {
    #[error("syntax error at byte {offset}: found {found}, expected one of {expected:?}")]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("invalid proposition name `{0}`")]
    InvalidPropName(String),
    #[error("duplicate proposition `{0}`")]
    DuplicateProp(String),
    #[error("empty trace")]
    EmptyTrace,
}
