//! Template grammar for filter, highlight and toggle commands, typed or
//! dictated. Text in, [`CommandAst`] out.

mod ast;
mod parser;

pub use ast::{CommandAst, CompareOp, Predicate};
pub use parser::{
    parse_command, parse_quantity, resolve_attribute, Vocabulary, COMPARISON_PHRASES,
};

use thiserror::Error;

use crate::chart::AttributeKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    /// The grammar rule `rule` failed after the words in `matched`.
    #[error("unrecognized command: rule `{rule}` failed after \"{matched}\" (at \"{rest}\")")]
    Unrecognized {
        matched: String,
        rule: &'static str,
        rest: String,
    },
    #[error("'{0}' is not a number")]
    NotANumber(String),
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),
    #[error("ambiguous attribute '{token}': could be {candidates:?}")]
    AmbiguousAttribute {
        token: String,
        candidates: Vec<String>,
    },
    #[error("no category named '{0}'")]
    UnknownCategory(String),
    #[error("ambiguous attribute: '{value}' is a value of {attributes:?}")]
    AmbiguousCategory {
        value: String,
        attributes: Vec<String>,
    },
    #[error("ambiguous attribute: expected exactly one monetary attribute, found {candidates:?}")]
    AmbiguousImplicitAttribute { candidates: Vec<String> },
    #[error("missing attribute before '{0}'")]
    MissingAttribute(String),
    #[error("attribute '{attribute}' must be {expected}")]
    KindMismatch {
        attribute: String,
        expected: AttributeKind,
    },
    #[error("empty conjunction")]
    EmptyConjunction,
}

#[cfg(test)]
mod tests;
