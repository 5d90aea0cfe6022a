//! Datalog with explicit negative literals.
//!
//! Negation is carried by "negative twin" atoms: `~big(bob)` is an ordinary
//! atom of the twin of `big`. Rules may conclude and require twins. The
//! closed-world assumption is applied only when answering a negative query.

mod ast;
mod eval;
mod stratify;

pub use ast::{is_identifier, Literal, Polarity, Program, Rule, Term};
pub use eval::{answer, evaluate, proof_depth, Model};
pub use stratify::{stratify, Stratum};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("predicate `{predicate}` has arity {arity}; only 1 or 2 is supported")]
    BadArity { predicate: String, arity: usize },
    #[error("predicate `{predicate}` used with arity {found}, previously {expected}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("rule with head `{0}` has an empty body")]
    EmptyBody(String),
    #[error("`{0}` must be ground")]
    NonGround(String),
    #[error("rule {index} is unsafe: variable {variable} does not occur in the body")]
    UnsafeRule { index: usize, variable: String },
    #[error("program is not stratifiable: negative dependency on a cycle through {}", cycle.join(", "))]
    Unstratifiable { cycle: Vec<String> },
    #[error("both {literal} and its negation hold")]
    Inconsistency { literal: Literal },
}
