//! Name resolution and evaluation of HyQL queries over a snapshot.
//!
//! [`resolve`] classifies every identifier against the store; [`evaluate`]
//! answers the query with index-driven joins; [`oracle_evaluate`] answers it
//! by brute-force enumeration and exists to check the former.

mod engine;
mod functions;
mod oracle;
mod resolve;
mod results;

pub use engine::evaluate;
pub use functions::{similarity, FunctionDef, FunctionRegistry, FEATURES_PROPERTY};
pub use oracle::{oracle_evaluate, ORACLE_LIMIT};
pub use resolve::{resolve, Domain, RCondition, RTerm, ResolvedLet, ResolvedQuery, Scope, Variable};
pub use results::{OutputFormat, ResultSet};

use crate::hyql::{self, ParseError};
use crate::model::{EntityId, LiteralKind};
use crate::store::KbState;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unknown connector `{0}`")]
    UnknownConnector(String),
    #[error("`{0}` names no LET set, individual or concept")]
    Unresolved(String),
    #[error("`{name}` is ambiguous: {candidates:?}")]
    Ambiguous { name: String, candidates: Vec<EntityId> },
    #[error("LET name `{0}` shadows a concept")]
    ShadowsConcept(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{function}` takes {expected} arguments, got {found}")]
    Arity {
        function: String,
        expected: usize,
        found: usize,
    },
    #[error("function `{0}` is already registered")]
    DuplicateFunction(String),
    #[error("in `{condition}`: {entity} has a {found} value, compared with a {expected} literal")]
    KindMismatch {
        condition: String,
        entity: String,
        found: LiteralKind,
        expected: LiteralKind,
    },
    #[error("function `{function}` returns {returns}, compared with a {expected} literal")]
    ReturnKind {
        function: String,
        returns: LiteralKind,
        expected: LiteralKind,
    },
    #[error("function `{function}` failed: {message}")]
    Function { function: String, message: String },
    #[error("query was resolved at generation {resolved}, snapshot is at {current}")]
    Stale { resolved: u64, current: u64 },
    #[error("oracle refuses {0} candidate tuples")]
    TooLarge(u128),
}

/// Any failure of [`run_query`].
#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Parse, resolve and evaluate in one go.
pub fn run_query(text: &str, state: &KbState, registry: &FunctionRegistry) -> Result<ResultSet, QueryError> {
    let ast = hyql::parse(text)?;
    let resolved = resolve(&ast, state, registry)?;
    Ok(evaluate(&resolved, state, registry)?)
}
