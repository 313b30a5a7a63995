//! HyQL: conjunctive SELECT/WHERE queries with LET/GET subqueries.
//!
//! ```
//! let q = hyperkb::hyql::parse(
//!     "SELECT Model WHERE Run achieves Classification AND Run hasOutput Model",
//! ).unwrap();
//! assert_eq!(q.select, ["Model"]);
//! assert_eq!(q.link_pattern_count(), 2);
//! ```

mod ast;
mod lexer;
mod parser;
mod pretty;

use std::fmt;

pub use ast::{Condition, LetBinding, Operand, Query};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    IllegalChar(char),
    UnterminatedString,
    BadEscape(char),
    Syntax { expected: String, found: String },
    Semantic(String),
}

/// Parse failure with its 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.col)?;
        match &self.kind {
            ParseErrorKind::IllegalChar(c) => write!(f, "illegal character {c:?}"),
            ParseErrorKind::UnterminatedString => f.write_str("unterminated string"),
            ParseErrorKind::BadEscape(c) => write!(f, "unknown escape \\{c}"),
            ParseErrorKind::Syntax { expected, found } => {
                write!(f, "expected {expected}, found {found}")
            }
            ParseErrorKind::Semantic(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for ParseError {}
