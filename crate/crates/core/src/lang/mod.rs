//! The TL language: tree, lexer, parser, printer and tree surgery.

mod edit;
pub mod lexer;
pub mod node;
mod parser;
mod printer;

pub use edit::{anonymize_names, fresh_name, merge_programs, MergeConflict};
pub use lexer::{quote, token_count};
pub use node::{Modifiers, Node, NodeId, NodeKind, SourceSpan, SyntaxTree, UnknownNode};
pub use parser::{parse, parse_expr, parse_type};
pub use printer::{print, print_expr, print_skeleton, print_type, PrintError};

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

impl ParseError {
    pub fn new(span: SourceSpan, message: impl Into<String>) -> ParseError {
        ParseError { span, message: message.into() }
    }

    /// `line:col: message` relative to `src`.
    pub fn render(&self, src: &str) -> String {
        let (l, c) = self.span.line_col(src);
        format!("{l}:{c}: {}", self.message)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (at byte {})", self.message, self.span.start)
    }
}
