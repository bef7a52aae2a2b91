//! Rule language: tokens, abstract syntax, parser, printer and name checks.

pub mod ast;
pub mod format;
pub mod lexer;
pub mod parser;
pub mod resolve;

pub use ast::*;
pub use format::{format_condition, format_obligation, format_rule, format_ruleset};
pub use lexer::{tokenize, LexError, Position};
pub use parser::{
    parse_ruleset, parse_unchecked, ParseError, ParseErrorKind, SourceDiagnostic, SourceMap,
};
pub use resolve::validate;
