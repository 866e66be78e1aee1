//! Lexing, parsing and pretty-printing of ECA source.

pub mod ast;
pub mod json;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use ast::*;
pub use lexer::{tokenize, LexError, Token, TokenClass, TokenKind};
pub use parser::{parse, parse_source, parse_with_stats, ParseError, ParseStats, SyntaxError, MAX_LOOKAHEAD};
pub use pretty::{expr_to_string, pretty_print};
pub use json::{expr_to_json, program_to_json, stmt_to_json};
